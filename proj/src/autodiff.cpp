#include "machan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace machan::ad {

using machan::to_string;

const char *to_string(OpKind kind) {
    switch (kind) {
    case OpKind::constant: return "constant";
    case OpKind::parameter: return "parameter";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::hadamard: return "hadamard";
    case OpKind::tanh: return "tanh";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::softmax: return "softmax";
    case OpKind::concat: return "concat";
    case OpKind::mse: return "mse";
    case OpKind::pick: return "pick";
    case OpKind::scale: return "scale";
    case OpKind::straight_through: return "straight_through";
    case OpKind::mask_fill: return "mask_fill";
    case OpKind::sum: return "sum";
    case OpKind::mul_scalar: return "mul_scalar";
    }
    return "?";
}

// ---------------------------------------------------------------- ParamSet

std::size_t ParamSet::add(std::string name, Tensor value) {
    if (contains(name)) throw std::invalid_argument("duplicate parameter name " + name);
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(value));
    return tensors_.size() - 1;
}

std::size_t ParamSet::index_of(const std::string &name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw std::out_of_range("unknown parameter " + name);
    return static_cast<std::size_t>(it - names_.begin());
}

bool ParamSet::contains(const std::string &name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto &t : tensors_) n += t.size();
    return n;
}

// --------------------------------------------------------------- Gradients

Gradients Gradients::zeros_like(const ParamSet &params) {
    Gradients g;
    g.grads_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) g.grads_.emplace_back(params[i].shape());
    return g;
}

void Gradients::add(const Gradients &other) {
    if (other.size() != size()) throw DimensionError("gradient sets differ in size");
    for (std::size_t p = 0; p < size(); ++p) {
        auto dst = grads_[p].values();
        auto src = other.grads_[p].values();
        if (dst.size() != src.size()) throw DimensionError("gradient shapes differ for parameter " + std::to_string(p));
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
}

void Gradients::scale(double factor) {
    for (auto &g : grads_)
        for (auto &v : g.values()) v *= factor;
}

double Gradients::l2_norm() const {
    double acc = 0.0;
    for (const auto &g : grads_)
        for (double v : g.values()) acc += v * v;
    return std::sqrt(acc);
}

// -------------------------------------------------------------------- Tape

NodeId Tape::constant(Tensor value) {
    TapeNode n;
    n.kind = OpKind::constant;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

NodeId Tape::parameter(const ParamSet &params, std::size_t id) {
    TapeNode n;
    n.kind = OpKind::parameter;
    n.external = &params[id];
    n.param_id = id;
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

const Tensor &Tape::value(NodeId id) const {
    const auto &n = nodes_.at(id);
    return n.external ? *n.external : n.value;
}

NodeId Tape::push(TapeNode node) {
    for (auto p : node.parents)
        if (p >= nodes_.size()) throw std::logic_error("tape parent refers to a later node");
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
}

// ----------------------------------------------------------------- helpers

double sigmoid_value(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> softmax_values(std::span<const double> logits) {
    if (logits.empty()) throw DimensionError("softmax of empty vector");
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        z += out[i];
    }
    for (auto &v : out) v /= z;
    return out;
}

namespace {

struct MatmulDims {
    std::size_t r, k, c;
    bool a_vec, b_vec;
};

MatmulDims matmul_dims(const Tensor &a, const Tensor &b) {
    if (a.rank() > 2 || b.rank() > 2) throw DimensionError("matmul supports rank 1 and 2 only");
    MatmulDims d{};
    d.a_vec = a.rank() == 1;
    d.b_vec = b.rank() == 1;
    d.r = d.a_vec ? 1 : a.shape()[0];
    std::size_t ka = d.a_vec ? a.shape()[0] : a.shape()[1];
    std::size_t kb = b.shape()[0];
    d.c = d.b_vec ? 1 : b.shape()[1];
    if (ka != kb) {
        throw DimensionError("matmul inner extents differ: " + to_string(a.shape()) + " * " +
                             to_string(b.shape()));
    }
    d.k = ka;
    return d;
}

void require_same_shape(const Tensor &a, const Tensor &b, const char *op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                             to_string(b.shape()));
    }
}

void require_vector(const Tensor &t, const char *op) {
    if (t.rank() != 1) throw DimensionError(std::string(op) + ": expected a vector, got " + to_string(t.shape()));
}

TapeNode make_node(OpKind kind, std::vector<NodeId> parents, Tensor value) {
    TapeNode n;
    n.kind = kind;
    n.parents = std::move(parents);
    n.value = std::move(value);
    return n;
}

template <typename F>
NodeId unary(Tape &tape, OpKind kind, NodeId x, F f) {
    const auto &in = tape.value(x);
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
    return tape.push(make_node(kind, {x}, Tensor(in.shape(), std::move(out))));
}

}  // namespace

// --------------------------------------------------------------------- ops

NodeId matmul(Tape &tape, NodeId a, NodeId b) {
    const auto &A = tape.value(a);
    const auto &B = tape.value(b);
    auto d = matmul_dims(A, B);
    std::vector<double> out(d.r * d.c, 0.0);
    auto av = A.values();
    auto bv = B.values();
    for (std::size_t i = 0; i < d.r; ++i) {
        for (std::size_t p = 0; p < d.k; ++p) {
            double aip = av[i * d.k + p];
            if (aip == 0.0) continue;
            const double *brow = bv.data() + p * d.c;
            double *orow = out.data() + i * d.c;
            for (std::size_t j = 0; j < d.c; ++j) orow[j] += aip * brow[j];
        }
    }
    Shape shape;
    if (d.a_vec && d.b_vec) shape = {1};
    else if (d.a_vec) shape = {d.c};
    else if (d.b_vec) shape = {d.r};
    else shape = {d.r, d.c};
    return tape.push(make_node(OpKind::matmul, {a, b}, Tensor(std::move(shape), std::move(out))));
}

NodeId elementwise(Tape &tape, Elementwise kind, std::span<const NodeId> args) {
    switch (kind) {
    case Elementwise::tanh:
        if (args.size() != 1) throw std::invalid_argument("tanh takes one operand");
        return unary(tape, OpKind::tanh, args[0], [](double v) { return std::tanh(v); });
    case Elementwise::sigmoid:
        if (args.size() != 1) throw std::invalid_argument("sigmoid takes one operand");
        return unary(tape, OpKind::sigmoid, args[0], sigmoid_value);
    case Elementwise::add:
    case Elementwise::hadamard: {
        if (args.size() != 2) throw std::invalid_argument("binary elementwise op takes two operands");
        const auto &a = tape.value(args[0]);
        const auto &b = tape.value(args[1]);
        bool is_add = kind == Elementwise::add;
        require_same_shape(a, b, is_add ? "add" : "hadamard");
        std::vector<double> out(a.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = is_add ? a[i] + b[i] : a[i] * b[i];
        return tape.push(make_node(is_add ? OpKind::add : OpKind::hadamard, {args[0], args[1]},
                                   Tensor(a.shape(), std::move(out))));
    }
    }
    throw std::logic_error("unknown elementwise kind");
}

NodeId add(Tape &tape, NodeId a, NodeId b) {
    NodeId args[] = {a, b};
    return elementwise(tape, Elementwise::add, args);
}

NodeId hadamard(Tape &tape, NodeId a, NodeId b) {
    NodeId args[] = {a, b};
    return elementwise(tape, Elementwise::hadamard, args);
}

NodeId tanh(Tape &tape, NodeId x) { return elementwise(tape, Elementwise::tanh, std::span(&x, 1)); }

NodeId sigmoid(Tape &tape, NodeId x) { return elementwise(tape, Elementwise::sigmoid, std::span(&x, 1)); }

NodeId softmax(Tape &tape, NodeId logits) {
    const auto &in = tape.value(logits);
    require_vector(in, "softmax");
    return tape.push(make_node(OpKind::softmax, {logits}, Tensor(in.shape(), softmax_values(in.values()))));
}

NodeId concat(Tape &tape, std::span<const NodeId> parts) {
    if (parts.empty()) throw std::invalid_argument("concat needs at least one part");
    std::vector<double> out;
    for (auto p : parts) {
        const auto &t = tape.value(p);
        require_vector(t, "concat");
        out.insert(out.end(), t.values().begin(), t.values().end());
    }
    return tape.push(make_node(OpKind::concat, std::vector<NodeId>(parts.begin(), parts.end()),
                               Tensor::vector(std::move(out))));
}

NodeId mse(Tape &tape, NodeId pred, NodeId target) {
    const auto &p = tape.value(pred);
    const auto &t = tape.value(target);
    require_same_shape(p, t, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double d = p[i] - t[i];
        acc += d * d;
    }
    return tape.push(make_node(OpKind::mse, {pred, target}, Tensor::scalar(acc / static_cast<double>(p.size()))));
}

NodeId pick(Tape &tape, NodeId x, std::size_t i) {
    const auto &in = tape.value(x);
    require_vector(in, "pick");
    if (i >= in.size()) throw DimensionError("pick index out of range");
    auto n = make_node(OpKind::pick, {x}, Tensor::scalar(in[i]));
    n.index = i;
    return tape.push(std::move(n));
}

NodeId scale(Tape &tape, NodeId s, NodeId x) {
    const auto &sv = tape.value(s);
    const auto &xv = tape.value(x);
    if (sv.size() != 1) throw DimensionError("scale factor must hold one element");
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sv[0] * xv[i];
    return tape.push(make_node(OpKind::scale, {s, x}, Tensor(xv.shape(), std::move(out))));
}

NodeId straight_through(Tape &tape, NodeId weights, std::size_t index, NodeId h) {
    const auto &w = tape.value(weights);
    require_vector(w, "straight_through");
    if (index >= w.size()) throw DimensionError("straight_through index out of range");
    auto n = make_node(OpKind::straight_through, {weights, h}, tape.value(h));
    n.index = index;
    return tape.push(std::move(n));
}

NodeId mask_fill(Tape &tape, NodeId x, std::vector<bool> keep, double fill) {
    const auto &in = tape.value(x);
    if (keep.size() != in.size()) throw DimensionError("mask length differs from operand");
    std::vector<double> out(in.values().begin(), in.values().end());
    for (std::size_t i = 0; i < out.size(); ++i)
        if (!keep[i]) out[i] = fill;
    auto n = make_node(OpKind::mask_fill, {x}, Tensor(in.shape(), std::move(out)));
    n.mask = std::move(keep);
    n.scalar = fill;
    return tape.push(std::move(n));
}

NodeId sum(Tape &tape, NodeId x) {
    double acc = 0.0;
    for (double v : tape.value(x).values()) acc += v;
    return tape.push(make_node(OpKind::sum, {x}, Tensor::scalar(acc)));
}

NodeId mul_scalar(Tape &tape, NodeId x, double factor) {
    const auto &in = tape.value(x);
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * in[i];
    auto n = make_node(OpKind::mul_scalar, {x}, Tensor(in.shape(), std::move(out)));
    n.scalar = factor;
    return tape.push(std::move(n));
}

// ---------------------------------------------------------------- backward

Gradients backward(const Tape &tape, NodeId loss, const ParamSet &params) {
    if (loss >= tape.size()) throw std::out_of_range("loss node not on tape");
    if (tape.value(loss).size() != 1) {
        throw DimensionError("backward needs a scalar loss, got " + to_string(tape.value(loss).shape()));
    }

    std::vector<std::vector<double>> grad(loss + 1);
    auto acc = [&](NodeId id) -> std::vector<double> & {
        auto &g = grad[id];
        if (g.empty()) g.assign(tape.value(id).size(), 0.0);
        return g;
    };
    grad[loss] = {1.0};

    auto out = Gradients::zeros_like(params);

    for (NodeId id = loss + 1; id-- > 0;) {
        if (grad[id].empty()) continue;
        const auto &g = grad[id];
        const auto &node = tape.node(id);
        const auto &y = tape.value(id);

        switch (node.kind) {
        case OpKind::constant:
            break;
        case OpKind::parameter: {
            if (node.external != &params[node.param_id]) {
                throw std::invalid_argument("tape parameter does not belong to the given ParamSet");
            }
            auto dst = out[node.param_id].values();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
            break;
        }
        case OpKind::matmul: {
            NodeId a = node.parents[0], b = node.parents[1];
            const auto &A = tape.value(a);
            const auto &B = tape.value(b);
            auto d = matmul_dims(A, B);
            auto av = A.values();
            auto bv = B.values();
            auto &ga = acc(a);
            for (std::size_t i = 0; i < d.r; ++i)
                for (std::size_t p = 0; p < d.k; ++p) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < d.c; ++j) s += g[i * d.c + j] * bv[p * d.c + j];
                    ga[i * d.k + p] += s;
                }
            auto &gb = acc(b);
            for (std::size_t i = 0; i < d.r; ++i)
                for (std::size_t p = 0; p < d.k; ++p) {
                    double aip = av[i * d.k + p];
                    if (aip == 0.0) continue;
                    for (std::size_t j = 0; j < d.c; ++j) gb[p * d.c + j] += aip * g[i * d.c + j];
                }
            break;
        }
        case OpKind::add: {
            for (NodeId p : node.parents) {
                auto &gp = acc(p);
                for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
            }
            break;
        }
        case OpKind::hadamard: {
            NodeId a = node.parents[0], b = node.parents[1];
            const auto &A = tape.value(a);
            const auto &B = tape.value(b);
            auto &ga = acc(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
            auto &gb = acc(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
            break;
        }
        case OpKind::tanh: {
            auto &gx = acc(node.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
            break;
        }
        case OpKind::sigmoid: {
            auto &gx = acc(node.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
            break;
        }
        case OpKind::softmax: {
            double dot = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
            auto &gx = acc(node.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += y[i] * (g[i] - dot);
            break;
        }
        case OpKind::concat: {
            std::size_t offset = 0;
            for (NodeId p : node.parents) {
                auto &gp = acc(p);
                for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
                offset += gp.size();
            }
            break;
        }
        case OpKind::mse: {
            NodeId pn = node.parents[0], tn = node.parents[1];
            const auto &P = tape.value(pn);
            const auto &T = tape.value(tn);
            double k = static_cast<double>(P.size());
            auto &gp = acc(pn);
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[0] * 2.0 * (P[i] - T[i]) / k;
            auto &gt = acc(tn);
            for (std::size_t i = 0; i < gt.size(); ++i) gt[i] -= g[0] * 2.0 * (P[i] - T[i]) / k;
            break;
        }
        case OpKind::pick: {
            acc(node.parents[0])[node.index] += g[0];
            break;
        }
        case OpKind::scale: {
            NodeId s = node.parents[0], x = node.parents[1];
            const auto &S = tape.value(s);
            const auto &X = tape.value(x);
            double ds = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) ds += g[i] * X[i];
            acc(s)[0] += ds;
            auto &gx = acc(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += S[0] * g[i];
            break;
        }
        case OpKind::straight_through: {
            NodeId w = node.parents[0], h = node.parents[1];
            const auto &W = tape.value(w);
            const auto &H = tape.value(h);
            double dw = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) dw += g[i] * H[i];
            acc(w)[node.index] += dw;
            auto &gh = acc(h);
            for (std::size_t i = 0; i < g.size(); ++i) gh[i] += W[node.index] * g[i];
            break;
        }
        case OpKind::mask_fill: {
            auto &gx = acc(node.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (node.mask[i]) gx[i] += g[i];
            break;
        }
        case OpKind::sum: {
            auto &gx = acc(node.parents[0]);
            for (auto &v : gx) v += g[0];
            break;
        }
        case OpKind::mul_scalar: {
            auto &gx = acc(node.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += node.scalar * g[i];
            break;
        }
        }
    }
    return out;
}

}  // namespace machan::ad
