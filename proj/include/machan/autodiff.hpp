#pragma once

// Reverse-mode differentiation over dense tensors.
//
// A Tape records one forward pass as a topologically ordered list of
// nodes. Parameters live in a ParamSet owned by the caller; the tape only
// references them, so a forward over a large model does not copy weights.
// backward() walks the tape once in reverse and returns one gradient per
// registered parameter.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "machan/tensor.hpp"

namespace machan::ad {

using NodeId = std::size_t;

enum class OpKind {
    constant,
    parameter,
    matmul,
    add,
    hadamard,
    tanh,
    sigmoid,
    softmax,
    concat,
    mse,
    pick,
    scale,
    straight_through,
    mask_fill,
    sum,
    mul_scalar,
};

const char *to_string(OpKind kind);

/// Named, ordered collection of learnable tensors. Ids are insertion indices.
class ParamSet {
public:
    std::size_t add(std::string name, Tensor value);

    std::size_t size() const noexcept { return tensors_.size(); }
    const std::string &name(std::size_t id) const { return names_.at(id); }
    const Tensor &operator[](std::size_t id) const { return tensors_.at(id); }
    Tensor &operator[](std::size_t id) { return tensors_.at(id); }

    /// Throws std::out_of_range for unknown names.
    std::size_t index_of(const std::string &name) const;
    bool contains(const std::string &name) const;

    std::size_t scalar_count() const;

    friend bool operator==(const ParamSet &, const ParamSet &) = default;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> tensors_;
};

/// One gradient tensor per parameter id, same shapes as the ParamSet.
class Gradients {
public:
    Gradients() = default;
    static Gradients zeros_like(const ParamSet &params);

    std::size_t size() const noexcept { return grads_.size(); }
    const Tensor &operator[](std::size_t id) const { return grads_.at(id); }
    Tensor &operator[](std::size_t id) { return grads_.at(id); }

    void add(const Gradients &other);
    void scale(double factor);
    double l2_norm() const;

    friend bool operator==(const Gradients &, const Gradients &) = default;

private:
    std::vector<Tensor> grads_;
};

struct TapeNode {
    OpKind kind = OpKind::constant;
    std::vector<NodeId> parents;
    Tensor value;                      // empty for parameter nodes
    const Tensor *external = nullptr;  // parameter storage
    std::size_t param_id = 0;
    std::size_t index = 0;             // pick / straight_through channel
    double scalar = 0.0;               // mul_scalar factor, mask_fill value
    std::vector<bool> mask;            // mask_fill: true = keep
};

class Tape {
public:
    NodeId constant(Tensor value);
    NodeId parameter(const ParamSet &params, std::size_t id);

    const Tensor &value(NodeId id) const;
    const TapeNode &node(NodeId id) const { return nodes_.at(id); }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Appends a computed node; parents must already be on the tape.
    NodeId push(TapeNode node);

private:
    std::vector<TapeNode> nodes_;
};

// Vectors act as rows on the left of a product and as columns on the right,
// so x{k} * W{k x c} -> {c} and W{r x k} * x{k} -> {r}.
NodeId matmul(Tape &tape, NodeId a, NodeId b);

enum class Elementwise { tanh, sigmoid, add, hadamard };
NodeId elementwise(Tape &tape, Elementwise kind, std::span<const NodeId> args);

NodeId add(Tape &tape, NodeId a, NodeId b);
NodeId hadamard(Tape &tape, NodeId a, NodeId b);
NodeId tanh(Tape &tape, NodeId x);
NodeId sigmoid(Tape &tape, NodeId x);

/// Max-subtracted softmax over a vector.
NodeId softmax(Tape &tape, NodeId logits);

NodeId concat(Tape &tape, std::span<const NodeId> parts);

/// (1/k) * sum (pred - target)^2, as a one-element tensor.
NodeId mse(Tape &tape, NodeId pred, NodeId target);

/// Element i of a vector, as a one-element tensor.
NodeId pick(Tape &tape, NodeId x, std::size_t i);

/// s * x where s holds one element.
NodeId scale(Tape &tape, NodeId s, NodeId x);

/// Forward value is h; backward behaves as if the value were weights[index] * h.
NodeId straight_through(Tape &tape, NodeId weights, std::size_t index, NodeId h);

/// Entries with keep[i] == false are replaced by fill and receive no gradient.
NodeId mask_fill(Tape &tape, NodeId x, std::vector<bool> keep, double fill);

NodeId sum(Tape &tape, NodeId x);
NodeId mul_scalar(Tape &tape, NodeId x, double factor);

/// Gradients of a one-element loss node with respect to every parameter of
/// `params` referenced on the tape. Unreferenced parameters get zeros.
Gradients backward(const Tape &tape, NodeId loss, const ParamSet &params);

// Plain value helpers shared by the autodiff ops and the reference kernels.
double sigmoid_value(double x);
std::vector<double> softmax_values(std::span<const double> logits);

}  // namespace machan::ad
