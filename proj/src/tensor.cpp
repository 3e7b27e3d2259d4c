#include "machan/tensor.hpp"

#include <cmath>
#include <sstream>

namespace machan {

std::string to_string(const Shape &shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t element_count(const Shape &shape) {
    if (shape.empty()) throw DimensionError("tensor shape must have at least one extent");
    std::size_t n = 1;
    for (auto e : shape) {
        if (e == 0) throw DimensionError("tensor extents must be positive, got " + to_string(shape));
        n *= e;
    }
    return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), values_(element_count(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (element_count(shape_) != values_.size()) {
        throw DimensionError("shape " + to_string(shape_) + " does not match " +
                             std::to_string(values_.size()) + " values");
    }
    check_finite("tensor construction");
}

Tensor Tensor::filled(Shape shape, double value) {
    auto n = element_count(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::vector(std::vector<double> values) {
    auto n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows() on non-matrix " + to_string(shape_));
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols() on non-matrix " + to_string(shape_));
    return shape_[1];
}

double Tensor::item() const {
    if (values_.size() != 1) throw DimensionError("item() on tensor of shape " + to_string(shape_));
    return values_[0];
}

void Tensor::check_finite(const char *context) const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            std::ostringstream os;
            os << context << ": non-finite value " << values_[i] << " at index " << i;
            throw NonFiniteError(os.str());
        }
    }
}

}  // namespace machan
