#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace machan {

/// Thrown when operand extents do not line up.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a tensor would hold NaN or Inf.
class NonFiniteError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape &shape);

/// Dense row-major array of doubles.
///
/// Every extent is positive and every value finite; both are checked on
/// construction. Vectors are rank 1, matrices rank 2.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);  // zero-filled
    Tensor(Shape shape, std::vector<double> values);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor filled(Shape shape, double value);
    static Tensor vector(std::initializer_list<double> values);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor identity(std::size_t n);
    static Tensor scalar(double value) { return vector({value}); }

    const Shape &shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double operator[](std::size_t i) const { return values_[i]; }
    double &operator[](std::size_t i) { return values_[i]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }
    double &at(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }

    /// Single value of a one-element tensor.
    double item() const;

    /// Re-checks the finiteness invariant after in-place mutation.
    void check_finite(const char *context) const;

    friend bool operator==(const Tensor &, const Tensor &) = default;

private:
    Shape shape_;
    std::vector<double> values_;
};

std::size_t element_count(const Shape &shape);

}  // namespace machan
