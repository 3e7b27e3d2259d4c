#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "machan/tensor.hpp"

using machan::DimensionError;
using machan::NonFiniteError;
using machan::Tensor;

TEST(Tensor, ShapeMustMatchValueCount) {
    EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), DimensionError);
    EXPECT_NO_THROW(Tensor({2, 2}, {1, 2, 3, 4}));
}

TEST(Tensor, RejectsZeroAndEmptyExtents) {
    EXPECT_THROW(Tensor(machan::Shape{0}), DimensionError);
    EXPECT_THROW(Tensor(machan::Shape{3, 0}), DimensionError);
    EXPECT_THROW(Tensor(machan::Shape{}), DimensionError);
}

TEST(Tensor, RejectsNonFiniteValues) {
    EXPECT_THROW(Tensor::vector({1.0, std::numeric_limits<double>::quiet_NaN()}), NonFiniteError);
    EXPECT_THROW(Tensor::vector({std::numeric_limits<double>::infinity()}), NonFiniteError);
}

TEST(Tensor, RowMajorLayout) {
    auto m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(m.rows(), 2u);
    EXPECT_EQ(m.cols(), 3u);
    EXPECT_EQ(m.at(1, 0), 4.0);
    EXPECT_EQ(m[5], 6.0);
}

TEST(Tensor, IdentityHasUnitDiagonal) {
    auto id = Tensor::identity(3);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(id.at(r, c), r == c ? 1.0 : 0.0);
}

TEST(Tensor, ZerosAreZero) {
    auto z = Tensor::zeros({4, 2});
    EXPECT_EQ(z.size(), 8u);
    for (double v : z.values()) EXPECT_EQ(v, 0.0);
}
