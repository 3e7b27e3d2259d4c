#include <gtest/gtest.h>

#include <random>

#include "machan/kernels.hpp"
#include "machan/pooling.hpp"
#include "reference_model.hpp"

using namespace machan;

namespace {

std::vector<VolumeSequence> sequences(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<VolumeSequence> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(machan::testing::random_sequence(rng, 3 + i % 7, {8, 4, 4}, 0.2));
    return out;
}

}  // namespace

TEST(Kernels, BatchGradientsParity) {
    auto data = sequences(13, 1);
    for (auto mode : {FusionMode::hard, FusionMode::soft, FusionMode::concat}) {
        auto p = init_params(machan::testing::small_config(mode), 2);
        auto s = batch_gradients(data, p, Execution::serial);
        auto q = batch_gradients(data, p, Execution::parallel);
        EXPECT_EQ(s.losses, q.losses);
        EXPECT_EQ(s.mean_loss, q.mean_loss);
        EXPECT_EQ(s.grads, q.grads);
    }
}

TEST(Kernels, BatchGradientIsIndexOrderedMean) {
    auto data = sequences(5, 3);
    auto p = init_params(machan::testing::small_config(FusionMode::soft), 4);
    auto expected = ad::Gradients::zeros_like(p.set);
    double loss = 0.0;
    for (const auto &s : data) {
        auto g = loss_and_gradients(s, p);
        expected.add(g.grads);
        loss += g.loss;
    }
    expected.scale(1.0 / 5.0);
    auto got = batch_gradients(data, p, Execution::parallel);
    EXPECT_EQ(got.grads, expected);
    EXPECT_EQ(got.mean_loss, loss / 5.0);
}

TEST(Kernels, PredictAllParity) {
    auto data = sequences(20, 5);
    auto p = init_params(machan::testing::small_config(FusionMode::hard), 6);
    auto s = predict_all(data, p, Execution::serial);
    auto q = predict_all(data, p, Execution::parallel);
    ASSERT_EQ(s.size(), q.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s[i].value, q[i].value);
        EXPECT_EQ(s[i].value, forward(data[i], p).value);
        EXPECT_EQ(s[i].trace.steps.size(), q[i].trace.steps.size());
    }
}

TEST(Kernels, PoolAllParity) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<RawVideoRecord> records;
    for (int r = 0; r < 9; ++r) {
        RawVideoRecord rec;
        rec.id = "r" + std::to_string(r);
        rec.fps = 25.0;
        rec.likes = 3;
        rec.views = 10;
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            rec.channels[c].dim = 2;
            for (int f = 0; f < 200 + 25 * r; ++f) {
                if (f % 13 == static_cast<int>(c)) rec.channels[c].push_absent();
                else rec.channels[c].push(std::vector<double>{n(rng), n(rng)});
            }
        }
        records.push_back(rec);
    }
    auto s = pool_all(records, 5.0, {}, Execution::serial);
    auto q = pool_all(records, 5.0, {}, Execution::parallel);
    ASSERT_EQ(s.size(), records.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s[i].id, q[i].id);
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            EXPECT_EQ(s[i].channels[c].data, q[i].channels[c].data);
            EXPECT_EQ(s[i].channels[c].present, q[i].channels[c].present);
        }
        EXPECT_EQ(s[i].channels[0].data, pool_volumes(downsample(records[i], 5.0)).channels[0].data);
    }
}

TEST(Kernels, EmptyBatch) {
    auto p = init_params(machan::testing::small_config(FusionMode::soft), 1);
    std::vector<VolumeSequence> none;
    EXPECT_TRUE(predict_all(none, p, Execution::parallel).empty());
    EXPECT_THROW(batch_gradients(none, p, Execution::parallel), std::invalid_argument);
}
