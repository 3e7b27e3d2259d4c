#include "machan/labels.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace machan {

double compute_popularity(std::uint64_t likes, std::uint64_t views) {
    if (views == 0) throw std::invalid_argument("popularity needs at least one view");
    return static_cast<double>(likes) / static_cast<double>(views);
}

Normalizer Normalizer::fit(std::span<const double> train_labels) {
    if (train_labels.size() < 2) throw std::invalid_argument("normalizer needs at least two labels");
    const double n = static_cast<double>(train_labels.size());
    double mean = std::accumulate(train_labels.begin(), train_labels.end(), 0.0) / n;
    double ss = 0.0;
    for (double y : train_labels) ss += (y - mean) * (y - mean);
    double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) throw std::invalid_argument("labels are constant; standard deviation is zero");
    return {mean, sd};
}

std::vector<double> labels_of(std::span<const VolumeSequence> sequences) {
    std::vector<double> y;
    y.reserve(sequences.size());
    for (const auto &s : sequences) y.push_back(s.y);
    return y;
}

std::vector<VolumeSequence> normalized(std::span<const VolumeSequence> sequences, const Normalizer &norm) {
    std::vector<VolumeSequence> out(sequences.begin(), sequences.end());
    for (auto &s : out) s.y = norm.apply(s.y);
    return out;
}

void SplitSpec::validate() const {
    if (!(train > 0.0 && val > 0.0 && test > 0.0)) throw std::invalid_argument("split ratios must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
}

SplitIndices split_indices(std::size_t n, const SplitSpec &spec) {
    spec.validate();
    if (n < 5) throw std::invalid_argument("need at least 5 items to split, got " + std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(order[i], order[pick(rng)]);
    }
    const auto n_train = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(n) + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val * static_cast<double>(n) + 1e-9));
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + n_train);
    out.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    out.test.assign(order.begin() + n_train + n_val, order.end());
    return out;
}

SplitData split_by_indices(std::span<const VolumeSequence> sequences, const SplitIndices &idx) {
    SplitData out;
    for (auto i : idx.train) out.train.push_back(sequences[i]);
    for (auto i : idx.val) out.val.push_back(sequences[i]);
    for (auto i : idx.test) out.test.push_back(sequences[i]);
    return out;
}

SplitData split_dataset(std::span<const VolumeSequence> sequences, const SplitSpec &spec) {
    return split_by_indices(sequences, split_indices(sequences.size(), spec));
}

}  // namespace machan
