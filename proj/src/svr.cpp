#include "machan/svr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "machan/records.hpp"

namespace machan {

namespace {

constexpr const char *kSvrMagic = "MACHAN-SVR1";

void check_shapes(const FeatureMatrix &x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("feature and target counts differ");
    if (x.empty()) throw std::invalid_argument("SVR needs at least one example");
    for (const auto &row : x)
        if (row.size() != x.front().size()) throw std::invalid_argument("feature vectors differ in length");
}

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

void SvrConfig::validate() const {
    if (epsilon < 0) throw std::invalid_argument("SVR epsilon must be non-negative");
    if (!(lambda > 0)) throw std::invalid_argument("SVR lambda must be positive");
    if (!(learning_rate > 0)) throw std::invalid_argument("SVR learning rate must be positive");
}

double svr_predict(const SvrParams &params, std::span<const double> x) {
    if (x.size() != params.w.size()) {
        throw std::invalid_argument("SVR input of length " + std::to_string(x.size()) + ", model expects " +
                                    std::to_string(params.w.size()));
    }
    return dot(params.w, x) + params.b;
}

double svr_objective(const SvrParams &params, const FeatureMatrix &x, std::span<const double> y,
                     const SvrConfig &cfg) {
    check_shapes(x, y);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        loss += std::max(0.0, std::abs(y[i] - svr_predict(params, x[i])) - cfg.epsilon);
    return 0.5 * cfg.lambda * dot(params.w, params.w) + loss / static_cast<double>(x.size());
}

SvrParams svr_train(const FeatureMatrix &x, std::span<const double> y, const SvrConfig &cfg,
                    std::vector<double> *trajectory, std::size_t record_every) {
    cfg.validate();
    check_shapes(x, y);
    const std::size_t n = x.size();
    const std::size_t d = x.front().size();

    std::vector<double> sorted(y.begin(), y.end());
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());

    SvrParams cur{std::vector<double>(d, 0.0), sorted[n / 2]};
    SvrParams avg = cur;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);

    std::vector<double> gw(d);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t k = 0; k < batch; ++k) {
            std::size_t i = batch == n ? k : pick(rng);
            double r = y[i] - svr_predict(cur, x[i]);
            if (std::abs(r) <= cfg.epsilon) continue;
            double s = r > 0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < d; ++j) gw[j] += s * x[i][j];
            gb += s;
        }
        const double inv = 1.0 / static_cast<double>(batch);
        const double eta = cfg.learning_rate / std::sqrt(static_cast<double>(step + 1));
        for (std::size_t j = 0; j < d; ++j) cur.w[j] -= eta * (gw[j] * inv + cfg.lambda * cur.w[j]);
        cur.b -= eta * gb * inv;

        const double mix = 1.0 / static_cast<double>(step + 2);
        for (std::size_t j = 0; j < d; ++j) avg.w[j] += mix * (cur.w[j] - avg.w[j]);
        avg.b += mix * (cur.b - avg.b);

        if (trajectory && record_every && (step + 1) % record_every == 0)
            trajectory->push_back(svr_objective(avg, x, y, cfg));
    }
    for (double v : avg.w)
        if (!std::isfinite(v)) throw std::runtime_error("SVR training diverged");
    return avg;
}

void save_svr(const std::filesystem::path &path, const SvrParams &params) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out << kSvrMagic << '\n' << params.w.size() << '\n' << std::setprecision(17);
    for (double v : params.w) out << v << '\n';
    out << params.b << '\n';
}

SvrParams load_svr(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::string magic;
    std::size_t n = 0;
    if (!(in >> magic) || magic != kSvrMagic) throw FormatError(path.string() + ": not an SVR model file");
    if (!(in >> n)) throw FormatError(path.string() + ": missing weight count");
    SvrParams p;
    p.w.resize(n);
    for (auto &v : p.w)
        if (!(in >> v)) throw FormatError(path.string() + ": truncated weights");
    if (!(in >> p.b)) throw FormatError(path.string() + ": missing bias");
    return p;
}

}  // namespace machan
