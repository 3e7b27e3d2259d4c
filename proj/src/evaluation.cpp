#include "machan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace machan {

double pearson(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw std::invalid_argument("pearson: length mismatch");
    if (y.size() < 2) throw CorrelationError("pearson needs at least two points");
    const double n = static_cast<double>(y.size());
    double my = 0.0, mh = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        my += y[i];
        mh += y_hat[i];
    }
    my /= n;
    mh /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dy = y[i] - my, dh = y_hat[i] - mh;
        sxy += dy * dh;
        sxx += dy * dy;
        syy += dh * dh;
    }
    if (sxx == 0.0) throw CorrelationError("pearson: targets are constant");
    if (syy == 0.0) throw CorrelationError("pearson: predictions are constant");
    double r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
    return std::clamp(r, -1.0, 1.0);
}

double mse_metric(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw std::invalid_argument("mse: length mismatch");
    if (y.empty()) throw std::invalid_argument("mse of zero points");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    return acc / static_cast<double>(y.size());
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j = {{"split", split}, {"n", n}, {"mse", mse}, {"model", model_id}, {"seed", seed}};
    j["rho"] = rho ? nlohmann::json(*rho) : nlohmann::json(nullptr);
    if (!rho_error.empty()) j["rho_error"] = rho_error;
    return j;
}

EvalReport evaluate_predictions(std::span<const double> y, std::span<const double> y_hat, std::string split,
                                std::string model_id, std::uint64_t seed) {
    EvalReport r;
    r.split = std::move(split);
    r.n = y.size();
    r.model_id = std::move(model_id);
    r.seed = seed;
    r.mse = mse_metric(y, y_hat);
    try {
        r.rho = pearson(y, y_hat);
    } catch (const CorrelationError &e) {
        r.rho_error = e.what();
    }
    return r;
}

EvalReport evaluate(const ModelParams &params, std::span<const VolumeSequence> split_data, std::string split,
                    std::string model_id, std::uint64_t seed, Execution exec) {
    if (split_data.empty()) throw std::invalid_argument("cannot evaluate an empty split");
    auto preds = predict_all(split_data, params, exec);
    std::vector<double> y, y_hat;
    for (std::size_t i = 0; i < split_data.size(); ++i) {
        y.push_back(split_data[i].y);
        y_hat.push_back(preds[i].value);
    }
    return evaluate_predictions(y, y_hat, std::move(split), std::move(model_id), seed);
}

RunAggregate aggregate(std::span<const EvalReport> reports) {
    if (reports.empty()) throw std::invalid_argument("aggregate needs at least one run");
    RunAggregate agg;
    agg.reports.assign(reports.begin(), reports.end());
    double rho_sum = 0.0, mse_sum = 0.0;
    std::size_t rho_n = 0;
    for (const auto &r : reports) {
        mse_sum += r.mse;
        if (r.rho) {
            rho_sum += *r.rho;
            ++rho_n;
        }
    }
    agg.mean_mse = mse_sum / static_cast<double>(reports.size());
    if (rho_n) agg.mean_rho = rho_sum / static_cast<double>(rho_n);
    return agg;
}

std::string summary_table(const RunAggregate &agg) {
    std::ostringstream os;
    os << std::left << std::setw(8) << "run" << std::setw(16) << "model" << std::setw(8) << "split"
       << std::setw(6) << "n" << std::setw(12) << "rho" << "mse\n";
    auto rho_text = [](const std::optional<double> &rho) {
        if (!rho) return std::string("undefined");
        std::ostringstream s;
        s << std::fixed << std::setprecision(4) << *rho;
        return s.str();
    };
    for (std::size_t i = 0; i < agg.reports.size(); ++i) {
        const auto &r = agg.reports[i];
        os << std::left << std::setw(8) << i << std::setw(16) << r.model_id << std::setw(8) << r.split
           << std::setw(6) << r.n << std::setw(12) << rho_text(r.rho) << std::fixed << std::setprecision(4) << r.mse
           << '\n';
    }
    os << std::left << std::setw(38) << "mean" << std::setw(12) << rho_text(agg.mean_rho) << std::fixed
       << std::setprecision(4) << agg.mean_mse << '\n';
    return os.str();
}

}  // namespace machan
