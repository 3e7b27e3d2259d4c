#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "machan/kernels.hpp"
#include "machan/model.hpp"

namespace machan {

/// Raised when a correlation is undefined (constant input or n < 2).
class CorrelationError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Pearson correlation of mean-centred deviations.
double pearson(std::span<const double> y, std::span<const double> y_hat);

/// (1/n) sum (y - y_hat)^2. Throws std::invalid_argument on length mismatch or n = 0.
double mse_metric(std::span<const double> y, std::span<const double> y_hat);

struct EvalReport {
    std::string split;
    std::size_t n = 0;
    std::optional<double> rho;  // empty when undefined; see rho_error
    std::string rho_error;
    double mse = 0.0;
    std::string model_id;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

/// Metrics for a finished set of predictions. A constant prediction vector
/// leaves rho empty and records the reason; MSE is still reported.
EvalReport evaluate_predictions(std::span<const double> y, std::span<const double> y_hat, std::string split,
                                std::string model_id = {}, std::uint64_t seed = 0);

EvalReport evaluate(const ModelParams &params, std::span<const VolumeSequence> split_data, std::string split,
                    std::string model_id = {}, std::uint64_t seed = 0, Execution exec = Execution::parallel);

struct RunAggregate {
    std::vector<EvalReport> reports;
    std::optional<double> mean_rho;  // over runs with a defined rho
    double mean_mse = 0.0;
};

/// Unweighted means. Throws std::invalid_argument for zero runs.
RunAggregate aggregate(std::span<const EvalReport> reports);

/// Plain-text table: one row per run plus the mean row.
std::string summary_table(const RunAggregate &agg);

}  // namespace machan
