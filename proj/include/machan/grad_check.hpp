#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "machan/autodiff.hpp"

namespace machan::ad {

/// Builds the loss for the given parameters on a fresh tape.
using LossBuilder = std::function<NodeId(Tape &, const ParamSet &)>;

struct ParamCheck {
    std::string name;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t worst_index = 0;
};

struct GradCheckReport {
    std::optional<std::string> error;  // set when the check could not run
    std::vector<ParamCheck> params;
    double max_rel_error = 0.0;
    double tolerance = 0.0;

    bool ran() const { return !error.has_value(); }
    bool passed() const { return ran() && max_rel_error < tolerance; }
};

/// Magnitudes below this are compared on an absolute scale.
inline constexpr double kGradCheckFloor = 1e-7;

double relative_error(double analytic, double numeric);

/// Compares backward() against central differences of step h for every
/// scalar of every parameter.
GradCheckReport grad_check(const LossBuilder &build, ParamSet params, double h = 1e-5, double tol = 1e-4);

}  // namespace machan::ad
