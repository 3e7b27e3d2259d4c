#include "machan/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace machan::ad {

double relative_error(double analytic, double numeric) {
    double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
    return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const LossBuilder &build, const ParamSet &params) {
    Tape tape;
    return tape.value(build(tape, params)).item();
}

}  // namespace

GradCheckReport grad_check(const LossBuilder &build, ParamSet params, double h, double tol) {
    GradCheckReport report;
    report.tolerance = tol;

    Gradients analytic;
    try {
        Tape tape;
        auto loss = build(tape, params);
        analytic = backward(tape, loss, params);
    } catch (const std::exception &e) {
        report.error = e.what();
        return report;
    }

    for (std::size_t p = 0; p < params.size(); ++p) {
        ParamCheck check;
        check.name = params.name(p);
        auto values = params[p].values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            double saved = values[i];
            values[i] = saved + h;
            double up = evaluate(build, params);
            values[i] = saved - h;
            double down = evaluate(build, params);
            values[i] = saved;

            double numeric = (up - down) / (2.0 * h);
            double a = analytic[p][i];
            double rel = relative_error(a, numeric);
            if (rel > check.max_rel_error) {
                check.max_rel_error = rel;
                check.worst_index = i;
            }
            check.max_abs_error = std::max(check.max_abs_error, std::abs(a - numeric));
        }
        report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
        report.params.push_back(std::move(check));
    }
    return report;
}

}  // namespace machan::ad
