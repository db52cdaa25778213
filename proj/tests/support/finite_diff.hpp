#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "qnlp/parameter.hpp"

namespace qnlp::testing {

/// Central finite difference of a scalar function at x.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Central finite difference of loss(p) with respect to entry `index` of a
/// parameter, restoring the original value afterwards.
inline double central_diff_param(Parameter& p, std::size_t index,
                                 const std::function<double()>& loss,
                                 double h = 1e-5) {
    double saved = p.value[index];
    p.value[index] = saved + h;
    double hi = loss();
    p.value[index] = saved - h;
    double lo = loss();
    p.value[index] = saved;
    return (hi - lo) / (2.0 * h);
}

/// Relative error with an absolute floor so near-zero gradients compare
/// sanely.
inline double rel_error(double got, double want, double floor = 1e-8) {
    double denom = std::max({std::abs(got), std::abs(want), floor});
    return std::abs(got - want) / denom;
}

/// Checks autodiff gradients of every listed parameter entry against central
/// finite differences. `loss_value` must recompute the loss from current
/// parameter values without recording; `grads` holds the autodiff results
/// captured beforehand. Returns the worst relative error.
inline double max_grad_rel_error(
    const std::vector<std::pair<Parameter*, std::size_t>>& entries,
    const std::function<double()>& loss_value,
    const std::function<double(Parameter*, std::size_t)>& autodiff_grad,
    double h = 1e-5) {
    double worst = 0.0;
    for (const auto& [p, idx] : entries) {
        double fd = central_diff_param(*p, idx, loss_value, h);
        double ad = autodiff_grad(p, idx);
        worst = std::max(worst, rel_error(ad, fd));
    }
    return worst;
}

}  // namespace qnlp::testing
