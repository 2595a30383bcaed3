#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ssr/tensor.hpp"

namespace ssr::ad {

// Max over coordinates of |analytic - central difference| / max(|analytic|, 1e-12).
// The central-difference side is the independent oracle; `analytic` comes from
// whatever gradient path is under test.
double finite_diff_check(const std::function<double(std::span<const double>)>& scalar_fn,
                         std::span<const double> point,
                         std::span<const double> analytic, double step);

// Tape convenience: runs backward(output) for the analytic gradient of the
// given leaves, then perturbs each leaf coordinate and recomputes the tape.
// Returns the worst relative error across all listed leaves.
double finite_diff_check(Tape& tape, Value output, std::span<const Value> leaves,
                         double step);

}  // namespace ssr::ad
