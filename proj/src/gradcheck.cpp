#include "ssr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssr::ad {

double finite_diff_check(const std::function<double(std::span<const double>)>& scalar_fn,
                         std::span<const double> point,
                         std::span<const double> analytic, double step) {
  if (step <= 0.0) throw std::invalid_argument("finite_diff_check: step must be > 0");
  if (point.size() != analytic.size())
    throw std::invalid_argument("finite_diff_check: gradient size mismatch");
  std::vector<double> x(point.begin(), point.end());
  double worst = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double fp = scalar_fn(x);
    x[i] = saved - step;
    const double fm = scalar_fn(x);
    x[i] = saved;
    const double numeric = (fp - fm) / (2.0 * step);
    const double err = std::fabs(analytic[i] - numeric) /
                       std::max(std::fabs(analytic[i]), 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

double finite_diff_check(Tape& tape, Value output, std::span<const Value> leaves,
                         double step) {
  if (step <= 0.0) throw std::invalid_argument("finite_diff_check: step must be > 0");
  tape.zero_grad();
  tape.backward(output);
  double worst = 0.0;
  for (Value leaf : leaves) {
    const std::span<const double> g = tape.grad(leaf);
    std::vector<double> analytic(g.begin(), g.end());
    std::vector<double> base(tape.values(leaf).begin(), tape.values(leaf).end());
    auto fn = [&](std::span<const double> x) {
      tape.set_leaf(leaf, x);
      tape.recompute();
      return tape.value_scalar(output);
    };
    worst = std::max(worst, finite_diff_check(fn, base, analytic, step));
    tape.set_leaf(leaf, base);
  }
  tape.recompute();
  return worst;
}

}  // namespace ssr::ad
