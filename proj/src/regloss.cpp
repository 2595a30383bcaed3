#include "ssr/regloss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssr/tensor.hpp"

namespace ssr::reg {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* aux_name(AuxKind kind) {
  switch (kind) {
    case AuxKind::kNone: return "none";
    case AuxKind::kSsr: return "ssr";
    case AuxKind::kL1: return "l1";
    case AuxKind::kL2: return "l2";
    case AuxKind::kIe: return "ie";
  }
  return "?";
}

AuxKind aux_from_name(const std::string& name) {
  if (name == "none") return AuxKind::kNone;
  if (name == "ssr") return AuxKind::kSsr;
  if (name == "l1") return AuxKind::kL1;
  if (name == "l2") return AuxKind::kL2;
  if (name == "ie") return AuxKind::kIe;
  throw std::invalid_argument("unknown regularizer kind: " + name);
}

std::vector<double> normalize_probs(const space::ArchParamGroup& group) {
  std::vector<double> p;
  double denom = 0.0;
  for (int i = 0; i < group.size(); ++i) {
    if (!group.active[i]) continue;
    const double s = stable_sigmoid(group.logits[i]);
    p.push_back(s);
    denom += s;
  }
  if (p.empty())
    throw std::invalid_argument("normalize_probs: group " + group.key.str() +
                                " has no active candidate");
  for (double& v : p) v /= denom;
  return p;
}

double ssr_loss(std::span<const double> p) {
  if (p.size() <= 1) return 0.0;
  double acc = 0.0;
  for (double v : p) acc += std::log(std::max(v, kEpsFloor));
  return acc;
}

double aux_loss(std::span<const double> p, AuxKind kind) {
  double acc = 0.0;
  switch (kind) {
    case AuxKind::kNone:
      return 0.0;
    case AuxKind::kSsr:
      return ssr_loss(p);
    case AuxKind::kL1:
      for (double v : p) acc -= std::fabs(v - 0.5);
      return acc;
    case AuxKind::kL2:
      for (double v : p) acc -= (v - 0.5) * (v - 0.5);
      return acc;
    case AuxKind::kIe:
      return group_entropy(p);
  }
  throw std::invalid_argument("aux_loss: unknown kind");
}

double group_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double LevelWeights::of(space::Level level) const {
  switch (level) {
    case space::Level::kDepth: return depth;
    case space::Level::kDilationSpatial: return dilation_spatial;
    case space::Level::kChannel: return channel;
  }
  return 0.0;
}

double total_arch_loss(double task_loss, const space::ArchState& arch,
                       const LevelWeights& rho, AuxKind kind, double flops_loss) {
  if (rho.depth < 0.0 || rho.dilation_spatial < 0.0 || rho.channel < 0.0)
    throw std::invalid_argument("total_arch_loss: level weights must be >= 0");
  double reg = 0.0;
  if (kind != AuxKind::kNone) {
    for (const space::ArchParamGroup& g : arch.groups) {
      if (g.frozen || g.n_active() <= 1) continue;
      reg += rho.of(g.key.level) * aux_loss(normalize_probs(g), kind);
    }
  }
  return task_loss + reg + flops_loss;
}

double level_entropy(const space::ArchState& arch, space::Level level) {
  double h = 0.0;
  for (const space::ArchParamGroup& g : arch.groups) {
    if (g.frozen || g.key.level != level || g.n_active() <= 1) continue;
    h += group_entropy(normalize_probs(g));
  }
  return h;
}

double total_entropy(const space::ArchState& arch) {
  return level_entropy(arch, space::Level::kDepth) +
         level_entropy(arch, space::Level::kDilationSpatial) +
         level_entropy(arch, space::Level::kChannel);
}

double pnorm_energy(std::span<const double> p, double m) {
  if (m < 0.0) throw std::invalid_argument("pnorm_energy: m must be >= 0");
  if (m == 0.0) {
    double count = 0.0;
    for (double v : p)
      if (std::fabs(v) > kEpsFloor) count += 1.0;
    return count;
  }
  double acc = 0.0;
  for (double v : p) acc += std::pow(std::fabs(v), m);
  return acc;
}

EquivalenceReport check_l0_equivalence(std::span<const double> p,
                                       std::span<const double> m_values) {
  const double n = static_cast<double>(p.size());
  for (double v : p)
    if (v < 1e-3)
      throw std::invalid_argument("check_l0_equivalence: min p must be >= 1e-3");
  for (double m : m_values)
    if (m <= 0.0 || m > 0.1)
      throw std::invalid_argument("check_l0_equivalence: m must lie in (0, 0.1]");

  EquivalenceReport rep;
  const double lssr = ssr_loss(p);
  double sum_ln2 = 0.0;
  for (double v : p) sum_ln2 += std::log(v) * std::log(v);

  for (double m : m_values) {
    const double em = pnorm_energy(p, m);
    rep.m_values.push_back(m);
    rep.taylor_residuals.push_back(std::fabs(em - n - m * lssr));
    rep.taylor_bounds.push_back(0.5 * m * m * sum_ln2);
    const double lhs = std::pow(em / n, 1.0 / m);
    const double rhs = std::exp(lssr / n);
    rep.limit_errors.push_back(std::fabs(lhs - rhs));
  }

  // Autodiff gradient of sum(log(clamp(p))) against the closed form
  // diag(1/p_i^2) * p = (1/p_i).
  ad::Tape tape;
  ad::Value leaf = tape.leaf({static_cast<int>(p.size())},
                             std::vector<double>(p.begin(), p.end()));
  ad::Value loss = tape.sum(tape.log(tape.clamp_min(leaf, kEpsFloor)));
  tape.backward(loss);
  double worst = 0.0;
  const auto grad = tape.grad(leaf);
  for (size_t i = 0; i < p.size(); ++i) {
    const double closed = (1.0 / (p[i] * p[i])) * p[i];
    worst = std::max(worst, std::fabs(grad[i] - closed));
  }
  rep.gradient_factorization_error = worst;
  return rep;
}

}  // namespace ssr::reg
