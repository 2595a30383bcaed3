#pragma once

#include <span>
#include <vector>

#include "ssr/archspace.hpp"

namespace ssr::reg {

// Clamp applied inside logarithms only; probabilities themselves are never
// mutated. Guards the window before a losing candidate is pruned.
inline constexpr double kEpsFloor = 1e-12;

enum class AuxKind : uint8_t { kNone, kSsr, kL1, kL2, kIe };
const char* aux_name(AuxKind kind);
AuxKind aux_from_name(const std::string& name);

// sigmoid(theta_i) / sum over active sigmoid(theta_j), active candidates only.
std::vector<double> normalize_probs(const space::ArchParamGroup& group);

// Sum of log probabilities; the simplex maximizer is uniform, so descending
// this drives the distribution toward a vertex. Singleton groups return 0.
double ssr_loss(std::span<const double> p);

// Competitor regularizers: L1/L2 distance-to-0.5 style and Shannon entropy.
double aux_loss(std::span<const double> p, AuxKind kind);

double group_entropy(std::span<const double> p);

struct LevelWeights {
  double depth = 0.15;
  double dilation_spatial = 0.3;
  double channel = 0.3;
  double of(space::Level level) const;
};

// task + sum over levels of rho_l * sum of per-group regularizer + flops term.
double total_arch_loss(double task_loss, const space::ArchState& arch,
                       const LevelWeights& rho, AuxKind kind, double flops_loss);

double level_entropy(const space::ArchState& arch, space::Level level);
double total_entropy(const space::ArchState& arch);

// E^m(p) = sum |p_i|^m; m = 0 counts entries above the clamp floor.
double pnorm_energy(std::span<const double> p, double m);

struct EquivalenceReport {
  std::vector<double> m_values;
  std::vector<double> taylor_residuals;   // |E^m - n - m*L_ssr|
  std::vector<double> taylor_bounds;      // (m^2/2) * sum ln^2 p_i
  std::vector<double> limit_errors;       // |(E^m/n)^(1/m) - exp(L_ssr/n)|
  double gradient_factorization_error = 0.0;
};

// Numerical checks of the L0-equivalence identities at one simplex point.
// The gradient check runs the autodiff path against the closed form
// diag(1/p_i^2) * p.
EquivalenceReport check_l0_equivalence(std::span<const double> p,
                                       std::span<const double> m_values);

}  // namespace ssr::reg
