#include "ssr/shrink.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssr::shrink {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void reset_moments(space::ArchParamGroup& g, int candidate) {
  g.m[static_cast<size_t>(candidate)] = 0.0;
  g.v[static_cast<size_t>(candidate)] = 0.0;
}

void freeze_group(space::ArchParamGroup& g) {
  g.frozen = true;
  std::fill(g.m.begin(), g.m.end(), 0.0);
  std::fill(g.v.begin(), g.v.end(), 0.0);
}

}  // namespace

std::vector<double> retaining_probs(const space::ArchParamGroup& group) {
  std::vector<double> sig;
  double best = 0.0;
  for (int i = 0; i < group.size(); ++i) {
    if (!group.active[i]) continue;
    sig.push_back(stable_sigmoid(group.logits[i]));
    best = std::max(best, sig.back());
  }
  if (sig.empty())
    throw std::invalid_argument("retaining_probs: group " + group.key.str() +
                                " has no active candidate");
  for (double& v : sig) v /= best;
  return sig;
}

std::vector<int> prune_group(space::ArchParamGroup& group, double h) {
  if (h <= 0.0 || h >= 1.0)
    throw std::invalid_argument("prune_group: h must be in (0,1)");
  const std::vector<double> r = retaining_probs(group);
  std::vector<int> removed;
  size_t slot = 0;
  for (int i = 0; i < group.size(); ++i) {
    if (!group.active[i]) continue;
    if (r[slot] <= h) {  // boundary inclusive
      group.active[i] = 0;
      reset_moments(group, i);
      removed.push_back(i);
    }
    ++slot;
  }
  return removed;
}

std::vector<ShrinkEvent> hierarchical_shrink_step(space::ArchState& arch, double h,
                                                  int step) {
  std::vector<ShrinkEvent> events;

  auto visit = [&](space::ArchParamGroup& g) {
    if (g.frozen || g.n_active() <= 1) return;
    const std::vector<double> before = retaining_probs(g);
    const std::vector<int> removed = prune_group(g, h);
    if (!removed.empty()) events.push_back({step, g.key, removed, before});
  };

  // depth level; a lowered surviving maximum freezes the layers above it
  for (size_t s = 0; s < arch.depth_of_stage.size(); ++s) {
    space::ArchParamGroup& depth = arch.depth_group(static_cast<int>(s));
    visit(depth);
    int max_depth = 0;
    for (int i = 0; i < depth.size(); ++i)
      if (depth.active[i]) max_depth = std::max(max_depth, depth.option_a[i]);
    for (size_t j = static_cast<size_t>(max_depth); j < arch.beta_of_layer[s].size(); ++j) {
      space::ArchParamGroup& beta = arch.beta_group(static_cast<int>(s), static_cast<int>(j));
      if (!beta.frozen) {
        freeze_group(beta);
        for (auto& convs : arch.gamma_of[s][j])
          for (int gidx : convs) freeze_group(arch.groups[static_cast<size_t>(gidx)]);
      }
    }
  }

  // dilation-and-spatial level; pruned operators drop their channel groups
  for (size_t s = 0; s < arch.beta_of_layer.size(); ++s)
    for (size_t j = 0; j < arch.beta_of_layer[s].size(); ++j) {
      space::ArchParamGroup& beta = arch.beta_group(static_cast<int>(s), static_cast<int>(j));
      if (beta.frozen) continue;
      const size_t before_events = events.size();
      visit(beta);
      if (events.size() > before_events)
        for (int c : events.back().removed)
          for (int gidx : arch.gamma_of[s][j][static_cast<size_t>(c)])
            freeze_group(arch.groups[static_cast<size_t>(gidx)]);
    }

  // channel level
  for (space::ArchParamGroup& g : arch.groups)
    if (g.key.level == space::Level::kChannel) visit(g);

  return events;
}

bool fully_discrete(const space::ArchState& arch) {
  for (const space::ArchParamGroup& g : arch.groups)
    if (!g.frozen && g.n_active() > 1) return false;
  return true;
}

}  // namespace ssr::shrink
