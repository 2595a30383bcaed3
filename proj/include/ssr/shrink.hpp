#pragma once

#include <vector>

#include "ssr/archspace.hpp"

namespace ssr::shrink {

struct ShrinkEvent {
  int step = 0;
  space::GroupKey key;
  std::vector<int> removed;
  std::vector<double> retaining;  // over active candidates, at removal time
};

// r_i = sigmoid(theta_i) / max over active sigmoid(theta_j); the argmax
// candidate always scores exactly 1.
std::vector<double> retaining_probs(const space::ArchParamGroup& group);

// Deactivates every active candidate with retaining probability <= h and
// returns the removed candidate indices. The argmax survivor is never removed.
std::vector<int> prune_group(space::ArchParamGroup& group, double h);

// One hierarchical pass: depth level, then dilation-and-spatial, then channel.
// Cascades: a pruned depth option that lowers the maximum surviving depth
// freezes every group owned by the layers above it; a pruned operator freezes
// its two channel groups. Frozen groups stop all updates permanently.
std::vector<ShrinkEvent> hierarchical_shrink_step(space::ArchState& arch, double h,
                                                  int step);

// True when every non-frozen group has a single active candidate.
bool fully_discrete(const space::ArchState& arch);

}  // namespace ssr::shrink
