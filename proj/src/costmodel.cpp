#include "ssr/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssr/regloss.hpp"

namespace ssr::cost {

namespace {
constexpr double kAbsFloor = 1e-9;
}

void CostSpec::validate() const {
  if (target_flops <= 0.0) throw std::invalid_argument("cost.target_flops: must be > 0");
  if (delta <= 0.0 || delta > 1.0)
    throw std::invalid_argument("cost.delta: must lie in (0,1]");
  if (lambda < 0.0) throw std::invalid_argument("cost.lambda: must be >= 0");
}

double expected_channels(const space::ArchParamGroup& channel_group,
                         const std::vector<std::vector<double>>& masks) {
  const std::vector<double> p = reg::normalize_probs(channel_group);
  double total = 0.0;
  size_t slot = 0;
  for (int i = 0; i < channel_group.size(); ++i) {
    if (!channel_group.active[i]) continue;
    double mass = 0.0;
    for (double v : masks[static_cast<size_t>(i)]) mass += v;
    total += p[slot] * mass;
    ++slot;
  }
  return total;
}

double expected_operator_flops(std::span<const ConvCost> convs, int kernel, int length,
                               int spatial) {
  if (spatial < 1 || length % spatial != 0)
    throw std::invalid_argument("expected_operator_flops: spatial must divide length");
  if (convs.empty()) throw std::invalid_argument("expected_operator_flops: no convolutions");
  double kernel_cost = 0.0;
  for (const ConvCost& c : convs) kernel_cost += (kernel * c.e_in + 1.0) * c.e_out;
  if (spatial == 1) return kernel_cost * length;
  return (kernel_cost + spatial * convs[0].e_in) * (length / spatial);
}

double basic_flops(const space::SpaceConfig& config) {
  const int c0 = config.stages[0].c_max;
  double total = (3.0 * config.input_channels + 1.0) * c0 * config.input_length;
  for (size_t s = 1; s < config.stages.size(); ++s) {
    const int cin = config.stages[s - 1].c_max;
    const int cout = config.stages[s].c_max;
    total += (3.0 * cin + 1.0) * cout * config.stage_length(static_cast<int>(s) - 1);
  }
  const int c_last = config.stages.back().c_max;
  total += (1.0 * c_last + 1.0) * config.num_classes * config.input_length;
  return total;
}

namespace {

// expected cost of one operator candidate under the current channel groups
double candidate_flops(const space::SuperNet& net, const space::ArchState& arch, int s,
                       int j, int c) {
  const space::StageSpec& spec = net.config.stages[static_cast<size_t>(s)];
  const space::OperatorCandidate& cand =
      net.stages[static_cast<size_t>(s)].layers[static_cast<size_t>(j)].cands[static_cast<size_t>(c)];
  const auto& g1 = arch.gamma_group(s, j, c, 0);
  const auto& g2 = arch.gamma_group(s, j, c, 1);
  const double e1 = expected_channels(g1, space::make_channel_masks(g1.option_a, spec.c_max));
  const double e2 = expected_channels(g2, space::make_channel_masks(g2.option_a, spec.c_max));
  const ConvCost convs[2] = {{static_cast<double>(spec.c_max), e1}, {e1, e2}};
  return expected_operator_flops(convs, 3, net.config.stage_length(s), cand.spatial);
}

}  // namespace

double expected_total_flops(const space::SuperNet& net, const space::ArchState& arch) {
  double total = basic_flops(net.config);
  for (size_t s = 0; s < net.stages.size(); ++s) {
    const space::ArchParamGroup& depth = arch.depth_group(static_cast<int>(s));
    int max_depth = 0;
    for (int i = 0; i < depth.size(); ++i)
      if (depth.active[i]) max_depth = std::max(max_depth, depth.option_a[i]);

    std::vector<double> layer_cost(static_cast<size_t>(max_depth), 0.0);
    for (int j = 0; j < max_depth; ++j) {
      const space::ArchParamGroup& beta = arch.beta_group(static_cast<int>(s), j);
      const std::vector<double> pb = reg::normalize_probs(beta);
      size_t slot = 0;
      for (int c = 0; c < beta.size(); ++c) {
        if (!beta.active[c]) continue;
        layer_cost[static_cast<size_t>(j)] +=
            pb[slot] * candidate_flops(net, arch, static_cast<int>(s), j, c);
        ++slot;
      }
    }
    std::vector<double> cumulative(static_cast<size_t>(max_depth) + 1, 0.0);
    for (int j = 0; j < max_depth; ++j)
      cumulative[static_cast<size_t>(j) + 1] =
          cumulative[static_cast<size_t>(j)] + layer_cost[static_cast<size_t>(j)];

    const std::vector<double> pd = reg::normalize_probs(depth);
    size_t slot = 0;
    for (int i = 0; i < depth.size(); ++i) {
      if (!depth.active[i]) continue;
      total += pd[slot] * cumulative[static_cast<size_t>(depth.option_a[i])];
      ++slot;
    }
  }
  return total;
}

double flops_constraint_loss(double e_f, const CostSpec& spec) {
  spec.validate();
  const double t = spec.target_flops;
  const double low = spec.delta * t;
  if (e_f < low) return spec.lambda * std::log(std::max(std::fabs(e_f - t), kAbsFloor));
  if (e_f > t) return spec.lambda * std::log(std::max(std::fabs(e_f - low), kAbsFloor));
  return 0.0;
}

ad::Value expected_total_flops_node(ad::Tape& tape, const space::SuperNet& net,
                                    const space::ArchState& arch,
                                    const space::ForwardGraph& fwd) {
  auto mask_node_of = [&fwd](int s, int j, int c, int conv) -> const ad::Value* {
    for (const space::MaskBinding& mb : fwd.masks)
      if (mb.stage == s && mb.layer == j && mb.cand == c && mb.conv == conv) return &mb.mask;
    return nullptr;
  };

  ad::Value total = tape.scalar_const(basic_flops(net.config));
  for (size_t s = 0; s < net.stages.size(); ++s) {
    const space::StageSpec& spec = net.config.stages[s];
    const space::ArchParamGroup& depth = arch.depth_group(static_cast<int>(s));
    int max_depth = 0;
    for (int i = 0; i < depth.size(); ++i)
      if (depth.active[i]) max_depth = std::max(max_depth, depth.option_a[i]);

    const int length = net.config.stage_length(static_cast<int>(s));
    std::vector<ad::Value> layer_cost(static_cast<size_t>(max_depth));
    for (int j = 0; j < max_depth; ++j) {
      const space::ArchParamGroup& beta = arch.beta_group(static_cast<int>(s), j);
      const space::GroupBinding* bb =
          fwd.binding_of(arch.beta_of_layer[s][static_cast<size_t>(j)]);
      ad::Value acc;
      int n_terms = 0;
      for (int c = 0; c < beta.size(); ++c) {
        if (!beta.active[c]) continue;
        const space::OperatorCandidate& cand =
            net.stages[s].layers[static_cast<size_t>(j)].cands[static_cast<size_t>(c)];

        // expected output channels per conv: mask mass or the fixed choice
        ad::Value eout[2];
        for (int conv = 0; conv < 2; ++conv) {
          if (const ad::Value* mn = mask_node_of(static_cast<int>(s), j, c, conv)) {
            eout[conv] = tape.sum(*mn);
          } else {
            const auto& g = arch.gamma_group(static_cast<int>(s), j, c, conv);
            eout[conv] =
                tape.scalar_const(static_cast<double>(g.option_a[g.argmax_active()]));
          }
        }
        // (3*Cmax+1)*E1 + (3*E1+1)*E2, plus the s*Cmax overhead when pooled
        ad::Value kernel_cost =
            tape.add(tape.scale(eout[0], 3.0 * spec.c_max + 1.0),
                     tape.mul(tape.add(tape.scale(eout[0], 3.0), tape.scalar_const(1.0)),
                              eout[1]));
        ad::Value op_cost;
        if (cand.spatial == 1) {
          op_cost = tape.scale(kernel_cost, static_cast<double>(length));
        } else {
          op_cost = tape.scale(
              tape.add(kernel_cost,
                       tape.scalar_const(static_cast<double>(cand.spatial) * spec.c_max)),
              static_cast<double>(length / cand.spatial));
        }
        if (bb != nullptr) {
          int slot = 0;
          for (size_t k = 0; k < bb->active_ids.size(); ++k)
            if (bb->active_ids[k] == c) slot = static_cast<int>(k);
          op_cost = tape.mul(tape.pick(bb->probs, slot), op_cost);
        }
        acc = n_terms == 0 ? op_cost : tape.add(acc, op_cost);
        ++n_terms;
      }
      layer_cost[static_cast<size_t>(j)] = acc;
    }

    std::vector<ad::Value> cumulative(static_cast<size_t>(max_depth) + 1);
    for (int j = 0; j < max_depth; ++j)
      cumulative[static_cast<size_t>(j) + 1] =
          j == 0 ? layer_cost[0]
                 : tape.add(cumulative[static_cast<size_t>(j)], layer_cost[static_cast<size_t>(j)]);

    const space::GroupBinding* db = fwd.binding_of(arch.depth_of_stage[s]);
    if (db == nullptr) {
      const int d = depth.option_a[depth.argmax_active()];
      if (d > 0) total = tape.add(total, cumulative[static_cast<size_t>(d)]);
    } else {
      for (size_t k = 0; k < db->active_ids.size(); ++k) {
        const int d = depth.option_a[static_cast<size_t>(db->active_ids[k])];
        if (d > 0)
          total = tape.add(total, tape.mul(tape.pick(db->probs, static_cast<int>(k)),
                                           cumulative[static_cast<size_t>(d)]));
      }
    }
  }
  return total;
}

ad::Value flops_constraint_node(ad::Tape& tape, ad::Value e_f, const CostSpec& spec) {
  spec.validate();
  const double value = tape.value_scalar(e_f);
  const double t = spec.target_flops;
  const double low = spec.delta * t;
  if (value < low) {
    // below the band: penalize distance to T_F; gradient pushes E_F upward
    ad::Value diff = tape.sub(tape.scalar_const(t), e_f);
    return tape.scale(tape.log(tape.clamp_min(diff, kAbsFloor)), spec.lambda);
  }
  if (value > t) {
    ad::Value diff = tape.sub(e_f, tape.scalar_const(low));
    return tape.scale(tape.log(tape.clamp_min(diff, kAbsFloor)), spec.lambda);
  }
  return tape.scalar_const(0.0);
}

double factorized_conv2d_flops(double e_in, double e_first, double e_second, int height,
                               int width, int spatial) {
  if (spatial < 1 || height % spatial != 0 || width % spatial != 0)
    throw std::invalid_argument("factorized_conv2d_flops: spatial must divide H and W");
  const double kernel_cost =
      (3.0 * e_in + 1.0) * e_first + (3.0 * e_first + 1.0) * e_second;
  if (spatial == 1) return kernel_cost * height * width;
  return (kernel_cost + spatial * spatial * e_in) * (height / spatial) * (width / spatial);
}

}  // namespace ssr::cost
