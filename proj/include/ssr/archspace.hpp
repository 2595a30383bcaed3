#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ssr/tensor.hpp"

namespace ssr::space {

enum class Level : uint8_t { kDepth, kDilationSpatial, kChannel };
const char* level_name(Level level);

// Option lists for one searchable layer. Channel options apply per
// convolution (index 0/1 = first/second conv of the residual body).
struct LayerSpec {
  std::vector<int> dilations;
  std::vector<int> spatials;
  std::array<std::vector<int>, 2> channels;
};

struct StageSpec {
  std::vector<int> depth_options;  // ascending; max == layers.size()
  int c_max = 0;
  int pre_pool = 1;  // fixed average-pool factor ahead of the chain (stage > 0)
  std::vector<LayerSpec> layers;
};

struct SpaceConfig {
  int input_channels = 1;
  int input_length = 0;
  int num_classes = 2;
  int stem_pool = 1;
  std::vector<StageSpec> stages;

  void validate() const;  // throws std::invalid_argument naming the field
  int stage_length(int stage) const;  // sequence length inside the stage chain
  int total_pool() const;
};

struct GroupKey {
  Level level = Level::kDepth;
  int stage = -1;
  int layer = -1;  // dilation-spatial and channel groups
  int cand = -1;   // operator candidate index (channel groups)
  int conv = -1;   // 0 or 1 (channel groups)
  std::string str() const;
};

// One softmax-like choice group. `logits` are the raw parameters behind the
// sigmoid-normalized probabilities; `active` masks candidates that have not
// been pruned. A frozen group was cascade-removed and is permanently out of
// every loss, entropy and update.
struct ArchParamGroup {
  GroupKey key;
  std::vector<double> logits;
  std::vector<uint8_t> active;
  bool frozen = false;

  // candidate metadata: depth value / dilation rate / channel count
  std::vector<int> option_a;
  // spatial resolution for dilation-spatial groups, unused otherwise
  std::vector<int> option_b;

  // optimizer moments, managed by the engine; reset on prune
  std::vector<double> m, v;

  int size() const { return static_cast<int>(logits.size()); }
  int n_active() const;
  int argmax_active() const;  // highest sigmoid(logit); ties -> lowest index
};

struct ArchState {
  std::vector<ArchParamGroup> groups;
  std::vector<int> depth_of_stage;
  std::vector<std::vector<int>> beta_of_layer;                          // [stage][layer]
  std::vector<std::vector<std::vector<std::array<int, 2>>>> gamma_of;   // [stage][layer][cand]

  ArchParamGroup& depth_group(int s) { return groups[depth_of_stage[s]]; }
  ArchParamGroup& beta_group(int s, int j) { return groups[beta_of_layer[s][j]]; }
  ArchParamGroup& gamma_group(int s, int j, int c, int conv) {
    return groups[gamma_of[s][j][c][conv]];
  }
  const ArchParamGroup& depth_group(int s) const { return groups[depth_of_stage[s]]; }
  const ArchParamGroup& beta_group(int s, int j) const { return groups[beta_of_layer[s][j]]; }
  const ArchParamGroup& gamma_group(int s, int j, int c, int conv) const {
    return groups[gamma_of[s][j][c][conv]];
  }
};

struct ParamTensor {
  std::string name;
  ad::Shape shape;
  std::vector<double> value;
  std::vector<double> m, v;  // optimizer moments
  bool frozen = false;
};

struct OperatorCandidate {
  int dilation = 1;
  int spatial = 1;
  ParamTensor w1, b1, w2, b2;
};

struct LayerChain {
  std::vector<OperatorCandidate> cands;
};

struct StageNet {
  std::vector<LayerChain> layers;
};

// Weight-sharing supernet. The layer chain of each stage is shared by every
// depth branch; zero-one channel masks are shared within a layer.
struct SuperNet {
  SpaceConfig config;
  ParamTensor stem_w, stem_b;
  std::vector<ParamTensor> trans_w, trans_b;  // stage transitions, index >= 1
  ParamTensor head_w, head_b;
  std::vector<StageNet> stages;

  template <typename Fn>
  void for_each_param(Fn&& fn) {
    fn(stem_w); fn(stem_b);
    for (size_t i = 1; i < trans_w.size(); ++i) { fn(trans_w[i]); fn(trans_b[i]); }
    for (auto& st : stages)
      for (auto& layer : st.layers)
        for (auto& cand : layer.cands) { fn(cand.w1); fn(cand.b1); fn(cand.w2); fn(cand.b2); }
    fn(head_w); fn(head_b);
  }
};

// Prefix masks: mask k has the first option_k entries set to one.
std::vector<std::vector<double>> make_channel_masks(const std::vector<int>& channel_options,
                                                    int c_max);

struct SupernetBuild {
  SuperNet net;
  ArchState arch;
};
SupernetBuild build_supernet(const SpaceConfig& config, uint64_t seed);

// One concrete choice per decision group.
struct DiscreteArchitecture {
  struct Layer {
    int dilation = 1;
    int spatial = 1;
    std::array<int, 2> channels{0, 0};
  };
  struct Stage {
    int depth = 0;
    std::vector<Layer> layers;  // entries beyond `depth` are ignored
  };
  std::vector<Stage> stages;

  std::string encode() const;  // canonical form, covers only the used layers
};

void validate_arch(const SpaceConfig& config, const DiscreteArchitecture& arch);

// Search space with every option list collapsed to the architecture's choice.
SpaceConfig restrict_to(const SpaceConfig& config, const DiscreteArchitecture& arch);

// Copies the weights of the selected candidates from `src` into a supernet
// built on restrict_to(config, arch). Stream-keyed inits make this mostly a
// debugging aid; forward-equivalence tests rely on it.
void copy_selected_weights(const SuperNet& src, const DiscreteArchitecture& arch,
                           SuperNet& dst);

struct Batch {
  int n = 0;
  int channels = 0;
  int length = 0;
  std::vector<double> inputs;  // n * channels * length
  std::vector<double> labels;  // n * length, integer class ids
};

enum class ProbMode { kContinuous, kOneHot };

struct GroupBinding {
  int group = -1;
  ad::Value theta;             // leaf over active logits
  ad::Value probs;             // normalized probabilities over active candidates
  std::vector<int> active_ids; // original candidate index per leaf coordinate
};

struct MaskBinding {
  int stage = -1, layer = -1, cand = -1, conv = -1;
  ad::Value mask;  // effective per-channel mask on the tape
};

struct ForwardGraph {
  ad::Value input;
  ad::Value labels;
  ad::Value logits;
  ad::Value task_loss;
  std::vector<std::pair<ParamTensor*, ad::Value>> params;
  std::vector<GroupBinding> groups;        // continuous mode only
  std::vector<MaskBinding> masks;          // continuous mode only
  const GroupBinding* binding_of(int group_index) const;
};

// Builds the relaxed forward pass on the tape: depth mixtures over branch
// taps, operator mixtures of pool->conv->upsample candidates, weighted
// channel masks after each convolution. Pruned candidates are skipped
// entirely and receive no gradient.
ForwardGraph supernet_forward(ad::Tape& tape, SuperNet& net, const ArchState& arch,
                              const Batch& batch, ProbMode mode);

// log10 of the discrete-architecture count under exact enumeration semantics.
double cardinality_log10(const SpaceConfig& config);
// log10 under the published convention: (channel combos per operator) raised
// to (operators per layer x total searchable layers), plus the product of
// per-stage depth-option counts.
double cardinality_log10_paper(const SpaceConfig& config);

}  // namespace ssr::space
