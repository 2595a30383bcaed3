#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssr/archspace.hpp"
#include "ssr/bench.hpp"
#include "ssr/costmodel.hpp"
#include "ssr/regloss.hpp"
#include "ssr/shrink.hpp"

namespace ssr::engine {

struct SearchConfig {
  int epochs = 200;
  int batch_size = 16;
  double arch_lr = 0.002;
  double arch_weight_decay = 0.001;
  double weight_lr = 0.0003;
  double weight_weight_decay = 0.0001;
  double poly_power = 0.9;
  reg::LevelWeights rho;
  double h = 0.1;
  bool shrink_enabled = true;
  reg::AuxKind regularizer = reg::AuxKind::kSsr;
  bool ie_negate = false;  // flips the sign of the information-entropy arm
  std::optional<cost::CostSpec> cost;
  uint64_t seed = 1;
  void validate() const;
};

struct GroupTrace {
  space::GroupKey key;
  std::vector<int> active_ids;
  std::vector<double> probs;
  std::vector<int> option_a;
  std::vector<int> option_b;
};

struct TrajectoryRecord {
  int epoch = 0;
  double task_loss = 0.0;       // weight-step loss, epoch mean
  double arch_task_loss = 0.0;  // architecture-step task loss, epoch mean
  double reg_loss = 0.0;        // weighted regularizer term, epoch mean
  double flops_loss = 0.0;
  double expected_flops = 0.0;
  double entropy_depth = 0.0;
  double entropy_ds = 0.0;
  double entropy_channel = 0.0;
  double entropy_total = 0.0;
  std::vector<GroupTrace> groups;
  std::vector<shrink::ShrinkEvent> events;
};

struct SearchState {
  space::SuperNet net;
  space::ArchState arch;
  SearchConfig config;
  int epoch = 0;
  int64_t arch_steps = 0;
  int64_t weight_steps = 0;
};

struct StepStats {
  double task_loss = 0.0;
  double arch_task_loss = 0.0;
  double reg_loss = 0.0;
  double flops_loss = 0.0;
  double expected_flops = 0.0;
};

struct GapReport {
  double continuous_loss = 0.0;
  double discrete_loss = 0.0;
  double gap = 0.0;  // discrete minus continuous, signed
};

struct SearchResult {
  space::DiscreteArchitecture arch;
  bool converged = false;
  int epochs_run = 0;
  int zero_entropy_epoch = -1;
  double final_entropy = 0.0;
  double final_expected_flops = 0.0;
  GapReport gap;
  std::vector<TrajectoryRecord> trajectory;
};

SearchState init_search(const space::SpaceConfig& space_config, const SearchConfig& config);

// One bi-level step: architecture update on the validation batch (task +
// regularizer + optional FLOPs constraint), then weight update on the train
// batch. Matches the published alternation order.
StepStats search_step(SearchState& state, const space::Batch& train_batch,
                      const space::Batch& val_batch);

// Shrinks once (when enabled), freezes cascade-removed weights, and appends
// the epoch record. Returns the events fired.
std::vector<shrink::ShrinkEvent> end_epoch(SearchState& state);

using TrajectorySink = std::function<void(const TrajectoryRecord&)>;

// Full search loop. Stops early once every group is a singleton; otherwise
// runs out the epoch budget and flags converged=false. Non-finite losses
// abort with a diagnostic snapshot (via the registered callback).
SearchResult run_search(const space::SpaceConfig& space_config, const SearchConfig& config,
                        const bench::Dataset& data, TrajectorySink sink = {});

// Argmax of the normalized probabilities per group; ties break toward the
// lowest candidate index.
space::DiscreteArchitecture discretize(const space::ArchState& arch,
                                       const space::SpaceConfig& config);

// Validation loss at fixed weights, continuous vs argmax-one-hot probabilities.
GapReport discretization_gap(space::SuperNet& net, const space::ArchState& arch,
                             const bench::Dataset& data);

struct RetrainResult {
  double metric = 0.0;  // mean-IoU analog on the validation split
  double final_loss = 0.0;
};

// Trains the hard-masked subnet from scratch with the weight optimizer only.
RetrainResult retrain(const space::DiscreteArchitecture& arch,
                      const space::SpaceConfig& space_config, const bench::Dataset& data,
                      const bench::RetrainConfig& config);

struct EvalResult {
  double loss = 0.0;
  double miou = 0.0;
};
EvalResult evaluate(space::SuperNet& net, const space::ArchState& arch,
                    const bench::Dataset& data, bench::Split split, space::ProbMode mode);

// Raised when a search hits a non-finite loss; carries the failing state so
// callers can snapshot it.
struct SearchAbort : std::runtime_error {
  explicit SearchAbort(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ssr::engine
