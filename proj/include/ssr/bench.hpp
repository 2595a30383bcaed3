#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssr/archspace.hpp"

namespace ssr::bench {

// Synthetic multi-scale 1D dense-labeling task. Motifs are class-specific
// additive waveforms whose identity is only readable over a span comparable
// to their width, so receptive field drives attainable accuracy.
struct TaskConfig {
  int length = 64;
  int channels = 1;
  int classes = 3;  // background plus classes-1 motif shapes
  std::vector<int> motif_widths{3, 9, 27};
  double noise_std = 0.3;
  int train_samples = 128;
  int val_samples = 64;
  int test_samples = 64;
  int motifs_per_sample = 3;
  uint64_t seed = 42;
  void validate() const;
};

enum class Split : uint8_t { kTrain, kVal, kTest };

struct Dataset {
  TaskConfig config;
  std::vector<double> inputs;  // samples x channels x length
  std::vector<double> labels;  // samples x length, integer class ids

  int samples() const { return config.train_samples + config.val_samples + config.test_samples; }
  std::vector<int> split_ids(Split split) const;
  space::Batch batch(std::span<const int> sample_ids) const;
  uint64_t checksum() const;  // FNV-1a over the raw bit patterns
};

Dataset gen_task(const TaskConfig& config);

// Exhaustive, duplicate-free enumeration of the discrete space. Rejects when
// the exact count exceeds the cap; this is the brute force that large spaces
// forbid.
std::vector<space::DiscreteArchitecture> enumerate_space(const space::SpaceConfig& config,
                                                         int64_t cap = 10000);
// Exact count without materializing the list.
double space_count(const space::SpaceConfig& config);

// Exact operation count of a discrete architecture. Deliberately a separate
// code path from the expected-cost model; serves as its oracle.
double exact_flops(const space::DiscreteArchitecture& arch, const space::SpaceConfig& config);

struct RetrainConfig {
  int epochs = 60;
  int batch_size = 16;
  double lr = 0.0003;
  double weight_decay = 1e-4;
  double poly_power = 0.9;
  uint64_t seed = 1;
};

struct OracleEntry {
  int index = -1;  // position in enumerate_space order
  space::DiscreteArchitecture arch;
  double metric = 0.0;
  double flops = 0.0;
};

// Retrains every architecture in the space under an identical budget and
// sorts by metric descending (ties by enumeration index). `workers` == 0
// uses hardware concurrency; results are merged by index, so parallel and
// serial runs produce identical tables.
std::vector<OracleEntry> oracle_rank(const space::SpaceConfig& config, const Dataset& data,
                                     const RetrainConfig& budget, int workers = 0,
                                     int64_t cap = 10000);

// Mean per-class intersection-over-union over positions; classes absent from
// both prediction and truth are skipped.
double mean_iou(std::span<const int> pred, std::span<const double> truth, int classes);

}  // namespace ssr::bench
