#include "ssr/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <future>
#include <stdexcept>
#include <thread>

#include "ssr/engine.hpp"
#include "ssr/rng.hpp"

namespace ssr::bench {

void TaskConfig::validate() const {
  if (length < 1) throw std::invalid_argument("task.length: must be >= 1");
  if (channels < 1) throw std::invalid_argument("task.channels: must be >= 1");
  if (classes < 2) throw std::invalid_argument("task.classes: must be >= 2");
  if (motif_widths.empty()) throw std::invalid_argument("task.motif_widths: must be non-empty");
  for (int w : motif_widths) {
    if (w < 1) throw std::invalid_argument("task.motif_widths: must be positive");
    if (w > length)
      throw std::invalid_argument("task.motif_widths: width " + std::to_string(w) +
                                  " exceeds length " + std::to_string(length));
  }
  if (noise_std < 0.0) throw std::invalid_argument("task.noise_std: must be >= 0");
  if (train_samples < 1 || val_samples < 1 || test_samples < 1)
    throw std::invalid_argument("task sample counts: must be >= 1");
  if (motifs_per_sample < 1)
    throw std::invalid_argument("task.motifs_per_sample: must be >= 1");
}

std::vector<int> Dataset::split_ids(Split split) const {
  int begin = 0, end = config.train_samples;
  if (split == Split::kVal) {
    begin = config.train_samples;
    end = begin + config.val_samples;
  } else if (split == Split::kTest) {
    begin = config.train_samples + config.val_samples;
    end = begin + config.test_samples;
  }
  std::vector<int> ids(static_cast<size_t>(end - begin));
  for (int i = begin; i < end; ++i) ids[static_cast<size_t>(i - begin)] = i;
  return ids;
}

space::Batch Dataset::batch(std::span<const int> sample_ids) const {
  space::Batch b;
  b.n = static_cast<int>(sample_ids.size());
  b.channels = config.channels;
  b.length = config.length;
  b.inputs.reserve(static_cast<size_t>(b.n) * b.channels * b.length);
  b.labels.reserve(static_cast<size_t>(b.n) * b.length);
  const int64_t in_stride = static_cast<int64_t>(config.channels) * config.length;
  for (int id : sample_ids) {
    const double* in = inputs.data() + id * in_stride;
    b.inputs.insert(b.inputs.end(), in, in + in_stride);
    const double* lb = labels.data() + static_cast<int64_t>(id) * config.length;
    b.labels.insert(b.labels.end(), lb, lb + config.length);
  }
  return b;
}

uint64_t Dataset::checksum() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::vector<double>& v) {
    for (double d : v) {
      uint64_t bits;
      std::memcpy(&bits, &d, sizeof bits);
      for (int byte = 0; byte < 8; ++byte) {
        h ^= (bits >> (8 * byte)) & 0xFF;
        h *= 0x100000001b3ULL;
      }
    }
  };
  feed(inputs);
  feed(labels);
  return h;
}

Dataset gen_task(const TaskConfig& config) {
  config.validate();
  Dataset data;
  data.config = config;
  const int n = data.samples();
  const int L = config.length;
  data.inputs.assign(static_cast<size_t>(n) * config.channels * L, 0.0);
  data.labels.assign(static_cast<size_t>(n) * L, 0.0);

  constexpr double kAmplitude = 2.0;
  for (int i = 0; i < n; ++i) {
    rng::SplitMix64 r(rng::substream(config.seed, "sample", {i}));
    double* sig = data.inputs.data() + static_cast<int64_t>(i) * config.channels * L;
    double* lab = data.labels.data() + static_cast<int64_t>(i) * L;

    // covering motif per position: wider wins, later plant breaks ties
    std::vector<int> best_width(static_cast<size_t>(L), 0);
    for (int m = 0; m < config.motifs_per_sample; ++m) {
      const int cls = 1 + static_cast<int>(r.below(static_cast<uint64_t>(config.classes - 1)));
      const int width =
          config.motif_widths[r.below(config.motif_widths.size())];
      const int start = static_cast<int>(r.below(static_cast<uint64_t>(L - width + 1)));
      for (int t = 0; t < width; ++t) {
        const double u = (t + 0.5) / width;
        sig[start + t] += kAmplitude * std::sin(3.141592653589793 * cls * u);
        if (width >= best_width[static_cast<size_t>(start + t)]) {
          best_width[static_cast<size_t>(start + t)] = width;
          lab[start + t] = cls;
        }
      }
    }
    for (int c = 0; c < config.channels; ++c)
      for (int l = 0; l < L; ++l)
        sig[static_cast<int64_t>(c) * L + l] += r.normal(0.0, config.noise_std);
  }
  return data;
}

double space_count(const space::SpaceConfig& config) {
  config.validate();
  double total = 1.0;
  for (const space::StageSpec& st : config.stages) {
    std::vector<double> cum(st.layers.size() + 1, 1.0);
    for (size_t j = 0; j < st.layers.size(); ++j) {
      const space::LayerSpec& ls = st.layers[j];
      cum[j + 1] = cum[j] * static_cast<double>(ls.dilations.size()) *
                   static_cast<double>(ls.spatials.size()) *
                   static_cast<double>(ls.channels[0].size()) *
                   static_cast<double>(ls.channels[1].size());
    }
    double stage_count = 0.0;
    for (int d : st.depth_options) stage_count += cum[static_cast<size_t>(d)];
    total *= stage_count;
  }
  return total;
}

namespace {

// odometer over the layer choices of one stage at fixed depth
struct StageEnum {
  const space::StageSpec* spec;
  int depth;
  std::vector<std::array<int, 4>> idx;  // per layer: dilation, spatial, c0, c1

  void reset() { idx.assign(static_cast<size_t>(depth), {0, 0, 0, 0}); }

  space::DiscreteArchitecture::Stage current() const {
    space::DiscreteArchitecture::Stage st;
    st.depth = depth;
    st.layers.resize(static_cast<size_t>(depth));
    for (int j = 0; j < depth; ++j) {
      const space::LayerSpec& ls = spec->layers[static_cast<size_t>(j)];
      const auto& ix = idx[static_cast<size_t>(j)];
      st.layers[static_cast<size_t>(j)] = {
          ls.dilations[static_cast<size_t>(ix[0])], ls.spatials[static_cast<size_t>(ix[1])],
          {ls.channels[0][static_cast<size_t>(ix[2])], ls.channels[1][static_cast<size_t>(ix[3])]}};
    }
    return st;
  }

  // advances the last layer fastest; returns false after wrapping
  bool next() {
    for (int j = depth - 1; j >= 0; --j) {
      const space::LayerSpec& ls = spec->layers[static_cast<size_t>(j)];
      auto& ix = idx[static_cast<size_t>(j)];
      const int limits[4] = {static_cast<int>(ls.dilations.size()),
                             static_cast<int>(ls.spatials.size()),
                             static_cast<int>(ls.channels[0].size()),
                             static_cast<int>(ls.channels[1].size())};
      for (int f = 3; f >= 0; --f) {
        if (++ix[static_cast<size_t>(f)] < limits[f]) return true;
        ix[static_cast<size_t>(f)] = 0;
      }
    }
    return false;
  }
};

void enumerate_stage(const space::StageSpec& spec,
                     std::vector<space::DiscreteArchitecture::Stage>& out) {
  for (int d : spec.depth_options) {
    StageEnum e{&spec, d, {}};
    e.reset();
    if (d == 0) continue;
    do {
      out.push_back(e.current());
    } while (e.next());
  }
}

}  // namespace

std::vector<space::DiscreteArchitecture> enumerate_space(const space::SpaceConfig& config,
                                                         int64_t cap) {
  const double count = space_count(config);
  if (count > static_cast<double>(cap))
    throw std::invalid_argument("enumerate_space: count " + std::to_string(count) +
                                " exceeds cap " + std::to_string(cap));

  std::vector<std::vector<space::DiscreteArchitecture::Stage>> per_stage(config.stages.size());
  for (size_t s = 0; s < config.stages.size(); ++s)
    enumerate_stage(config.stages[s], per_stage[s]);

  std::vector<space::DiscreteArchitecture> archs;
  archs.reserve(static_cast<size_t>(count));
  std::vector<size_t> pick(config.stages.size(), 0);
  while (true) {
    space::DiscreteArchitecture a;
    a.stages.reserve(config.stages.size());
    for (size_t s = 0; s < config.stages.size(); ++s)
      a.stages.push_back(per_stage[s][pick[s]]);
    archs.push_back(std::move(a));
    int s = static_cast<int>(config.stages.size()) - 1;
    for (; s >= 0; --s) {
      if (++pick[static_cast<size_t>(s)] < per_stage[static_cast<size_t>(s)].size()) break;
      pick[static_cast<size_t>(s)] = 0;
    }
    if (s < 0) break;
  }
  return archs;
}

double exact_flops(const space::DiscreteArchitecture& arch, const space::SpaceConfig& config) {
  space::validate_arch(config, arch);
  // fixed path: stem conv at full length, transition convs, kernel-1 head
  const int c0 = config.stages[0].c_max;
  double total = (3.0 * config.input_channels + 1.0) * c0 * config.input_length;
  for (size_t s = 1; s < config.stages.size(); ++s)
    total += (3.0 * config.stages[s - 1].c_max + 1.0) * config.stages[s].c_max *
             config.stage_length(static_cast<int>(s) - 1);
  total += (config.stages.back().c_max + 1.0) * config.num_classes * config.input_length;

  for (size_t s = 0; s < config.stages.size(); ++s) {
    const int c_max = config.stages[s].c_max;
    const int length = config.stage_length(static_cast<int>(s));
    const auto& st = arch.stages[s];
    for (int j = 0; j < st.depth; ++j) {
      const auto& l = st.layers[static_cast<size_t>(j)];
      const double per_pos = (3.0 * c_max + 1.0) * l.channels[0] +
                             (3.0 * l.channels[0] + 1.0) * l.channels[1];
      if (l.spatial == 1) {
        total += per_pos * length;
      } else {
        total += (per_pos + static_cast<double>(l.spatial) * c_max) * (length / l.spatial);
      }
    }
  }
  return total;
}

double mean_iou(std::span<const int> pred, std::span<const double> truth, int classes) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("mean_iou: size mismatch");
  std::vector<int64_t> inter(static_cast<size_t>(classes), 0);
  std::vector<int64_t> uni(static_cast<size_t>(classes), 0);
  for (size_t i = 0; i < pred.size(); ++i) {
    const int p = pred[i];
    const int t = static_cast<int>(truth[i]);
    if (p == t) {
      ++inter[static_cast<size_t>(p)];
      ++uni[static_cast<size_t>(p)];
    } else {
      ++uni[static_cast<size_t>(p)];
      ++uni[static_cast<size_t>(t)];
    }
  }
  double acc = 0.0;
  int present = 0;
  for (int c = 0; c < classes; ++c) {
    if (uni[static_cast<size_t>(c)] == 0) continue;
    acc += static_cast<double>(inter[static_cast<size_t>(c)]) /
           static_cast<double>(uni[static_cast<size_t>(c)]);
    ++present;
  }
  return present == 0 ? 0.0 : acc / present;
}

std::vector<OracleEntry> oracle_rank(const space::SpaceConfig& config, const Dataset& data,
                                     const RetrainConfig& budget, int workers, int64_t cap) {
  const std::vector<space::DiscreteArchitecture> archs = enumerate_space(config, cap);
  std::vector<OracleEntry> entries(archs.size());

  int n_workers = workers > 0 ? workers
                              : static_cast<int>(std::thread::hardware_concurrency());
  if (n_workers < 1) n_workers = 1;
  n_workers = std::min<int>(n_workers, static_cast<int>(archs.size()));

  std::atomic<size_t> cursor{0};
  auto worker = [&]() {
    while (true) {
      const size_t i = cursor.fetch_add(1);
      if (i >= archs.size()) return;
      OracleEntry e;
      e.index = static_cast<int>(i);
      e.arch = archs[i];
      e.metric = engine::retrain(archs[i], config, data, budget).metric;
      e.flops = exact_flops(archs[i], config);
      entries[i] = std::move(e);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(n_workers));
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  std::stable_sort(entries.begin(), entries.end(), [](const OracleEntry& a, const OracleEntry& b) {
    if (a.metric != b.metric) return a.metric > b.metric;
    return a.index < b.index;
  });
  return entries;
}

}  // namespace ssr::bench
