#include "ssr/archspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssr/rng.hpp"

namespace ssr::space {

namespace {

[[noreturn]] void reject(const std::string& field, const std::string& why) {
  throw std::invalid_argument(field + ": " + why);
}

void check_ascending(const std::vector<int>& v, const std::string& field) {
  if (v.empty()) reject(field, "must be non-empty");
  for (size_t i = 0; i < v.size(); ++i) {
    if (v[i] <= 0) reject(field, "entries must be positive");
    if (i > 0 && v[i] <= v[i - 1]) reject(field, "entries must be strictly ascending");
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void init_uniform(ParamTensor& p, uint64_t stream, int fan_in) {
  rng::SplitMix64 r(stream);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  p.value.resize(static_cast<size_t>(ad::numel(p.shape)));
  for (double& v : p.value) v = r.uniform(-bound, bound);
  p.m.assign(p.value.size(), 0.0);
  p.v.assign(p.value.size(), 0.0);
}

}  // namespace

const char* level_name(Level level) {
  switch (level) {
    case Level::kDepth: return "depth";
    case Level::kDilationSpatial: return "dilation_spatial";
    case Level::kChannel: return "channel";
  }
  return "?";
}

std::string GroupKey::str() const {
  std::string s = level_name(level);
  s += "/s" + std::to_string(stage);
  if (layer >= 0) s += "/l" + std::to_string(layer);
  if (cand >= 0) s += "/c" + std::to_string(cand);
  if (conv >= 0) s += "/k" + std::to_string(conv);
  return s;
}

int ArchParamGroup::n_active() const {
  int n = 0;
  for (uint8_t a : active) n += a ? 1 : 0;
  return n;
}

int ArchParamGroup::argmax_active() const {
  int best = -1;
  double best_sig = -1.0;
  for (int i = 0; i < size(); ++i) {
    if (!active[i]) continue;
    const double s = stable_sigmoid(logits[i]);
    if (s > best_sig) {
      best_sig = s;
      best = i;
    }
  }
  return best;
}

void SpaceConfig::validate() const {
  if (input_channels < 1) reject("input_channels", "must be >= 1");
  if (input_length < 1) reject("input_length", "must be >= 1");
  if (num_classes < 2) reject("num_classes", "must be >= 2");
  if (stem_pool < 1) reject("stem_pool", "must be >= 1");
  if (input_length % stem_pool != 0) reject("stem_pool", "must divide input_length");
  if (stages.empty()) reject("stages", "must be non-empty");

  int length = input_length / stem_pool;
  for (size_t s = 0; s < stages.size(); ++s) {
    const StageSpec& st = stages[s];
    const std::string pre = "stages[" + std::to_string(s) + "].";
    if (st.c_max < 1) reject(pre + "c_max", "must be >= 1");
    if (st.pre_pool < 1) reject(pre + "pre_pool", "must be >= 1");
    if (s == 0 && st.pre_pool != 1) reject(pre + "pre_pool", "stage 0 pools via stem_pool");
    if (length % st.pre_pool != 0) reject(pre + "pre_pool", "must divide the stage input length");
    length /= st.pre_pool;

    check_ascending(st.depth_options, pre + "depth_options");
    if (st.layers.empty()) reject(pre + "layers", "must be non-empty");
    if (st.depth_options.back() != static_cast<int>(st.layers.size()))
      reject(pre + "depth_options",
             "max option (" + std::to_string(st.depth_options.back()) +
                 ") must equal the layer-chain length (" + std::to_string(st.layers.size()) + ")");

    for (size_t j = 0; j < st.layers.size(); ++j) {
      const LayerSpec& ls = st.layers[j];
      const std::string lp = pre + "layers[" + std::to_string(j) + "].";
      check_ascending(ls.dilations, lp + "dilations");
      check_ascending(ls.spatials, lp + "spatials");
      for (int sp : ls.spatials)
        if (length % sp != 0)
          reject(lp + "spatials", "option " + std::to_string(sp) +
                                      " does not divide the stage length " +
                                      std::to_string(length));
      for (int conv = 0; conv < 2; ++conv) {
        const std::string cp = lp + "channels[" + std::to_string(conv) + "]";
        check_ascending(ls.channels[conv], cp);
        if (ls.channels[conv].back() != st.c_max)
          reject(cp, "max (" + std::to_string(ls.channels[conv].back()) +
                         ") must equal c_max (" + std::to_string(st.c_max) + ")");
      }
    }
  }
}

int SpaceConfig::stage_length(int stage) const {
  int length = input_length / stem_pool;
  for (int s = 0; s <= stage; ++s) length /= stages[static_cast<size_t>(s)].pre_pool;
  return length;
}

int SpaceConfig::total_pool() const {
  int p = stem_pool;
  for (const StageSpec& st : stages) p *= st.pre_pool;
  return p;
}

std::vector<std::vector<double>> make_channel_masks(const std::vector<int>& channel_options,
                                                    int c_max) {
  check_ascending(channel_options, "channel_options");
  std::vector<std::vector<double>> masks;
  masks.reserve(channel_options.size());
  for (int c : channel_options) {
    if (c > c_max)
      reject("channel_options", "option " + std::to_string(c) + " exceeds c_max " +
                                    std::to_string(c_max));
    std::vector<double> m(static_cast<size_t>(c_max), 0.0);
    std::fill(m.begin(), m.begin() + c, 1.0);
    masks.push_back(std::move(m));
  }
  return masks;
}

SupernetBuild build_supernet(const SpaceConfig& config, uint64_t seed) {
  config.validate();
  SupernetBuild out;
  SuperNet& net = out.net;
  ArchState& arch = out.arch;
  net.config = config;

  const int num_stages = static_cast<int>(config.stages.size());
  const int c0 = config.stages[0].c_max;

  net.stem_w = {"stem.w", {c0, config.input_channels, 3}, {}, {}, {}, false};
  net.stem_b = {"stem.b", {c0}, {}, {}, {}, false};
  init_uniform(net.stem_w, rng::substream(seed, "stem", {0}), config.input_channels * 3);
  init_uniform(net.stem_b, rng::substream(seed, "stem", {1}), config.input_channels * 3);

  net.trans_w.resize(static_cast<size_t>(num_stages));
  net.trans_b.resize(static_cast<size_t>(num_stages));
  for (int s = 1; s < num_stages; ++s) {
    const int cin = config.stages[static_cast<size_t>(s - 1)].c_max;
    const int cout = config.stages[static_cast<size_t>(s)].c_max;
    net.trans_w[s] = {"trans" + std::to_string(s) + ".w", {cout, cin, 3}, {}, {}, {}, false};
    net.trans_b[s] = {"trans" + std::to_string(s) + ".b", {cout}, {}, {}, {}, false};
    init_uniform(net.trans_w[s], rng::substream(seed, "trans", {s, 0}), cin * 3);
    init_uniform(net.trans_b[s], rng::substream(seed, "trans", {s, 1}), cin * 3);
  }

  const int c_last = config.stages.back().c_max;
  net.head_w = {"head.w", {config.num_classes, c_last, 1}, {}, {}, {}, false};
  net.head_b = {"head.b", {config.num_classes}, {}, {}, {}, false};
  init_uniform(net.head_w, rng::substream(seed, "head", {0}), c_last);
  init_uniform(net.head_b, rng::substream(seed, "head", {1}), c_last);

  net.stages.resize(static_cast<size_t>(num_stages));
  arch.depth_of_stage.resize(static_cast<size_t>(num_stages));
  arch.beta_of_layer.resize(static_cast<size_t>(num_stages));
  arch.gamma_of.resize(static_cast<size_t>(num_stages));

  auto add_group = [&arch](GroupKey key, std::vector<int> opt_a, std::vector<int> opt_b) {
    ArchParamGroup g;
    g.key = key;
    g.option_a = std::move(opt_a);
    g.option_b = std::move(opt_b);
    const size_t n = g.option_a.size();
    g.logits.assign(n, 0.0);  // uniform simplex center
    g.active.assign(n, 1);
    g.m.assign(n, 0.0);
    g.v.assign(n, 0.0);
    arch.groups.push_back(std::move(g));
    return static_cast<int>(arch.groups.size() - 1);
  };

  for (int s = 0; s < num_stages; ++s) {
    const StageSpec& spec = config.stages[static_cast<size_t>(s)];
    arch.depth_of_stage[s] =
        add_group({Level::kDepth, s, -1, -1, -1}, spec.depth_options, {});

    const int chain = static_cast<int>(spec.layers.size());
    net.stages[s].layers.resize(static_cast<size_t>(chain));
    arch.beta_of_layer[s].resize(static_cast<size_t>(chain));
    arch.gamma_of[s].resize(static_cast<size_t>(chain));

    for (int j = 0; j < chain; ++j) {
      const LayerSpec& ls = spec.layers[static_cast<size_t>(j)];
      std::vector<int> rs_a, rs_b;
      for (int r : ls.dilations)
        for (int sp : ls.spatials) {
          rs_a.push_back(r);
          rs_b.push_back(sp);
        }
      arch.beta_of_layer[s][j] =
          add_group({Level::kDilationSpatial, s, j, -1, -1}, rs_a, rs_b);

      LayerChain& layer = net.stages[s].layers[static_cast<size_t>(j)];
      const int n_cands = static_cast<int>(rs_a.size());
      layer.cands.resize(static_cast<size_t>(n_cands));
      arch.gamma_of[s][j].resize(static_cast<size_t>(n_cands));
      for (int c = 0; c < n_cands; ++c) {
        OperatorCandidate& cand = layer.cands[static_cast<size_t>(c)];
        cand.dilation = rs_a[static_cast<size_t>(c)];
        cand.spatial = rs_b[static_cast<size_t>(c)];
        const std::string base = "s" + std::to_string(s) + ".l" + std::to_string(j) + ".r" +
                                 std::to_string(cand.dilation) + ".p" +
                                 std::to_string(cand.spatial);
        cand.w1 = {base + ".w1", {spec.c_max, spec.c_max, 3}, {}, {}, {}, false};
        cand.b1 = {base + ".b1", {spec.c_max}, {}, {}, {}, false};
        cand.w2 = {base + ".w2", {spec.c_max, spec.c_max, 3}, {}, {}, {}, false};
        cand.b2 = {base + ".b2", {spec.c_max}, {}, {}, {}, false};
        // Streams are keyed by the candidate's structural coordinates, not its
        // index, so the same candidate gets the same weights in any space that
        // contains it.
        init_uniform(cand.w1,
                     rng::substream(seed, "op", {s, j, cand.dilation, cand.spatial, 0}),
                     spec.c_max * 3);
        init_uniform(cand.b1,
                     rng::substream(seed, "op", {s, j, cand.dilation, cand.spatial, 1}),
                     spec.c_max * 3);
        init_uniform(cand.w2,
                     rng::substream(seed, "op", {s, j, cand.dilation, cand.spatial, 2}),
                     spec.c_max * 3);
        init_uniform(cand.b2,
                     rng::substream(seed, "op", {s, j, cand.dilation, cand.spatial, 3}),
                     spec.c_max * 3);

        for (int conv = 0; conv < 2; ++conv)
          arch.gamma_of[s][j][c][conv] = add_group(
              {Level::kChannel, s, j, c, conv}, ls.channels[static_cast<size_t>(conv)], {});
      }
    }
  }
  return out;
}

std::string DiscreteArchitecture::encode() const {
  std::string s;
  for (size_t i = 0; i < stages.size(); ++i) {
    if (i) s += ";";
    const Stage& st = stages[i];
    s += "d" + std::to_string(st.depth);
    for (int j = 0; j < st.depth; ++j) {
      const Layer& l = st.layers[static_cast<size_t>(j)];
      s += "|r" + std::to_string(l.dilation) + "p" + std::to_string(l.spatial) + "c" +
           std::to_string(l.channels[0]) + "." + std::to_string(l.channels[1]);
    }
  }
  return s;
}

void validate_arch(const SpaceConfig& config, const DiscreteArchitecture& arch) {
  config.validate();
  if (arch.stages.size() != config.stages.size())
    reject("arch.stages", "stage count mismatch");
  auto contains = [](const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  for (size_t s = 0; s < arch.stages.size(); ++s) {
    const auto& spec = config.stages[s];
    const auto& st = arch.stages[s];
    const std::string pre = "arch.stages[" + std::to_string(s) + "]";
    if (!contains(spec.depth_options, st.depth)) reject(pre + ".depth", "not an option");
    if (static_cast<int>(st.layers.size()) < st.depth)
      reject(pre + ".layers", "fewer entries than depth");
    for (int j = 0; j < st.depth; ++j) {
      const auto& ls = spec.layers[static_cast<size_t>(j)];
      const auto& l = st.layers[static_cast<size_t>(j)];
      const std::string lp = pre + ".layers[" + std::to_string(j) + "]";
      if (!contains(ls.dilations, l.dilation)) reject(lp + ".dilation", "not an option");
      if (!contains(ls.spatials, l.spatial)) reject(lp + ".spatial", "not an option");
      for (int conv = 0; conv < 2; ++conv)
        if (!contains(ls.channels[static_cast<size_t>(conv)], l.channels[static_cast<size_t>(conv)]))
          reject(lp + ".channels", "not an option");
    }
  }
}

SpaceConfig restrict_to(const SpaceConfig& config, const DiscreteArchitecture& arch) {
  validate_arch(config, arch);
  SpaceConfig out = config;
  for (size_t s = 0; s < out.stages.size(); ++s) {
    StageSpec& st = out.stages[s];
    const auto& pick = arch.stages[s];
    st.depth_options = {pick.depth};
    st.layers.resize(static_cast<size_t>(pick.depth));
    for (int j = 0; j < pick.depth; ++j) {
      const auto& l = pick.layers[static_cast<size_t>(j)];
      LayerSpec& ls = st.layers[static_cast<size_t>(j)];
      ls.dilations = {l.dilation};
      ls.spatials = {l.spatial};
      // prefix masks require the full-width option to stay representable
      ls.channels[0] = l.channels[0] == st.c_max ? std::vector<int>{st.c_max}
                                                 : std::vector<int>{l.channels[0], st.c_max};
      ls.channels[1] = l.channels[1] == st.c_max ? std::vector<int>{st.c_max}
                                                 : std::vector<int>{l.channels[1], st.c_max};
    }
  }
  return out;
}

void copy_selected_weights(const SuperNet& src, const DiscreteArchitecture& arch,
                           SuperNet& dst) {
  dst.stem_w.value = src.stem_w.value;
  dst.stem_b.value = src.stem_b.value;
  for (size_t s = 1; s < src.trans_w.size(); ++s) {
    dst.trans_w[s].value = src.trans_w[s].value;
    dst.trans_b[s].value = src.trans_b[s].value;
  }
  dst.head_w.value = src.head_w.value;
  dst.head_b.value = src.head_b.value;
  for (size_t s = 0; s < dst.stages.size(); ++s) {
    for (size_t j = 0; j < dst.stages[s].layers.size(); ++j) {
      const auto& want = arch.stages[s].layers[j];
      const auto& src_cands = src.stages[s].layers[j].cands;
      auto it = std::find_if(src_cands.begin(), src_cands.end(), [&](const OperatorCandidate& c) {
        return c.dilation == want.dilation && c.spatial == want.spatial;
      });
      if (it == src_cands.end())
        throw std::invalid_argument("copy_selected_weights: candidate not in source net");
      for (auto& dcand : dst.stages[s].layers[j].cands) {
        dcand.w1.value = it->w1.value;
        dcand.b1.value = it->b1.value;
        dcand.w2.value = it->w2.value;
        dcand.b2.value = it->b2.value;
      }
    }
  }
}

const GroupBinding* ForwardGraph::binding_of(int group_index) const {
  for (const GroupBinding& b : groups)
    if (b.group == group_index) return &b;
  return nullptr;
}

namespace {

struct ProbCtx {
  ad::Tape* tape;
  ForwardGraph* fwd;
  const ArchState* arch;

  // Builds (or reuses) the tape nodes for a group's probabilities and
  // returns its index into fwd->groups. Only valid index access is safe
  // here: the bindings vector reallocates as more groups are bound.
  int bind(int group_index) {
    for (size_t i = 0; i < fwd->groups.size(); ++i)
      if (fwd->groups[i].group == group_index) return static_cast<int>(i);
    const ArchParamGroup& g = arch->groups[static_cast<size_t>(group_index)];
    GroupBinding b;
    b.group = group_index;
    std::vector<double> theta;
    for (int i = 0; i < g.size(); ++i)
      if (g.active[i]) {
        theta.push_back(g.logits[i]);
        b.active_ids.push_back(i);
      }
    b.theta = tape->leaf({static_cast<int>(theta.size())}, theta);
    b.probs = tape->normalize(tape->sigmoid(b.theta));
    fwd->groups.push_back(std::move(b));
    return static_cast<int>(fwd->groups.size() - 1);
  }
};

ad::Value bind_param(ad::Tape& tape, ForwardGraph& fwd, ParamTensor& p) {
  ad::Value v = tape.leaf(p.shape, p.value);
  fwd.params.emplace_back(&p, v);
  return v;
}

bool all_ones(const std::vector<double>& m) {
  for (double v : m)
    if (v != 1.0) return false;
  return true;
}

}  // namespace

ForwardGraph supernet_forward(ad::Tape& tape, SuperNet& net, const ArchState& arch,
                              const Batch& batch, ProbMode mode) {
  const SpaceConfig& cfg = net.config;
  if (batch.channels != cfg.input_channels || batch.length != cfg.input_length)
    throw std::invalid_argument("supernet_forward: batch shape does not match the space config");

  ForwardGraph fwd;
  ProbCtx ctx{&tape, &fwd, &arch};

  fwd.input = tape.constant({batch.n, batch.channels, batch.length}, batch.inputs);
  fwd.labels = tape.constant({batch.n, batch.length}, batch.labels);

  ad::Value x = tape.conv1d(fwd.input, bind_param(tape, fwd, net.stem_w),
                            bind_param(tape, fwd, net.stem_b), 1);
  x = tape.relu(x);
  if (cfg.stem_pool > 1) x = tape.avg_pool(x, cfg.stem_pool);

  for (size_t s = 0; s < net.stages.size(); ++s) {
    const StageSpec& spec = cfg.stages[s];
    if (s > 0) {
      x = tape.relu(tape.conv1d(x, bind_param(tape, fwd, net.trans_w[s]),
                                bind_param(tape, fwd, net.trans_b[s]), 1));
      if (spec.pre_pool > 1) x = tape.avg_pool(x, spec.pre_pool);
    }

    const ArchParamGroup& depth = arch.depth_group(static_cast<int>(s));
    int max_depth = 0;
    for (int i = 0; i < depth.size(); ++i)
      if (depth.active[i]) max_depth = std::max(max_depth, depth.option_a[i]);

    std::vector<ad::Value> tap_of_depth(static_cast<size_t>(max_depth) + 1);
    ad::Value chain = x;
    tap_of_depth[0] = chain;

    for (int j = 0; j < max_depth; ++j) {
      const ArchParamGroup& beta = arch.beta_group(static_cast<int>(s), j);
      if (beta.frozen)
        throw std::logic_error("supernet_forward: frozen layer below surviving depth");
      LayerChain& layer = net.stages[s].layers[static_cast<size_t>(j)];

      const bool hard = mode == ProbMode::kOneHot;
      const bool mix_beta = !hard && beta.n_active() > 1;
      const int beta_binding =
          mix_beta ? ctx.bind(arch.beta_of_layer[s][static_cast<size_t>(j)]) : -1;
      const int beta_arg = beta.argmax_active();

      ad::Value acc;
      int mix_slot = 0;
      for (int c = 0; c < beta.size(); ++c) {
        if (!beta.active[c]) continue;
        if (hard && c != beta_arg) continue;
        OperatorCandidate& cand = layer.cands[static_cast<size_t>(c)];
        ad::Value h = cand.spatial > 1 ? tape.avg_pool(chain, cand.spatial) : chain;

        h = tape.conv1d(h, bind_param(tape, fwd, cand.w1), bind_param(tape, fwd, cand.b1),
                        cand.dilation);
        for (int conv = 0; conv < 2; ++conv) {
          if (conv == 1)
            h = tape.conv1d(tape.relu(h), bind_param(tape, fwd, cand.w2),
                            bind_param(tape, fwd, cand.b2), cand.dilation);
          const int gidx = arch.gamma_of[s][static_cast<size_t>(j)][static_cast<size_t>(c)]
                                         [static_cast<size_t>(conv)];
          const ArchParamGroup& gamma = arch.groups[static_cast<size_t>(gidx)];
          const auto masks = make_channel_masks(gamma.option_a, spec.c_max);
          if (gamma.n_active() == 1 || hard) {
            const auto& mvec = masks[static_cast<size_t>(gamma.argmax_active())];
            if (!all_ones(mvec))
              h = tape.mask_mul(h, tape.constant({spec.c_max}, mvec));
          } else {
            const int gb = ctx.bind(gidx);
            ad::Value eff;
            const size_t n_act = fwd.groups[static_cast<size_t>(gb)].active_ids.size();
            for (size_t k = 0; k < n_act; ++k) {
              const GroupBinding& gbind = fwd.groups[static_cast<size_t>(gb)];
              ad::Value term = tape.mul(
                  tape.pick(gbind.probs, static_cast<int>(k)),
                  tape.constant({spec.c_max}, masks[static_cast<size_t>(gbind.active_ids[k])]));
              eff = k == 0 ? term : tape.add(eff, term);
            }
            fwd.masks.push_back({static_cast<int>(s), j, c, conv, eff});
            h = tape.mask_mul(h, eff);
          }
        }
        ad::Value o = cand.spatial > 1 ? tape.upsample_linear(h, cand.spatial) : h;
        if (mix_beta) {
          const GroupBinding& bbind = fwd.groups[static_cast<size_t>(beta_binding)];
          int slot = 0;
          for (size_t k = 0; k < bbind.active_ids.size(); ++k)
            if (bbind.active_ids[k] == c) slot = static_cast<int>(k);
          o = tape.mul(tape.pick(bbind.probs, slot), o);
        }
        acc = mix_slot == 0 ? o : tape.add(acc, o);
        ++mix_slot;
      }
      // residual join; the trunk stays unmasked
      chain = tape.add(chain, acc);
      tap_of_depth[static_cast<size_t>(j) + 1] = chain;
    }

    // depth mixture over branch taps
    if (mode == ProbMode::kOneHot || depth.n_active() == 1) {
      const int pick = depth.argmax_active();
      x = tap_of_depth[static_cast<size_t>(depth.option_a[pick])];
    } else {
      const int dbind = ctx.bind(arch.depth_of_stage[s]);
      ad::Value mix;
      const size_t n_act = fwd.groups[static_cast<size_t>(dbind)].active_ids.size();
      for (size_t k = 0; k < n_act; ++k) {
        const GroupBinding& dbindref = fwd.groups[static_cast<size_t>(dbind)];
        const int d = depth.option_a[static_cast<size_t>(dbindref.active_ids[k])];
        ad::Value term = tape.mul(tape.pick(dbindref.probs, static_cast<int>(k)),
                                  tap_of_depth[static_cast<size_t>(d)]);
        mix = k == 0 ? term : tape.add(mix, term);
      }
      x = mix;
    }
  }

  if (cfg.total_pool() > 1) x = tape.upsample_linear(x, cfg.total_pool());
  fwd.logits = tape.conv1d(x, bind_param(tape, fwd, net.head_w),
                           bind_param(tape, fwd, net.head_b), 1);
  fwd.task_loss = tape.cross_entropy_logits(fwd.logits, fwd.labels);
  return fwd;
}

namespace {

// log10(sum of 10^x) over the per-depth exponents of one stage
double log10_sum_exp10(const std::vector<double>& xs) {
  double m = xs[0];
  for (double x : xs) m = std::max(m, x);
  double acc = 0.0;
  for (double x : xs) acc += std::pow(10.0, x - m);
  return m + std::log10(acc);
}

}  // namespace

double cardinality_log10(const SpaceConfig& config) {
  config.validate();
  double total = 0.0;
  for (const StageSpec& st : config.stages) {
    std::vector<double> cum(st.layers.size() + 1, 0.0);
    for (size_t j = 0; j < st.layers.size(); ++j) {
      const LayerSpec& ls = st.layers[j];
      const double per_layer = static_cast<double>(ls.dilations.size()) *
                               static_cast<double>(ls.spatials.size()) *
                               static_cast<double>(ls.channels[0].size()) *
                               static_cast<double>(ls.channels[1].size());
      cum[j + 1] = cum[j] + std::log10(per_layer);
    }
    std::vector<double> branch;
    branch.reserve(st.depth_options.size());
    for (int d : st.depth_options) branch.push_back(cum[static_cast<size_t>(d)]);
    total += log10_sum_exp10(branch);
  }
  return total;
}

double cardinality_log10_paper(const SpaceConfig& config) {
  config.validate();
  double main_term = 0.0;
  double depth_combos = 1.0;
  for (const StageSpec& st : config.stages) {
    depth_combos *= static_cast<double>(st.depth_options.size());
    for (const LayerSpec& ls : st.layers) {
      const double ops = static_cast<double>(ls.dilations.size()) *
                         static_cast<double>(ls.spatials.size());
      const double combos = static_cast<double>(ls.channels[0].size()) *
                            static_cast<double>(ls.channels[1].size());
      main_term += ops * std::log10(combos);
    }
  }
  // main term dominates; the additive depth term only matters for tiny spaces
  const double depth_log = std::log10(depth_combos);
  const double hi = std::max(main_term, depth_log);
  const double lo = std::min(main_term, depth_log);
  return hi + std::log10(1.0 + std::pow(10.0, lo - hi));
}

}  // namespace ssr::space
