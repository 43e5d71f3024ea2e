#include "tegcn/model.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace tegcn {

using nlohmann::json;

std::string_view temporal_mode_name(TemporalMode m) {
  switch (m) {
    case TemporalMode::kTcBlock: return "tc-block";
    case TemporalMode::kTemporalGraph: return "temporal-graph";
    case TemporalMode::kBoth: return "both";
  }
  return "?";
}

TemporalMode parse_temporal_mode(std::string_view name) {
  if (name == "tc-block") return TemporalMode::kTcBlock;
  if (name == "temporal-graph") return TemporalMode::kTemporalGraph;
  if (name == "both") return TemporalMode::kBoth;
  throw ConfigError("unknown temporal mode '" + std::string(name) + "' (tc-block, temporal-graph, both)");
}

std::string_view relevance_mode_name(RelevanceMode m) {
  switch (m) {
    case RelevanceMode::kCalculated: return "feature-calculated";
    case RelevanceMode::kLearned: return "feature-learned";
    case RelevanceMode::kMixed: return "mixed";
  }
  return "?";
}

RelevanceMode parse_relevance_mode(std::string_view name) {
  if (name == "mixed") return RelevanceMode::kMixed;
  return parse_relevance(name) == RelevanceKind::kFeatureCalculated ? RelevanceMode::kCalculated
                                                                    : RelevanceMode::kLearned;
}

std::vector<RelevanceKind> relevance_kinds(RelevanceMode m) {
  switch (m) {
    case RelevanceMode::kCalculated: return {RelevanceKind::kFeatureCalculated};
    case RelevanceMode::kLearned: return {RelevanceKind::kFeatureLearned};
    case RelevanceMode::kMixed: return {RelevanceKind::kFeatureCalculated, RelevanceKind::kFeatureLearned};
  }
  return {};
}

SkeletonGraph ModelConfig::make_graph() const {
  if (graph == "ntu") {
    if (joints != kNtuJoints) throw ConfigError("ntu graph has 25 joints, config says " + std::to_string(joints));
    return ntu_graph();
  }
  if (graph == "chain") return chain_graph(joints);
  if (graph == "custom") return build_partitions(edges, joints, center);
  throw ConfigError("unknown graph '" + graph + "' (ntu, chain, custom)");
}

std::vector<std::size_t> ModelConfig::layer_frames() const {
  std::vector<std::size_t> t{frames};
  for (const auto& l : layers) t.push_back((t.back() + l.stride - 1) / l.stride);
  return t;
}

void ModelConfig::validate() const {
  if (num_classes == 0) throw ConfigError("num_classes must be positive");
  if (frames == 0 || bodies == 0 || joints == 0 || in_channels == 0) {
    throw ConfigError("frames, bodies, joints and in_channels must be positive");
  }
  if (layers.empty()) throw ConfigError("model needs at least one layer");
  if (heads == 0) throw ConfigError("heads must be at least 1");
  if (kernel % 2 == 0) throw ConfigError("temporal kernel must be odd, got " + std::to_string(kernel));
  std::size_t prev = in_channels;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = "layer " + std::to_string(i + 1) + ": ";
    if (l.in_channels != prev) {
      throw DimensionError(where + "expects " + std::to_string(l.in_channels) + " input channels, previous layer gives " +
                           std::to_string(prev));
    }
    if (l.out_channels == 0) throw ConfigError(where + "out_channels must be positive");
    if (l.stride != 1 && l.stride != 2) throw ConfigError(where + "stride must be 1 or 2");
    if (l.mode == TemporalMode::kTemporalGraph && l.stride != 1) {
      throw ConfigError(where + "temporal-graph mode requires stride 1");
    }
    if (l.mode != TemporalMode::kTcBlock && relevance != RelevanceMode::kLearned &&
        l.out_channels % kCalculatedReduction != 0) {
      throw ConfigError(where + "feature-calculated heads need channels divisible by 4, got " +
                        std::to_string(l.out_channels));
    }
    prev = l.out_channels;
  }
}

std::string ModelConfig::to_json() const {
  json j;
  j["num_classes"] = num_classes;
  j["in_channels"] = in_channels;
  j["frames"] = frames;
  j["bodies"] = bodies;
  j["graph"] = graph;
  j["joints"] = joints;
  j["center"] = center;
  j["edges"] = json::array();
  for (const auto& [a, b] : edges) j["edges"].push_back({a, b});
  j["layers"] = json::array();
  for (const auto& l : layers) {
    j["layers"].push_back({{"in", l.in_channels},
                           {"out", l.out_channels},
                           {"stride", l.stride},
                           {"mode", std::string(temporal_mode_name(l.mode))}});
  }
  j["kernel"] = kernel;
  j["heads"] = heads;
  j["relevance"] = std::string(relevance_mode_name(relevance));
  j["seed"] = seed;
  return j.dump();
}

ModelConfig ModelConfig::from_json(std::string_view text) {
  ModelConfig c;
  try {
    const json j = json::parse(text);
    c.num_classes = j.at("num_classes").get<std::size_t>();
    c.in_channels = j.at("in_channels").get<std::size_t>();
    c.frames = j.at("frames").get<std::size_t>();
    c.bodies = j.at("bodies").get<std::size_t>();
    c.graph = j.at("graph").get<std::string>();
    c.joints = j.at("joints").get<std::size_t>();
    c.center = j.value("center", std::size_t{0});
    for (const auto& e : j.value("edges", json::array())) {
      c.edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    }
    for (const auto& l : j.at("layers")) {
      c.layers.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                          l.at("stride").get<std::size_t>(), parse_temporal_mode(l.at("mode").get<std::string>())});
    }
    c.kernel = j.at("kernel").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.relevance = parse_relevance_mode(j.at("relevance").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model config: ") + e.what());
  }
  return c;
}

std::vector<LayerSpec> backbone_layers(const BackboneOptions& opts, std::size_t in_channels) {
  if (opts.channels.size() != opts.strides.size()) {
    throw ConfigError("channel plan has " + std::to_string(opts.channels.size()) + " layers but stride plan has " +
                      std::to_string(opts.strides.size()));
  }
  if (opts.width_div == 0) throw ConfigError("width_div must be positive");
  if (opts.insertion > opts.channels.size()) {
    throw ConfigError("insertion layer " + std::to_string(opts.insertion) + " outside [1, " +
                      std::to_string(opts.channels.size()) + "]");
  }
  std::vector<LayerSpec> out;
  std::size_t prev = in_channels;
  for (std::size_t i = 0; i < opts.channels.size(); ++i) {
    LayerSpec l;
    l.in_channels = prev;
    l.out_channels = std::max<std::size_t>(1, opts.channels[i] / opts.width_div);
    l.stride = opts.strides[i];
    if (opts.replace_all) {
      l.mode = l.stride == 1 ? TemporalMode::kTemporalGraph : TemporalMode::kBoth;
    } else if (i + 1 == opts.insertion) {
      l.mode = opts.insertion_mode;
    }
    out.push_back(l);
    prev = l.out_channels;
  }
  return out;
}

Layer::Layer(const std::string& prefix, const LayerSpec& s, const SkeletonGraph& graph, std::size_t t,
             std::size_t kernel, std::size_t heads, RelevanceMode relevance, std::uint64_t seed)
    : spec(s), frames(t), sg(prefix + ".sg", s.in_channels, s.out_channels, graph, seed), bn(prefix + ".bn", s.out_channels) {
  if (s.mode != TemporalMode::kTemporalGraph) {
    tc.emplace(prefix + ".tc", s.out_channels, s.out_channels, kernel, s.stride, seed);
  }
  if (s.mode != TemporalMode::kTcBlock) {
    if (s.stride != 1 && s.mode == TemporalMode::kTemporalGraph) {
      throw ConfigError("temporal-graph mode requires stride 1");
    }
    tg.emplace(prefix + ".tg", heads, relevance_kinds(relevance), s.out_channels, graph.num_joints, t, seed);
  }
  if (s.in_channels != s.out_channels || s.stride != 1) {
    const std::string name = prefix + ".res";
    residual.emplace(name, uniform_init(Shape{s.out_channels, s.in_channels, 1}, s.in_channels, seed, name));
  }
}

Var Layer::forward(Tape& tape, const Var& x, bool train, std::vector<Tensor>* adjacency_out) {
  Var s = sg.forward(tape, x, train);
  Var part = s;
  if (tg) {
    std::vector<Var> adj = tg->build_heads(tape, s);
    if (adjacency_out) {
      for (const auto& a : adj) adjacency_out->push_back(a.value());
    }
    part = add(s, tg->forward(tape, s, adj));
  }
  if (tc) part = tc->forward(tape, part, train);
  Var res = residual ? temporal_conv(x, tape.param(*residual), spec.stride) : x;
  return relu(bn.forward(tape, add(res, part), train));
}

void Layer::collect(std::vector<Parameter*>& params, std::vector<NamedBuffer>& buffers) {
  sg.collect(params, buffers);
  if (tg) tg->collect(params);
  if (tc) tc->collect(params, buffers);
  if (residual) params.push_back(&*residual);
  bn.collect(params, buffers);
}

Network::Network(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  graph_ = config_.make_graph();
  data_bn = BatchNorm("data_bn", config_.in_channels);
  const auto frames = config_.layer_frames();
  for (std::size_t i = 0; i < config_.layers.size(); ++i) {
    layers_.push_back(std::make_unique<Layer>("layer" + std::to_string(i + 1), config_.layers[i], graph_, frames[i],
                                              config_.kernel, config_.heads, config_.relevance, config_.seed));
  }
  const std::size_t c = config_.layers.back().out_channels;
  fc_w = Parameter("fc.W", uniform_init(Shape{c, config_.num_classes}, c, config_.seed, "fc.W"));
  fc_b = Parameter("fc.b", Tensor(Shape{config_.num_classes}, 0.0));
}

Var Network::run(Tape& tape, const Var& x, bool train, std::vector<std::vector<Tensor>>* adjacency_out) {
  const Tensor& xv = x.value();
  const Shape want{xv.rank() == 4 ? xv.dim(0) : 0, config_.in_channels, config_.frames, config_.joints};
  if (xv.rank() != 4 || xv.dim(1) != want[1] || xv.dim(2) != want[2] || xv.dim(3) != want[3] ||
      xv.dim(0) % config_.bodies != 0 || xv.dim(0) == 0) {
    throw DimensionError("network expects [N*" + std::to_string(config_.bodies) + ", " +
                         std::to_string(config_.in_channels) + ", " + std::to_string(config_.frames) + ", " +
                         std::to_string(config_.joints) + "], got " + shape_str(xv.shape()));
  }
  Var h = data_bn.forward(tape, x, train);
  for (auto& layer : layers_) {
    std::vector<Tensor> adj;
    h = layer->forward(tape, h, train, adjacency_out ? &adj : nullptr);
    if (adjacency_out) adjacency_out->push_back(std::move(adj));
  }
  Var pooled = group_mean(mean_pool_tj(h), config_.bodies);
  return add_row_bias(matmul(pooled, tape.param(fc_w)), tape.param(fc_b));
}

Var Network::forward(Tape& tape, const Var& x, bool train) { return run(tape, x, train, nullptr); }

std::vector<std::vector<Tensor>> Network::adjacencies(const Tensor& x) {
  Tape tape;
  std::vector<std::vector<Tensor>> out;
  run(tape, tape.constant(x), false, &out);
  return out;
}

Tensor Network::predict(const Tensor& x) {
  Tape tape;
  return forward(tape, tape.constant(x), false).value();
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> p;
  std::vector<NamedBuffer> b;
  data_bn.collect(p, b);
  for (auto& l : layers_) l->collect(p, b);
  p.push_back(&fc_w);
  p.push_back(&fc_b);
  return p;
}

std::vector<NamedBuffer> Network::buffers() {
  std::vector<Parameter*> p;
  std::vector<NamedBuffer> b;
  data_bn.collect(p, b);
  for (auto& l : layers_) l->collect(p, b);
  return b;
}

std::vector<Shape> Network::layer_shapes(std::size_t batch) {
  const auto frames = config_.layer_frames();
  std::vector<Shape> out{{batch * config_.bodies, config_.in_channels, frames[0], config_.joints}};
  for (std::size_t i = 0; i < config_.layers.size(); ++i) {
    out.push_back({batch * config_.bodies, config_.layers[i].out_channels, frames[i + 1], config_.joints});
  }
  return out;
}

Tensor batch_input(const std::vector<const Tensor*>& samples) {
  if (samples.empty()) throw DataError("empty batch");
  const Shape& s0 = samples.front()->shape();
  if (s0.size() != 4) throw DimensionError("sample must be C x T x J x M, got " + shape_str(s0));
  const std::size_t C = s0[0], T = s0[1], J = s0[2], M = s0[3];
  Tensor out(Shape{samples.size() * M, C, T, J});
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const Tensor& s = *samples[n];
    if (s.shape() != s0) {
      throw DimensionError("batch mixes sample shapes " + shape_str(s0) + " and " + shape_str(s.shape()));
    }
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < J; ++j)
          for (std::size_t m = 0; m < M; ++m) {
            out[(((n * M + m) * C + c) * T + t) * J + j] = s[((c * T + t) * J + j) * M + m];
          }
  }
  return out;
}

std::vector<double> fuse_streams(const StreamScores& s) {
  if (s.scores.empty()) throw ConfigError("no streams to fuse");
  if (s.weights.size() != s.scores.size()) {
    throw ConfigError("fusion has " + std::to_string(s.scores.size()) + " streams but " +
                      std::to_string(s.weights.size()) + " weights");
  }
  const std::size_t k = s.scores.front().size();
  std::vector<double> fused(k, 0.0);
  for (std::size_t m = 0; m < s.scores.size(); ++m) {
    if (s.scores[m].size() != k) throw DimensionError("fusion streams have different class counts");
    if (!(s.weights[m] >= 0.0)) throw ConfigError("fusion weights must be nonnegative");
    for (std::size_t i = 0; i < k; ++i) fused[i] += s.weights[m] * s.scores[m][i];
  }
  double total = 0.0;
  for (double v : fused) total += v;
  if (!(total > 0.0)) throw NumericError("fused scores sum to zero");
  for (double& v : fused) v /= total;
  return fused;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double mx = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace tegcn
