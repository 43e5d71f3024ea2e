#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tegcn/graph.hpp"
#include "tegcn/modality.hpp"
#include "tegcn/skeleton.hpp"
#include "tegcn/spatial.hpp"
#include "tegcn/temporal.hpp"

namespace tegcn {

enum class TemporalMode { kTcBlock, kTemporalGraph, kBoth };

std::string_view temporal_mode_name(TemporalMode m);
TemporalMode parse_temporal_mode(std::string_view name);

enum class RelevanceMode { kCalculated, kLearned, kMixed };

std::string_view relevance_mode_name(RelevanceMode m);
RelevanceMode parse_relevance_mode(std::string_view name);
std::vector<RelevanceKind> relevance_kinds(RelevanceMode m);

struct LayerSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t stride = 1;
  TemporalMode mode = TemporalMode::kTcBlock;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelConfig {
  std::size_t num_classes = 60;
  std::size_t in_channels = 3;
  std::size_t frames = 300;
  std::size_t bodies = 2;
  // "ntu", "chain" (center 0) or "custom" (edges + center).
  std::string graph = "ntu";
  std::size_t joints = kNtuJoints;
  EdgeList edges;
  std::size_t center = 0;
  std::vector<LayerSpec> layers;
  std::size_t kernel = 9;
  std::size_t heads = 4;
  RelevanceMode relevance = RelevanceMode::kCalculated;
  std::uint64_t seed = 1;

  SkeletonGraph make_graph() const;
  /// Throws ConfigError (or DimensionError) when the layer plan is inconsistent.
  void validate() const;
  /// Frame count entering each layer, plus the final one.
  std::vector<std::size_t> layer_frames() const;

  std::string to_json() const;
  static ModelConfig from_json(std::string_view text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct BackboneOptions {
  std::vector<std::size_t> channels{64, 64, 64, 64, 128, 128, 128, 256, 256};
  std::vector<std::size_t> strides{1, 1, 1, 1, 2, 1, 1, 2, 1};
  std::size_t insertion = 9;  // 1-based; 0 disables
  TemporalMode insertion_mode = TemporalMode::kBoth;
  bool replace_all = false;
  std::size_t width_div = 1;
};

// Layer plan with temporal graph conv at the insertion layer only, or at
// every layer with replace_all (stride-2 layers keep a TC-block after it).
std::vector<LayerSpec> backbone_layers(const BackboneOptions& opts, std::size_t in_channels);

// One TE-GCN layer:
//   s     = SG(f_in)
//   part  = TC(s) | s + TGC(s) | TC(s + TGC(s))
//   f_out = ReLU(BN(residual(f_in) + part))
// residual is the identity when channels and length are kept, otherwise a
// strided 1x1 channel map.
class Layer {
 public:
  Layer(const std::string& prefix, const LayerSpec& spec, const SkeletonGraph& graph, std::size_t frames,
        std::size_t kernel, std::size_t heads, RelevanceMode relevance, std::uint64_t seed);

  Var forward(Tape& tape, const Var& x, bool train, std::vector<Tensor>* adjacency_out = nullptr);

  void collect(std::vector<Parameter*>& params, std::vector<NamedBuffer>& buffers);

  LayerSpec spec;
  std::size_t frames = 0;
  SGBlock sg;
  std::optional<TCBlock> tc;
  std::optional<MultiHeadTemporalConv> tg;
  std::optional<Parameter> residual;  // [C_out, C_in, 1]
  BatchNorm bn;
};

// data BN -> layers -> mean over (T, J) -> mean over bodies -> FC.
class Network {
 public:
  explicit Network(ModelConfig config);
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  /// x: [N * M, C, T, J] with the M body slots of a sample adjacent. Returns logits [N, K].
  Var forward(Tape& tape, const Var& x, bool train);
  /// Runs in eval mode and returns each temporal-graph layer's adjacencies, per head.
  std::vector<std::vector<Tensor>> adjacencies(const Tensor& x);
  /// Eval-mode logits without keeping the tape.
  Tensor predict(const Tensor& x);

  std::vector<Parameter*> parameters();
  std::vector<NamedBuffer> buffers();
  std::vector<Shape> layer_shapes(std::size_t batch);

  const ModelConfig& config() const { return config_; }
  const SkeletonGraph& graph() const { return graph_; }
  std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }

  BatchNorm data_bn;
  Parameter fc_w;  // [C_last, K]
  Parameter fc_b;  // [K]

 private:
  Var run(Tape& tape, const Var& x, bool train, std::vector<std::vector<Tensor>>* adjacency_out);

  ModelConfig config_;
  SkeletonGraph graph_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

// C x T x J x M sequences -> [N * M, C, T, J].
Tensor batch_input(const std::vector<const Tensor*>& samples);

struct StreamScores {
  std::vector<std::vector<double>> scores;  // one softmax vector per stream
  std::vector<double> weights;
};

/// sum_m w_m score_m, renormalized to sum 1.
std::vector<double> fuse_streams(const StreamScores& s);
/// Lowest index among the maxima.
std::size_t argmax(std::span<const double> v);
std::vector<double> softmax(std::span<const double> logits);

}  // namespace tegcn
