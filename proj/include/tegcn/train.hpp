#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tegcn/checkpoint.hpp"
#include "tegcn/gradcheck.hpp"
#include "tegcn/model.hpp"

namespace tegcn {

struct TrainConfig {
  double lr = 0.1;
  std::vector<std::size_t> decay_epochs{40, 80, 120};
  double decay_factor = 0.1;
  double weight_decay = 0.0005;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t epochs = 150;
  std::uint64_t seed = 1;
  bool single_thread = false;

  void validate() const;
  std::string schedule_json() const;
};

/// base * factor^(number of decay epochs <= epoch)
double lr_at(const TrainConfig& cfg, std::size_t epoch);

using MomentumState = std::map<std::string, Tensor>;

// v <- mu v + g + lambda theta;  theta <- theta - lr v
// Throws NumericError naming the first parameter with a non-finite gradient.
void sgd_step(const std::vector<Parameter*>& params, double lr, double weight_decay, double momentum,
              MomentumState& state);

struct Sample {
  Tensor data;  // C x T x J x M
  int label = 0;
  std::string id;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t num_classes = 0;
};

Dataset make_dataset(std::vector<SkeletonSequence> seqs, std::size_t num_classes);
/// Replaces each sample by the given modality stream derived from its joints.
Dataset derive_dataset(const Dataset& joints, const SkeletonGraph& graph, Modality m);

// Preprocessed dataset directory: dataset.json ({num_classes, frames, joints,
// bodies, graph}) and manifest.jsonl, one line per sample:
//   {"sample_id", "label", "split", "files": {"<modality>": "<relative path>"}}
struct DatasetInfo {
  std::size_t num_classes = 0;
  std::size_t frames = 0;
  std::size_t joints = 0;
  std::size_t bodies = 0;
  std::string graph = "ntu";
};
DatasetInfo load_dataset_info(const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir, const std::string& split, Modality m);

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  std::optional<double> eval_acc;
  std::string to_json() const;
};

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::size_t> predictions;
  std::vector<std::vector<double>> scores;  // softmax per sample
};

/// Top-1 accuracy; ties go to the lowest class index.
EvalResult evaluate(Network& net, const Dataset& data, std::size_t batch_size = 64, bool single_thread = false);

struct TrainResult {
  std::vector<EpochMetrics> history;
  double best_eval = 0.0;
  std::size_t best_epoch = 0;
};

// Writes metrics.jsonl, timing.jsonl, checkpoint.last and checkpoint.best
// into out_dir (when non-empty). A non-finite loss aborts with NumericError,
// leaving the previous epoch's checkpoint.last in place.
TrainResult train(Network& net, const TrainConfig& cfg, const Dataset& train_set, const Dataset* eval_set,
                  const std::filesystem::path& out_dir = {});

inline constexpr const char* kMetricsFile = "metrics.jsonl";
inline constexpr const char* kTimingFile = "timing.jsonl";
inline constexpr const char* kLastCheckpoint = "checkpoint.last";
inline constexpr const char* kBestCheckpoint = "checkpoint.best";

/// Worker count: 1 in single-thread mode, else TEGRAPH_THREADS capped by hardware.
std::size_t thread_count(bool single_thread);
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

// Ablation grids. Every cell trains from scratch with the same seeds and
// reports eval top-1. CSV columns: suite,setting,top1
enum class AblationSuite { kHeads, kLayers, kModalities };
AblationSuite parse_suite(std::string_view name);

struct AblationCell {
  std::string suite;
  std::string setting;
  double top1 = 0.0;
};

struct AblationInputs {
  ModelConfig base;  // layers built from `backbone`
  BackboneOptions backbone;
  TrainConfig train;
  // Joint-modality data; other streams are derived from it.
  Dataset train_set;
  Dataset eval_set;
};

std::vector<AblationCell> ablate(AblationSuite suite, const AblationInputs& in);
std::string ablation_csv(const std::vector<AblationCell>& cells);

// Central-difference check of the full network loss (train mode, cross-entropy)
// on a random batch drawn from `seed`.
GradCheckResult check_network_gradients(const ModelConfig& cfg, std::size_t batch, std::uint64_t seed,
                                        double eps = 1e-5);

}  // namespace tegcn
