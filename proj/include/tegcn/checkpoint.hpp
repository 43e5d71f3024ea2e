#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "tegcn/model.hpp"

namespace tegcn {

// Checkpoint container, little-endian:
//   u64 manifest length | manifest JSON | tensor records (write_tensor) in manifest order
// The manifest holds the model config, epoch, schedule state and an index of
// every tensor with its kind (param, buffer, momentum), shape and byte offset.
struct CheckpointMeta {
  std::size_t epoch = 0;
  double lr = 0.0;
  double best_eval = 0.0;
  std::string schedule_json = "{}";
};

struct Checkpoint {
  ModelConfig config;
  CheckpointMeta meta;
  std::map<std::string, Tensor> params;
  std::map<std::string, Tensor> buffers;
  std::map<std::string, Tensor> momentum;
};

void save_checkpoint(const std::filesystem::path& path, Network& net, const CheckpointMeta& meta,
                     const std::map<std::string, Tensor>* momentum = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Copies values into net; throws DimensionError on any missing tensor or shape mismatch.
void apply_checkpoint(Network& net, const Checkpoint& ckpt);
std::unique_ptr<Network> network_from_checkpoint(const std::filesystem::path& path);

}  // namespace tegcn
