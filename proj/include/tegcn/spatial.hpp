#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tegcn/graph.hpp"
#include "tegcn/nn.hpp"

namespace tegcn {

// Spatial graph convolution over the joint axis:
//   out = sum_k W_k f_in (P_k (.) M_k)
// with P_k the fixed normalized partitions and M_k learnable edge-importance
// masks (all-ones at init), followed by BatchNorm and ReLU.
class SGBlock {
 public:
  SGBlock() = default;
  SGBlock(const std::string& prefix, std::size_t in_channels, std::size_t out_channels, const SkeletonGraph& graph,
          std::uint64_t seed);

  /// [B, C_in, T, J] -> [B, C_out, T, J]
  Var forward(Tape& tape, const Var& x, bool train);
  /// The graph convolution alone, without BatchNorm/ReLU.
  Var aggregate(Tape& tape, const Var& x);

  void collect(std::vector<Parameter*>& params, std::vector<NamedBuffer>& buffers);

  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t num_joints = 0;
  std::array<Parameter, kNumPartitions> weights;   // [C_out, C_in]
  std::array<Parameter, kNumPartitions> masks;     // [J, J]
  std::array<Tensor, kNumPartitions> partitions;  // [J, J], fixed
  BatchNorm bn;
  bool bypass_bn = false;
};

// K_t x 1 convolution along the frame axis with channel mixing, then
// BatchNorm and ReLU. Output length is ceil(T / stride).
class TCBlock {
 public:
  TCBlock() = default;
  TCBlock(const std::string& prefix, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
          std::size_t stride, std::uint64_t seed);

  Var forward(Tape& tape, const Var& x, bool train);

  void collect(std::vector<Parameter*>& params, std::vector<NamedBuffer>& buffers);

  std::size_t kernel = 9;
  std::size_t stride = 1;
  Parameter weight;  // [C_out, C_in, K_t]
  BatchNorm bn;
  bool bypass_bn = false;
};

}  // namespace tegcn
