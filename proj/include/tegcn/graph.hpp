#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "tegcn/tensor.hpp"

namespace tegcn {

struct GraphError : ConfigError {
  using ConfigError::ConfigError;
};

/// A bone oriented from the joint nearer the center to the farther one.
struct Bone {
  std::size_t source;
  std::size_t target;
  friend bool operator==(const Bone&, const Bone&) = default;
};

inline constexpr std::size_t kNumPartitions = 3;

// Skeleton tree with its spatial-configuration partitioning:
//   subset 0: self loops (root)
//   subset 1: entry [i][j] set when j neighbours i and is closer to the center
//   subset 2: entry [i][j] set when j neighbours i and is farther from the center
// raw[k] are the 0/1 matrices (sum == A + I); normalized[k] = D^-1/2 raw[k] D^-1/2
// with D the degree matrix of A + I.
struct SkeletonGraph {
  std::size_t num_joints = 0;
  std::size_t center = 0;
  std::vector<Bone> bones;
  std::vector<std::size_t> hops;
  std::array<Tensor, kNumPartitions> raw;
  std::array<Tensor, kNumPartitions> normalized;

  Tensor adjacency() const;
};

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

/// Orients edges by hop distance from the center and builds the three subsets.
/// Throws GraphError unless the edges form a tree spanning all joints.
SkeletonGraph build_partitions(const EdgeList& edges, std::size_t num_joints, std::size_t center);

/// 25-joint NTU RGB+D skeleton (0-based), centered on the spine middle.
EdgeList ntu_edges();
inline constexpr std::size_t kNtuJoints = 25;
inline constexpr std::size_t kNtuCenter = 1;
SkeletonGraph ntu_graph();

/// Chain 0-1-...-(n-1) centered on joint 0.
EdgeList chain_edges(std::size_t n);
SkeletonGraph chain_graph(std::size_t n);

}  // namespace tegcn
