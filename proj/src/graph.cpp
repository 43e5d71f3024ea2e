#include "tegcn/graph.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace tegcn {

Tensor SkeletonGraph::adjacency() const {
  Tensor a(Shape{num_joints, num_joints});
  for (const auto& b : bones) {
    a.at(b.source, b.target) = 1.0;
    a.at(b.target, b.source) = 1.0;
  }
  return a;
}

SkeletonGraph build_partitions(const EdgeList& edges, std::size_t num_joints, std::size_t center) {
  if (num_joints == 0) throw GraphError("graph needs at least one joint");
  if (center >= num_joints) {
    throw GraphError("center joint " + std::to_string(center) + " outside " + std::to_string(num_joints) + " joints");
  }
  if (edges.size() != num_joints - 1) {
    throw GraphError("a tree over " + std::to_string(num_joints) + " joints needs " + std::to_string(num_joints - 1) +
                     " bones, got " + std::to_string(edges.size()));
  }
  std::vector<std::vector<std::size_t>> nbrs(num_joints);
  for (const auto& [u, v] : edges) {
    if (u >= num_joints || v >= num_joints || u == v) {
      throw GraphError("invalid bone (" + std::to_string(u) + ", " + std::to_string(v) + ")");
    }
    nbrs[u].push_back(v);
    nbrs[v].push_back(u);
  }

  constexpr auto kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> hops(num_joints, kUnreached);
  std::queue<std::size_t> frontier;
  hops[center] = 0;
  frontier.push(center);
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop();
    for (auto v : nbrs[u]) {
      if (hops[v] == kUnreached) {
        hops[v] = hops[u] + 1;
        frontier.push(v);
      }
    }
  }
  for (std::size_t j = 0; j < num_joints; ++j) {
    if (hops[j] == kUnreached) throw GraphError("bone list is disconnected: joint " + std::to_string(j) + " unreachable");
  }

  SkeletonGraph g;
  g.num_joints = num_joints;
  g.center = center;
  g.hops = hops;
  for (auto& m : g.raw) m = Tensor(Shape{num_joints, num_joints});
  for (std::size_t j = 0; j < num_joints; ++j) g.raw[0].at(j, j) = 1.0;
  for (const auto& [u, v] : edges) {
    // n edges over n+1 connected nodes: adjacent joints never share a hop count.
    const auto near = hops[u] < hops[v] ? u : v;
    const auto far = near == u ? v : u;
    g.bones.push_back(Bone{near, far});
    g.raw[1].at(far, near) = 1.0;
    g.raw[2].at(near, far) = 1.0;
  }

  std::vector<double> inv_sqrt_deg(num_joints);
  for (std::size_t i = 0; i < num_joints; ++i) {
    inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(nbrs[i].size() + 1));
  }
  for (std::size_t k = 0; k < kNumPartitions; ++k) {
    g.normalized[k] = Tensor(Shape{num_joints, num_joints});
    for (std::size_t i = 0; i < num_joints; ++i)
      for (std::size_t j = 0; j < num_joints; ++j) {
        if (g.raw[k].at(i, j) != 0.0) g.normalized[k].at(i, j) = g.raw[k].at(i, j) * inv_sqrt_deg[i] * inv_sqrt_deg[j];
      }
  }
  return g;
}

EdgeList ntu_edges() {
  // 1-based joint pairs of the Kinect v2 skeleton.
  static constexpr std::pair<int, int> kPairs[] = {
      {1, 2},   {2, 21},  {3, 21},  {4, 3},   {5, 21},  {6, 5},   {7, 6},   {8, 7},
      {9, 21},  {10, 9},  {11, 10}, {12, 11}, {13, 1},  {14, 13}, {15, 14}, {16, 15},
      {17, 1},  {18, 17}, {19, 18}, {20, 19}, {22, 23}, {23, 8},  {24, 25}, {25, 12}};
  EdgeList out;
  for (const auto& [a, b] : kPairs) out.emplace_back(a - 1, b - 1);
  return out;
}

SkeletonGraph ntu_graph() { return build_partitions(ntu_edges(), kNtuJoints, kNtuCenter); }

EdgeList chain_edges(std::size_t n) {
  EdgeList out;
  for (std::size_t j = 1; j < n; ++j) out.emplace_back(j - 1, j);
  return out;
}

SkeletonGraph chain_graph(std::size_t n) { return build_partitions(chain_edges(n), n, 0); }

}  // namespace tegcn
