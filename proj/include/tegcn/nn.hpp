#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tegcn/ops.hpp"

namespace tegcn {

/// Stable 64-bit FNV-1a, used to derive per-parameter seeds.
std::uint64_t fnv1a(std::string_view s);

// Uniform in +-sqrt(1 / fan_in). Each parameter draws from its own stream
// seeded by (seed, name), so adding parameters never shifts the others.
Tensor uniform_init(const Shape& shape, std::size_t fan_in, std::uint64_t seed, std::string_view name);

using NamedBuffer = std::pair<std::string, Tensor*>;

class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(const std::string& prefix, std::size_t channels);

  Var forward(Tape& tape, const Var& x, bool train);

  void collect(std::vector<Parameter*>& params, std::vector<NamedBuffer>& buffers);

  Parameter gamma;
  Parameter beta;
  BatchNormStats stats;
  std::string prefix;
};

}  // namespace tegcn
