#pragma once

#include <cstdint>
#include <vector>

#include "tegcn/skeleton.hpp"

namespace tegcn {

struct SynthParams {
  std::size_t classes = 4;
  std::size_t samples_per_class = 32;
  std::size_t joints = 5;
  std::size_t frames = 32;
  std::size_t bodies = 1;
  double noise = 0.05;
  std::uint64_t seed = 1;
};

// Motion templates on a chain skeleton (chain_graph(joints)). Class c moves
// joint c mod J along a sinusoid with class-specific frequency and phase
// inside a pause-burst-pause envelope; Gaussian noise is added per sample.
std::vector<SkeletonSequence> synth_dataset(const SynthParams& params);

/// The noiseless template of one class.
Tensor synth_template(const SynthParams& params, std::size_t cls);

// Two-class corpus where the label is only visible through the relation of
// two short bursts far apart in time: class 0 bursts share a direction,
// class 1 bursts are opposite. Each burst on its own is distributed
// identically in both classes. Needs frames >= 24.
std::vector<SkeletonSequence> synth_long_range_dataset(const SynthParams& params);

}  // namespace tegcn
