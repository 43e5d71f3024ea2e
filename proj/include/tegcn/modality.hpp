#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tegcn/graph.hpp"
#include "tegcn/tensor.hpp"

namespace tegcn {

enum class Modality { kJoint, kJointMotion, kBone, kBoneMotion };

inline constexpr Modality kAllModalities[] = {Modality::kJoint, Modality::kJointMotion, Modality::kBone,
                                              Modality::kBoneMotion};

std::string_view modality_name(Modality m);
Modality parse_modality(std::string_view name);

struct ModalityStream {
  Modality kind = Modality::kJoint;
  Tensor data;  // C x T x J x M
};

/// Bone vectors indexed by target joint: target - source. The center joint gets zero.
Tensor derive_bone(const Tensor& joints, const SkeletonGraph& graph);

/// Frame differences value(t + 1) - value(t); the final frame is zero. Needs T >= 2.
Tensor derive_motion(const Tensor& stream);

ModalityStream derive_stream(const Tensor& joints, const SkeletonGraph& graph, Modality kind);

}  // namespace tegcn
