#include "tegcn/modality.hpp"

#include "tegcn/skeleton.hpp"

namespace tegcn {

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::kJoint:
      return "joint";
    case Modality::kJointMotion:
      return "joint-motion";
    case Modality::kBone:
      return "bone";
    case Modality::kBoneMotion:
      return "bone-motion";
  }
  return "joint";
}

Modality parse_modality(std::string_view name) {
  for (auto m : kAllModalities) {
    if (modality_name(m) == name) return m;
  }
  throw ConfigError("unknown modality '" + std::string(name) + "'");
}

namespace {
void require_ctjm(const Tensor& t, const char* op) {
  if (t.rank() != 4) throw DimensionError(std::string(op) + ": expected C x T x J x M, got " + shape_str(t.shape()));
}
}  // namespace

Tensor derive_bone(const Tensor& joints, const SkeletonGraph& graph) {
  require_ctjm(joints, "derive_bone");
  const std::size_t ch = joints.dim(0), frames = joints.dim(1), nj = joints.dim(2), bodies = joints.dim(3);
  if (nj != graph.num_joints) {
    throw DimensionError("derive_bone: stream has " + std::to_string(nj) + " joints, graph has " +
                         std::to_string(graph.num_joints));
  }
  Tensor out(joints.shape());
  auto idx = [&](std::size_t c, std::size_t t, std::size_t j, std::size_t m) {
    return ((c * frames + t) * nj + j) * bodies + m;
  };
  for (const auto& bone : graph.bones)
    for (std::size_t c = 0; c < ch; ++c)
      for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t m = 0; m < bodies; ++m) {
          out[idx(c, t, bone.target, m)] = joints[idx(c, t, bone.target, m)] - joints[idx(c, t, bone.source, m)];
        }
  return out;
}

Tensor derive_motion(const Tensor& stream) {
  require_ctjm(stream, "derive_motion");
  const std::size_t ch = stream.dim(0), frames = stream.dim(1);
  if (frames < 2) throw LengthError("derive_motion needs at least 2 frames, got " + std::to_string(frames));
  const std::size_t per_frame = stream.dim(2) * stream.dim(3);
  Tensor out(stream.shape());
  for (std::size_t c = 0; c < ch; ++c)
    for (std::size_t t = 0; t + 1 < frames; ++t) {
      const std::size_t cur = (c * frames + t) * per_frame;
      const std::size_t nxt = cur + per_frame;
      for (std::size_t k = 0; k < per_frame; ++k) out[cur + k] = stream[nxt + k] - stream[cur + k];
    }
  return out;
}

ModalityStream derive_stream(const Tensor& joints, const SkeletonGraph& graph, Modality kind) {
  switch (kind) {
    case Modality::kJoint:
      return {kind, joints};
    case Modality::kJointMotion:
      return {kind, derive_motion(joints)};
    case Modality::kBone:
      return {kind, derive_bone(joints, graph)};
    case Modality::kBoneMotion:
      return {kind, derive_motion(derive_bone(joints, graph))};
  }
  return {kind, joints};
}

}  // namespace tegcn
