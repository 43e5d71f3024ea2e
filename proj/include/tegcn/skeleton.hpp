#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tegcn/graph.hpp"
#include "tegcn/tensor.hpp"

namespace tegcn {

struct ParseError : DataError {
  using DataError::DataError;
};
struct EmptyClipError : DataError {
  using DataError::DataError;
};
struct LengthError : DataError {
  using DataError::DataError;
};

using Point3 = std::array<double, 3>;

struct BodyFrame {
  std::string id;
  std::vector<Point3> joints;
};

struct RawFrame {
  std::vector<BodyFrame> bodies;
};

/// Raw camera-space clip as read from a skeleton file; every detected body is kept.
struct RawClip {
  std::string source_id;
  std::vector<RawFrame> frames;
};

/// Preprocessed clip. data is C x T x J x M (C = 3 coordinates, M body slots),
/// zero wherever a frame or body is absent.
struct SkeletonSequence {
  Tensor data;
  int label = 0;
  std::string source_id;
  std::size_t valid_frames = 0;
};

// NTU ".skeleton" text layout: frame count; per frame a body count; per body an
// info line (body id first), a joint count, then one line per joint whose first
// three fields are x y z. expected_joints == 0 accepts any constant count.
RawClip parse_skeleton(std::string_view text, std::size_t expected_joints = kNtuJoints, std::string source_id = {});
RawClip parse_skeleton_file(const std::filesystem::path& path, std::size_t expected_joints = kNtuJoints);
std::string emit_skeleton(const RawClip& clip);

/// Per-frame joint lists of one body, in frame order.
struct BodyTrack {
  std::string id;
  std::vector<std::vector<Point3>> frames;
};
std::vector<BodyTrack> body_tracks(const RawClip& clip);

/// Sum over joints and x/y/z of the population variance across frames.
double body_motion_value(std::span<const std::vector<Point3>> track);

struct MotionRange {
  double lo = 0.1;
  double hi = 2.0;
};

inline constexpr std::size_t kMaxBodies = 2;

// Drops bodies whose motion value lies outside [lo, hi], keeps the max_bodies
// most active of the rest and removes frames left without bodies.
// Throws EmptyClipError if nothing survives.
RawClip filter_bodies(const RawClip& clip, MotionRange range, std::size_t max_bodies = kMaxBodies);

struct PreprocessOptions {
  std::size_t fixed_len = 300;
  std::size_t spine_joint = 1;
  std::size_t max_bodies = kMaxBodies;
  MotionRange motion{};
};

// Translates every joint by minus the primary body's spine joint in its first
// frame, places bodies in slots by descending motion value and zero-pads to
// fixed_len. Throws LengthError when the clip is longer than fixed_len.
SkeletonSequence center_and_pad(const RawClip& clip, const PreprocessOptions& opts);

/// Uniformly subsamples clips longer than `frames` (floor(i * L / frames)).
RawClip subsample(const RawClip& clip, std::size_t frames);

/// filter_bodies -> subsample (if needed) -> center_and_pad.
SkeletonSequence preprocess_clip(const RawClip& clip, const PreprocessOptions& opts);

/// NTU file name SsssCcccPpppRrrrAaaa fields; action is 1-based.
struct NtuName {
  int setup = 0, camera = 0, performer = 0, replication = 0, action = 0;
};
bool parse_ntu_name(std::string_view stem, NtuName& out);

}  // namespace tegcn
