#include "tegcn/skeleton.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace tegcn {

namespace {

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  // Returns the next non-empty line split into whitespace fields.
  std::vector<std::string_view> next(const char* what) {
    while (pos_ <= text_.size()) {
      if (pos_ == text_.size()) break;
      auto end = text_.find('\n', pos_);
      if (end == std::string_view::npos) end = text_.size();
      std::string_view line = text_.substr(pos_, end - pos_);
      pos_ = end + 1;
      ++line_no_;
      auto fields = split(line);
      if (!fields.empty()) return fields;
    }
    throw ParseError(std::string("unexpected end of file while reading ") + what + " after line " +
                     std::to_string(line_no_));
  }

  std::size_t line() const { return line_no_; }

 private:
  static std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      const auto start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

std::size_t parse_count(std::string_view field, const LineReader& r, const char* what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError("line " + std::to_string(r.line()) + ": expected " + what + ", got '" + std::string(field) + "'");
  }
  return v;
}

double parse_real(std::string_view field, const LineReader& r) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(r.line()) + ": non-numeric coordinate '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

RawClip parse_skeleton(std::string_view text, std::size_t expected_joints, std::string source_id) {
  LineReader reader(text);
  RawClip clip;
  clip.source_id = std::move(source_id);
  const auto frame_count = parse_count(reader.next("frame count")[0], reader, "frame count");
  clip.frames.reserve(frame_count);
  std::size_t joint_count = expected_joints;
  for (std::size_t f = 0; f < frame_count; ++f) {
    std::vector<std::string_view> fields;
    try {
      fields = reader.next("body count");
    } catch (const ParseError&) {
      throw ParseError("file declares " + std::to_string(frame_count) + " frames but contains " + std::to_string(f));
    }
    const auto body_count = parse_count(fields[0], reader, "body count");
    RawFrame frame;
    for (std::size_t b = 0; b < body_count; ++b) {
      BodyFrame body;
      body.id = std::string(reader.next("body info")[0]);
      const auto joints = parse_count(reader.next("joint count")[0], reader, "joint count");
      if (joint_count == 0) joint_count = joints;
      if (joints != joint_count) {
        throw ParseError("line " + std::to_string(reader.line()) + ": expected " + std::to_string(joint_count) +
                         " joints, got " + std::to_string(joints));
      }
      body.joints.resize(joints);
      for (auto& p : body.joints) {
        auto jf = reader.next("joint");
        if (jf.size() < 3) {
          throw ParseError("line " + std::to_string(reader.line()) + ": joint line needs x y z");
        }
        for (std::size_t c = 0; c < 3; ++c) p[c] = parse_real(jf[c], reader);
      }
      frame.bodies.push_back(std::move(body));
    }
    clip.frames.push_back(std::move(frame));
  }
  return clip;
}

RawClip parse_skeleton_file(const std::filesystem::path& path, std::size_t expected_joints) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_skeleton(ss.str(), expected_joints, path.stem().string());
}

std::string emit_skeleton(const RawClip& clip) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << clip.frames.size() << '\n';
  for (const auto& frame : clip.frames) {
    os << frame.bodies.size() << '\n';
    for (const auto& body : frame.bodies) {
      // body id, then the nine tracking fields NTU writes (zeros here)
      os << body.id << " 0 0 0 0 0 0 0 0 2\n";
      os << body.joints.size() << '\n';
      for (const auto& p : body.joints) {
        os << p[0] << ' ' << p[1] << ' ' << p[2] << " 0 0 0 0 0 0 0 0 2\n";
      }
    }
  }
  return os.str();
}

std::vector<BodyTrack> body_tracks(const RawClip& clip) {
  std::vector<BodyTrack> tracks;
  std::map<std::string, std::size_t> index;
  for (const auto& frame : clip.frames) {
    for (const auto& body : frame.bodies) {
      auto [it, inserted] = index.emplace(body.id, tracks.size());
      if (inserted) tracks.push_back(BodyTrack{body.id, {}});
      tracks[it->second].frames.push_back(body.joints);
    }
  }
  return tracks;
}

double body_motion_value(std::span<const std::vector<Point3>> track) {
  if (track.empty()) return 0.0;
  const std::size_t joints = track.front().size();
  const double n = static_cast<double>(track.size());
  double total = 0.0;
  for (std::size_t j = 0; j < joints; ++j) {
    for (std::size_t c = 0; c < 3; ++c) {
      double mean = 0.0;
      for (const auto& f : track) mean += f[j][c];
      mean /= n;
      double ss = 0.0;
      for (const auto& f : track) ss += (f[j][c] - mean) * (f[j][c] - mean);
      total += ss / n;
    }
  }
  return total;
}

namespace {

struct RankedBody {
  std::string id;
  double motion;
  std::size_t first_seen;
};

// Bodies ordered by motion value (descending), ties by first appearance.
std::vector<RankedBody> rank_bodies(const RawClip& clip) {
  std::vector<RankedBody> ranked;
  const auto tracks = body_tracks(clip);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    ranked.push_back(RankedBody{tracks[i].id, body_motion_value(tracks[i].frames), i});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedBody& a, const RankedBody& b) { return a.motion > b.motion; });
  return ranked;
}

}  // namespace

RawClip filter_bodies(const RawClip& clip, MotionRange range, std::size_t max_bodies) {
  if (!(range.lo < range.hi)) throw ConfigError("motion range needs lo < hi");
  auto ranked = rank_bodies(clip);
  std::vector<std::string> keep;
  for (const auto& b : ranked) {
    if (b.motion < range.lo || b.motion > range.hi) continue;
    if (keep.size() < max_bodies) keep.push_back(b.id);
  }

  RawClip out;
  out.source_id = clip.source_id;
  for (const auto& frame : clip.frames) {
    RawFrame kept;
    for (const auto& body : frame.bodies) {
      if (std::find(keep.begin(), keep.end(), body.id) != keep.end()) kept.bodies.push_back(body);
    }
    if (!kept.bodies.empty()) out.frames.push_back(std::move(kept));
  }
  if (out.frames.empty()) throw EmptyClipError("clip '" + clip.source_id + "' has no body within the motion range");
  return out;
}

SkeletonSequence center_and_pad(const RawClip& clip, const PreprocessOptions& opts) {
  if (clip.frames.empty()) throw EmptyClipError("clip '" + clip.source_id + "' is empty");
  if (clip.frames.size() > opts.fixed_len) {
    throw LengthError("clip '" + clip.source_id + "' has " + std::to_string(clip.frames.size()) +
                      " frames, longer than fixed length " + std::to_string(opts.fixed_len));
  }
  const auto ranked = rank_bodies(clip);
  if (ranked.empty()) throw EmptyClipError("clip '" + clip.source_id + "' has no bodies");

  std::size_t joints = 0;
  for (const auto& f : clip.frames) {
    for (const auto& b : f.bodies) joints = b.joints.size();
    if (joints) break;
  }
  if (opts.spine_joint >= joints) throw ConfigError("spine joint index outside the skeleton");

  const std::string& primary = ranked.front().id;
  Point3 origin{};
  bool found = false;
  for (const auto& f : clip.frames) {
    for (const auto& b : f.bodies) {
      if (b.id == primary) {
        origin = b.joints[opts.spine_joint];
        found = true;
        break;
      }
    }
    if (found) break;
  }

  const std::size_t bodies = opts.max_bodies;
  SkeletonSequence seq;
  seq.source_id = clip.source_id;
  seq.valid_frames = clip.frames.size();
  seq.data = Tensor(Shape{3, opts.fixed_len, joints, bodies});
  const std::size_t tjm = opts.fixed_len * joints * bodies;
  for (std::size_t t = 0; t < clip.frames.size(); ++t) {
    for (const auto& body : clip.frames[t].bodies) {
      std::size_t slot = bodies;
      for (std::size_t r = 0; r < ranked.size() && r < bodies; ++r) {
        if (ranked[r].id == body.id) slot = r;
      }
      if (slot == bodies) continue;
      if (body.joints.size() != joints) throw DataError("joint count changes within clip '" + clip.source_id + "'");
      for (std::size_t j = 0; j < joints; ++j)
        for (std::size_t c = 0; c < 3; ++c) {
          seq.data[c * tjm + (t * joints + j) * bodies + slot] = body.joints[j][c] - origin[c];
        }
    }
  }
  return seq;
}

RawClip subsample(const RawClip& clip, std::size_t frames) {
  if (clip.frames.size() <= frames) return clip;
  RawClip out;
  out.source_id = clip.source_id;
  const std::size_t len = clip.frames.size();
  for (std::size_t i = 0; i < frames; ++i) out.frames.push_back(clip.frames[i * len / frames]);
  return out;
}

SkeletonSequence preprocess_clip(const RawClip& clip, const PreprocessOptions& opts) {
  return center_and_pad(subsample(filter_bodies(clip, opts.motion, opts.max_bodies), opts.fixed_len), opts);
}

bool parse_ntu_name(std::string_view stem, NtuName& out) {
  // SsssCcccPpppRrrrAaaa
  if (stem.size() < 20) return false;
  auto field = [&](std::size_t pos, char tag, int& dst) {
    if (stem[pos] != tag) return false;
    auto [ptr, ec] = std::from_chars(stem.data() + pos + 1, stem.data() + pos + 4, dst);
    return ec == std::errc() && ptr == stem.data() + pos + 4;
  };
  return field(0, 'S', out.setup) && field(4, 'C', out.camera) && field(8, 'P', out.performer) &&
         field(12, 'R', out.replication) && field(16, 'A', out.action);
}

}  // namespace tegcn
