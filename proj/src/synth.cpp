#include "tegcn/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace tegcn {

namespace {

constexpr double kBoneLength = 0.25;
constexpr double kAmplitude = 0.3;

std::size_t index(const Tensor& t, std::size_t c, std::size_t f, std::size_t j, std::size_t m) {
  return ((c * t.dim(1) + f) * t.dim(2) + j) * t.dim(3) + m;
}

Tensor rest_pose(const SynthParams& p) {
  Tensor t(Shape{3, p.frames, p.joints, p.bodies});
  for (std::size_t f = 0; f < p.frames; ++f)
    for (std::size_t j = 0; j < p.joints; ++j) t[index(t, 1, f, j, 0)] = kBoneLength * static_cast<double>(j);
  return t;
}

void add_noise(Tensor& t, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return;
  std::normal_distribution<double> noise(0.0, sigma);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t f = 0; f < t.dim(1); ++f)
      for (std::size_t j = 0; j < t.dim(2); ++j) t[index(t, c, f, j, 0)] += noise(rng);
}

void validate(const SynthParams& p) {
  if (p.classes < 2) throw ConfigError("synthetic corpus needs at least 2 classes");
  if (p.joints < 1 || p.frames < 2 || p.bodies < 1 || p.samples_per_class < 1) {
    throw ConfigError("synthetic corpus dimensions must be positive (frames >= 2)");
  }
}

}  // namespace

Tensor synth_template(const SynthParams& p, std::size_t cls) {
  validate(p);
  Tensor t = rest_pose(p);
  const std::size_t joint = cls % p.joints;
  const double freq = 1.0 + 0.5 * static_cast<double>(cls / p.joints) + 0.25 * static_cast<double>(cls % 2);
  const double phase = std::numbers::pi * static_cast<double>(cls) / static_cast<double>(p.classes);
  // burst occupies the middle 40% of the clip; pauses on either side
  const double start = 0.3 * static_cast<double>(p.frames - 1);
  const double len = 0.4 * static_cast<double>(p.frames - 1);
  for (std::size_t f = 0; f < p.frames; ++f) {
    const double tau = (static_cast<double>(f) - start) / len;
    if (tau < 0.0 || tau > 1.0) continue;
    const double env = std::sin(std::numbers::pi * tau);
    const double arg = 2.0 * std::numbers::pi * freq * tau + phase;
    t[index(t, 0, f, joint, 0)] += kAmplitude * env * std::sin(arg);
    t[index(t, 2, f, joint, 0)] += 0.5 * kAmplitude * env * std::cos(arg);
  }
  return t;
}

std::vector<SkeletonSequence> synth_dataset(const SynthParams& p) {
  validate(p);
  std::mt19937_64 rng(p.seed);
  std::vector<SkeletonSequence> out;
  out.reserve(p.classes * p.samples_per_class);
  for (std::size_t c = 0; c < p.classes; ++c) {
    const Tensor tmpl = synth_template(p, c);
    for (std::size_t i = 0; i < p.samples_per_class; ++i) {
      SkeletonSequence s;
      s.data = tmpl;
      add_noise(s.data, p.noise, rng);
      s.label = static_cast<int>(c);
      s.source_id = "synth-c" + std::to_string(c) + "-" + std::to_string(i);
      s.valid_frames = p.frames;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<SkeletonSequence> synth_long_range_dataset(const SynthParams& p) {
  validate(p);
  if (p.classes != 2) throw ConfigError("long-range corpus has exactly 2 classes");
  if (p.frames < 24) throw ConfigError("long-range corpus needs at least 24 frames");
  std::mt19937_64 rng(p.seed);
  const std::size_t first_max = p.frames / 4;
  const std::size_t gap_lo = (p.frames * 3) / 8, gap_hi = (p.frames * 17) / 32;
  std::uniform_int_distribution<std::size_t> first_pos(3, first_max);
  std::uniform_int_distribution<std::size_t> gap(gap_lo, gap_hi);
  std::bernoulli_distribution coin(0.5);
  constexpr double kProfile[3] = {0.5, 1.0, 0.5};
  const std::size_t joint = p.joints - 1;

  std::vector<SkeletonSequence> out;
  out.reserve(2 * p.samples_per_class);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < p.samples_per_class; ++i) {
      SkeletonSequence s;
      s.data = rest_pose(p);
      const double s1 = coin(rng) ? 1.0 : -1.0;
      const double s2 = c == 0 ? s1 : -s1;
      const std::size_t p1 = first_pos(rng);
      const std::size_t p2 = p1 + gap(rng);
      for (std::size_t k = 0; k < 3; ++k) {
        s.data[index(s.data, 0, p1 - 1 + k, joint, 0)] += 2.0 * kAmplitude * s1 * kProfile[k];
        s.data[index(s.data, 0, p2 - 1 + k, joint, 0)] += 2.0 * kAmplitude * s2 * kProfile[k];
      }
      add_noise(s.data, p.noise, rng);
      s.label = static_cast<int>(c);
      s.source_id = "longrange-c" + std::to_string(c) + "-" + std::to_string(i);
      s.valid_frames = p.frames;
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace tegcn
