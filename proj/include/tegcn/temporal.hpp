#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tegcn/nn.hpp"

namespace tegcn {

enum class RelevanceKind { kFeatureCalculated, kFeatureLearned };

std::string_view relevance_name(RelevanceKind k);
RelevanceKind parse_relevance(std::string_view name);

inline constexpr std::size_t kCalculatedReduction = 4;

/// One relevance function producing raw T x T scores from a feature map [B, C, T, J].
class RelevanceHead {
 public:
  RelevanceHead() = default;
  // frames is the temporal length the head is bound to (feature-learned only).
  RelevanceHead(const std::string& prefix, RelevanceKind kind, std::size_t channels, std::size_t joints,
                std::size_t frames, std::uint64_t seed);

  /// [B, C, T, J] -> raw scores [B, T, T]
  Var scores(Tape& tape, const Var& f);

  void collect(std::vector<Parameter*>& params);

  RelevanceKind kind = RelevanceKind::kFeatureCalculated;
  std::size_t channels = 0;
  std::size_t joints = 0;
  std::size_t frames = 0;

  // Feature Calculated: 1x1 maps C -> C/4.
  Parameter wa;
  Parameter wb;
  // Feature Learned: C-conv [1, C], J-conv [J, 1], T-conv [T, T] + bias [T].
  Parameter c_conv;
  Parameter j_conv;
  Parameter t_conv;
  Parameter t_bias;
};

// Raw scores for each pair of temporal features:
// r_ij = <W_a f_i, W_b f_j>, features flattened over (C/4, J).
Var feature_calculated(Tape& tape, RelevanceHead& head, const Var& f);

// C-conv squeezes channels, J-conv squeezes joints, giving a temporal profile g.
// g is laid out diagonally (channel k holds g_k at position k) and the T-conv
// mixes those T channels: r_ij = Wt[i][j] g_j + bt[i]. No constraints on r.
Var feature_learned(Tape& tape, RelevanceHead& head, const Var& f);

/// Row-wise softmax: every row of the result sums to one.
Var normalize_scores(const Var& raw);

// N relevance heads with per-head output maps W_t^n (zero at init):
//   out = sum_n A_t^n f W_t^n
class MultiHeadTemporalConv {
 public:
  MultiHeadTemporalConv() = default;
  MultiHeadTemporalConv(const std::string& prefix, std::size_t heads, const std::vector<RelevanceKind>& kinds,
                        std::size_t channels, std::size_t joints, std::size_t frames, std::uint64_t seed);

  std::vector<Var> build_heads(Tape& tape, const Var& f);
  Var forward(Tape& tape, const Var& f, const std::vector<Var>& adjacencies);
  Var forward(Tape& tape, const Var& f) { return forward(tape, f, build_heads(tape, f)); }

  void collect(std::vector<Parameter*>& params);

  std::vector<RelevanceHead> heads;
  std::vector<Parameter> out_maps;  // [C, C]
  std::size_t frames = 0;
};

}  // namespace tegcn
