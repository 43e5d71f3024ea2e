#include "tegcn/temporal.hpp"

namespace tegcn {

std::string_view relevance_name(RelevanceKind k) {
  return k == RelevanceKind::kFeatureCalculated ? "feature-calculated" : "feature-learned";
}

RelevanceKind parse_relevance(std::string_view name) {
  if (name == "feature-calculated" || name == "calculated") return RelevanceKind::kFeatureCalculated;
  if (name == "feature-learned" || name == "learned") return RelevanceKind::kFeatureLearned;
  throw ConfigError("unknown relevance function '" + std::string(name) + "'");
}

RelevanceHead::RelevanceHead(const std::string& prefix, RelevanceKind k, std::size_t c, std::size_t j,
                             std::size_t t, std::uint64_t seed)
    : kind(k), channels(c), joints(j), frames(t) {
  if (kind == RelevanceKind::kFeatureCalculated) {
    if (c % kCalculatedReduction != 0 || c == 0) {
      throw ConfigError("feature-calculated head needs channels divisible by 4, got " + std::to_string(c));
    }
    const std::size_t r = c / kCalculatedReduction;
    wa = Parameter(prefix + ".Wa", uniform_init(Shape{r, c}, c, seed, prefix + ".Wa"));
    wb = Parameter(prefix + ".Wb", uniform_init(Shape{r, c}, c, seed, prefix + ".Wb"));
  } else {
    if (t == 0) throw ConfigError("feature-learned head needs a fixed frame count");
    c_conv = Parameter(prefix + ".Cconv", uniform_init(Shape{1, c}, c, seed, prefix + ".Cconv"));
    j_conv = Parameter(prefix + ".Jconv", uniform_init(Shape{j, 1}, j, seed, prefix + ".Jconv"));
    t_conv = Parameter(prefix + ".Tconv", uniform_init(Shape{t, t}, t, seed, prefix + ".Tconv"));
    t_bias = Parameter(prefix + ".Tbias", uniform_init(Shape{t}, t, seed, prefix + ".Tbias"));
  }
}

Var RelevanceHead::scores(Tape& tape, const Var& f) {
  return kind == RelevanceKind::kFeatureCalculated ? feature_calculated(tape, *this, f)
                                                   : feature_learned(tape, *this, f);
}

void RelevanceHead::collect(std::vector<Parameter*>& params) {
  if (kind == RelevanceKind::kFeatureCalculated) {
    params.push_back(&wa);
    params.push_back(&wb);
  } else {
    params.push_back(&c_conv);
    params.push_back(&j_conv);
    params.push_back(&t_conv);
    params.push_back(&t_bias);
  }
}

namespace {

void check_feature(const RelevanceHead& head, const Var& f) {
  const Tensor& v = f.value();
  if (v.rank() != 4 || v.dim(1) != head.channels || v.dim(3) != head.joints) {
    throw DimensionError("relevance head expects [B, " + std::to_string(head.channels) + ", T, " +
                         std::to_string(head.joints) + "], got " + shape_str(v.shape()));
  }
}

}  // namespace

Var feature_calculated(Tape& tape, RelevanceHead& head, const Var& f) {
  if (head.kind != RelevanceKind::kFeatureCalculated) throw ConfigError("head is not feature-calculated");
  check_feature(head, f);
  Var a = channel_mix(tape.param(head.wa), f);
  Var b = channel_mix(tape.param(head.wb), f);
  return temporal_corr(a, b);
}

Var feature_learned(Tape& tape, RelevanceHead& head, const Var& f) {
  if (head.kind != RelevanceKind::kFeatureLearned) throw ConfigError("head is not feature-learned");
  check_feature(head, f);
  const Tensor& v = f.value();
  if (v.dim(2) != head.frames) {
    throw DimensionError("feature-learned head bound to T=" + std::to_string(head.frames) + ", got T=" +
                         std::to_string(v.dim(2)));
  }
  const std::size_t batch = v.dim(0);
  Var squeezed = joint_mix(channel_mix(tape.param(head.c_conv), f), tape.param(head.j_conv));  // [B,1,T,1]
  Var g = reshape(squeezed, Shape{batch, head.frames});
  return learned_scores(g, tape.param(head.t_conv), tape.param(head.t_bias));
}

Var normalize_scores(const Var& raw) { return softmax_rows(raw); }

MultiHeadTemporalConv::MultiHeadTemporalConv(const std::string& prefix, std::size_t n,
                                             const std::vector<RelevanceKind>& kinds, std::size_t channels,
                                             std::size_t joints, std::size_t t, std::uint64_t seed)
    : frames(t) {
  if (n == 0) throw ConfigError("temporal graph conv needs at least one head");
  if (kinds.empty()) throw ConfigError("no relevance kind given");
  for (std::size_t h = 0; h < n; ++h) {
    const std::string hp = prefix + ".head" + std::to_string(h);
    heads.emplace_back(hp, kinds[h % kinds.size()], channels, joints, t, seed);
    out_maps.emplace_back(hp + ".Wt", Tensor(Shape{channels, channels}, 0.0));
  }
}

std::vector<Var> MultiHeadTemporalConv::build_heads(Tape& tape, const Var& f) {
  std::vector<Var> out;
  out.reserve(heads.size());
  for (auto& h : heads) out.push_back(normalize_scores(h.scores(tape, f)));
  return out;
}

Var MultiHeadTemporalConv::forward(Tape& tape, const Var& f, const std::vector<Var>& adjacencies) {
  if (adjacencies.size() != heads.size()) {
    throw DimensionError("expected " + std::to_string(heads.size()) + " adjacencies, got " +
                         std::to_string(adjacencies.size()));
  }
  Var sum;
  for (std::size_t n = 0; n < heads.size(); ++n) {
    Var term = channel_mix(tape.param(out_maps[n]), temporal_mix(adjacencies[n], f));
    sum = n == 0 ? term : add(sum, term);
  }
  return sum;
}

void MultiHeadTemporalConv::collect(std::vector<Parameter*>& params) {
  for (std::size_t n = 0; n < heads.size(); ++n) {
    heads[n].collect(params);
    params.push_back(&out_maps[n]);
  }
}

}  // namespace tegcn
