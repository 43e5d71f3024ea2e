#include "tegcn/spatial.hpp"

namespace tegcn {

SGBlock::SGBlock(const std::string& prefix, std::size_t in_ch, std::size_t out_ch, const SkeletonGraph& graph,
                 std::uint64_t seed)
    : in_channels(in_ch), out_channels(out_ch), num_joints(graph.num_joints), bn(prefix + ".bn", out_ch) {
  for (std::size_t k = 0; k < kNumPartitions; ++k) {
    const std::string w = prefix + ".W" + std::to_string(k);
    const std::string m = prefix + ".M" + std::to_string(k);
    weights[k] = Parameter(w, uniform_init(Shape{out_ch, in_ch}, in_ch, seed, w));
    masks[k] = Parameter(m, Tensor(Shape{num_joints, num_joints}, 1.0));
    partitions[k] = graph.normalized[k];
  }
}

Var SGBlock::aggregate(Tape& tape, const Var& x) {
  if (x.value().rank() != 4 || x.value().dim(3) != num_joints) {
    throw DimensionError("SG-block expects [B, C, T, " + std::to_string(num_joints) + "], got " +
                         shape_str(x.value().shape()));
  }
  Var sum;
  for (std::size_t k = 0; k < kNumPartitions; ++k) {
    Var adj = mul(tape.constant(partitions[k]), tape.param(masks[k]));
    Var term = channel_mix(tape.param(weights[k]), joint_mix(x, adj));
    sum = k == 0 ? term : add(sum, term);
  }
  return sum;
}

Var SGBlock::forward(Tape& tape, const Var& x, bool train) {
  Var y = aggregate(tape, x);
  if (bypass_bn) return y;
  return relu(bn.forward(tape, y, train));
}

void SGBlock::collect(std::vector<Parameter*>& params, std::vector<NamedBuffer>& buffers) {
  for (auto& w : weights) params.push_back(&w);
  for (auto& m : masks) params.push_back(&m);
  bn.collect(params, buffers);
}

TCBlock::TCBlock(const std::string& prefix, std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t s,
                 std::uint64_t seed)
    : kernel(k), stride(s), bn(prefix + ".bn", out_ch) {
  if (k % 2 == 0) throw ConfigError("temporal kernel must be odd, got " + std::to_string(k));
  if (s == 0) throw ConfigError("temporal stride must be positive");
  const std::string w = prefix + ".W";
  weight = Parameter(w, uniform_init(Shape{out_ch, in_ch, k}, in_ch * k, seed, w));
}

Var TCBlock::forward(Tape& tape, const Var& x, bool train) {
  Var y = temporal_conv(x, tape.param(weight), stride);
  if (bypass_bn) return y;
  return relu(bn.forward(tape, y, train));
}

void TCBlock::collect(std::vector<Parameter*>& params, std::vector<NamedBuffer>& buffers) {
  params.push_back(&weight);
  bn.collect(params, buffers);
}

}  // namespace tegcn
