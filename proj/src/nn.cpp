#include "tegcn/nn.hpp"

#include <cmath>
#include <random>

namespace tegcn {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Tensor uniform_init(const Shape& shape, std::size_t fan_in, std::uint64_t seed, std::string_view name) {
  std::mt19937_64 rng(seed ^ fnv1a(name));
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(shape);
  for (auto& v : t.data()) v = round_to_precision(dist(rng));
  return t;
}

BatchNorm::BatchNorm(const std::string& prefix_, std::size_t channels)
    : gamma(prefix_ + ".gamma", Tensor(Shape{channels}, 1.0)),
      beta(prefix_ + ".beta", Tensor(Shape{channels}, 0.0)),
      stats{Tensor(Shape{channels}, 0.0), Tensor(Shape{channels}, 1.0)},
      prefix(prefix_) {}

Var BatchNorm::forward(Tape& tape, const Var& x, bool train) {
  return batchnorm(x, tape.param(gamma), tape.param(beta), stats, train);
}

void BatchNorm::collect(std::vector<Parameter*>& params, std::vector<NamedBuffer>& buffers) {
  params.push_back(&gamma);
  params.push_back(&beta);
  buffers.emplace_back(prefix + ".running_mean", &stats.running_mean);
  buffers.emplace_back(prefix + ".running_var", &stats.running_var);
}

}  // namespace tegcn
