#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tegcn/autodiff.hpp"

namespace tegcn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Builds the scalar loss on the given tape. Must be deterministic.
using LossFn = std::function<Var(Tape&)>;

// Compares tape gradients with central differences (f(x+eps) - f(x-eps)) / 2eps
// for every coordinate of every parameter. Relative error uses the denominator
// max(|analytic|, |numeric|, 1e-8). Forces 64-bit mode for its duration and
// throws DeterminismError if two evaluations at the same point disagree.
GradCheckResult grad_check(const LossFn& f, const std::vector<Parameter*>& params, double eps = 1e-5);

}  // namespace tegcn
