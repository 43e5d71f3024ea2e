#include "tegcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace tegcn {

namespace {

double evaluate(const LossFn& f) {
  Tape tape;
  Var loss = f(tape);
  if (loss.value().size() != 1) throw DimensionError("grad_check: loss must be a scalar");
  return loss.value()[0];
}

}  // namespace

GradCheckResult grad_check(const LossFn& f, const std::vector<Parameter*>& params, double eps) {
  ScopedPrecision scoped(Precision::kFloat64);
  zero_grads(params);
  double base = 0.0;
  {
    Tape tape;
    Var loss = f(tape);
    base = loss.value()[0];
    tape.backward(loss);
  }
  if (evaluate(f) != base) throw DeterminismError("grad_check: loss differs between identical evaluations");

  GradCheckResult result;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double plus = evaluate(f);
      p->value[i] = saved - eps;
      const double minus = evaluate(f);
      p->value[i] = saved;

      const double numeric = (plus - minus) / (2.0 * eps);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.coordinates;
      if (result.coordinates == 1 || rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_parameter = p->name;
        result.worst_index = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace tegcn
