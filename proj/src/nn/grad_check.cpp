#include "mfgat/nn/grad_check.hpp"

#include "mfgat/errors.hpp"
#include "mfgat/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace mfgat::nn {

namespace {

double evaluate(const LossBuilder& loss) {
  Tape tape;
  const double v = loss(tape).value()(0, 0);
  if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite at a probe point");
  return v;
}

}  // namespace

GradCheckResult grad_check(const LossBuilder& loss, std::span<Tensor* const> params, const GradCheckOptions& options) {
  for (Tensor* p : params) p->zero_grad();
  {
    Tape tape;
    Var l = loss(tape);
    if (!std::isfinite(l.value()(0, 0))) throw NumericError("grad_check: loss is not finite at the base point");
    tape.backward(l);
  }

  GradCheckResult result;
  Rng rng(options.seed);
  const double eps = options.epsilon;
  for (Tensor* p : params) {
    const Matrix analytic = p->grad;
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(p->size()));
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    if (options.max_coords_per_tensor != 0 && coords.size() > options.max_coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    for (Eigen::Index idx : coords) {
      double& x = p->data.data()[idx];
      const double saved = x;
      x = saved + eps;
      const double plus = evaluate(loss);
      x = saved - eps;
      const double minus = evaluate(loss);
      x = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic.data()[idx];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++result.coords_checked;
      if (err > result.max_rel_error || result.worst_index < 0) {
        result.max_rel_error = err;
        result.worst_tensor = p->name;
        result.worst_index = idx;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace mfgat::nn
