#include "dsad/gradcheck.hpp"

#include <cmath>

#include "dsad/errors.hpp"
#include "dsad/rng.hpp"

namespace dsad {

double check_gradients(const std::vector<Parameter*>& params,
                       const std::function<double(bool)>& loss,
                       const GradCheckOptions& options) {
  zero_grads(params);
  const double base = loss(true);
  if (!std::isfinite(base)) throw numeric_error("check_gradients: non-finite loss");

  Rng rng(options.seed);
  double max_rel = 0.0;
  for (Parameter* p : params) {
    const std::size_t n = p->values.size();
    if (n == 0) continue;
    const int samples = std::min<std::size_t>(options.samples_per_tensor, n);
    for (int s = 0; s < samples; ++s) {
      const auto idx = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
      const double saved = p->values.data()[idx];
      p->values.data()[idx] = saved + options.eps;
      const double up = loss(false);
      p->values.data()[idx] = saved - options.eps;
      const double down = loss(false);
      p->values.data()[idx] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw numeric_error("check_gradients: non-finite loss under perturbation");
      }
      const double fd = (up - down) / (2.0 * options.eps);
      const double analytic = p->grad.data()[idx];
      const double rel =
          std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace dsad
