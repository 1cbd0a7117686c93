#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dsad/layers.hpp"

namespace dsad {

struct GradCheckOptions {
  double eps = 1e-5;
  int samples_per_tensor = 5;  // random entries checked per parameter tensor
  std::uint64_t seed = 0;
};

// Compares analytic gradients against central finite differences.
//
// `loss(true)` must run forward + backward and accumulate parameter
// gradients (the checker zeroes them first); `loss(false)` must evaluate
// the same scalar objective without touching gradients. Returns the max of
// |analytic - fd| / max(|analytic|, |fd|, 1e-8) over the sampled entries.
double check_gradients(const std::vector<Parameter*>& params,
                       const std::function<double(bool)>& loss,
                       const GradCheckOptions& options = {});

}  // namespace dsad
