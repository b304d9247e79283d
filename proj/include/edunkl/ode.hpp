#pragma once

#include <functional>

#include "edunkl/types.hpp"

namespace edunkl {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 1e-2;
  double min_step = 1e-13;
  std::size_t max_steps = 2000000;
};

struct OdeResult {
  CMat value;
  std::size_t steps = 0;
  std::size_t rejected = 0;
  double local_error_sum = 0.0;  // sum of accepted local error estimates (max-norm)
};

/// Dormand-Prince 5(4) on dY/ds = F(s, Y) for s in [0, 1]. Throws StepUnderflow
/// or ToleranceNotMet.
OdeResult integrate_dopri5(const std::function<CMat(double, const CMat&)>& rhs, const CMat& y0,
                           const OdeOptions& options = {});

}  // namespace edunkl
