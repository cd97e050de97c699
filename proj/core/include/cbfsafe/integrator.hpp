#pragma once

#include "cbfsafe/cbf_core.hpp"

#include <functional>

namespace cbfsafe {

struct IntegratorOptions {
  double abs_tol = 1e-9;
  double rel_tol = 1e-7;
  double min_step = 1e-12;
  int max_steps = 200000;
};

struct IntegrationStats {
  int accepted = 0;
  int rejected = 0;
};

using OdeRhs = std::function<Vector(double, const Vector&)>;

/// Adaptive Dormand-Prince 5(4) from t0 to t1, returning the endpoint only.
/// Throws IntegrationFailure when the step size drops below `min_step`.
Vector integrate_dopri5(const OdeRhs& rhs, double t0, double t1, const Vector& y0,
                        const IntegratorOptions& opts = {}, IntegrationStats* stats = nullptr);

}  // namespace cbfsafe
