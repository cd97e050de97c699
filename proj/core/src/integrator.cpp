#include "cbfsafe/integrator.hpp"

#include "cbfsafe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cbfsafe {

namespace {

// Dormand & Prince (1980) RK5(4)7M tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b_hat (4th-order embedded weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const Vector& err, const Vector& y0, const Vector& y1,
                  const IntegratorOptions& o) {
  const Eigen::Index n = err.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sc = o.abs_tol + o.rel_tol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double r = err(i) / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(n, 1)));
}

double initial_step(const OdeRhs& rhs, double t0, const Vector& y0, const Vector& f0,
                    double span, const IntegratorOptions& o) {
  Vector sc = (o.abs_tol + o.rel_tol * y0.array().abs()).matrix();
  const double n = static_cast<double>(std::max<Eigen::Index>(y0.size(), 1));
  const double d0 = std::sqrt((y0.array() / sc.array()).square().sum() / n);
  const double d1 = std::sqrt((f0.array() / sc.array()).square().sum() / n);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  Vector f1;
  try {
    f1 = rhs(t0 + h0, y0 + h0 * f0);
  } catch (const FeasibilityLoss&) {
    return std::min(h0 * 1e-3, span);
  }
  const double d2 = std::sqrt(((f1 - f0).array() / sc.array()).square().sum() / n) / h0;
  const double h1 = (std::max(d1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                 : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
  return std::min({100 * h0, h1, span});
}

}  // namespace

Vector integrate_dopri5(const OdeRhs& rhs, double t0, double t1, const Vector& y0,
                        const IntegratorOptions& opts, IntegrationStats* stats) {
  if (!(t1 >= t0)) throw ConfigError("integration span must be nonnegative");
  Vector y = y0;
  if (t1 == t0) return y;

  constexpr double safety = 0.9, min_factor = 0.2, max_factor = 10.0;
  const double span = t1 - t0;
  double t = t0;
  Vector k1 = rhs(t, y);
  double h = initial_step(rhs, t0, y0, k1, span, opts);
  bool last_rejected = false;
  int steps = 0;

  while (t < t1) {
    if (++steps > opts.max_steps) {
      std::ostringstream os;
      os << "integrator exceeded " << opts.max_steps << " steps at t = " << t;
      throw IntegrationFailure(os.str(), t);
    }
    if (h < opts.min_step) {
      std::ostringstream os;
      os << "integrator step size underflow (h = " << h << ") at t = " << t;
      throw IntegrationFailure(os.str(), t);
    }
    bool final_step = false;
    if (t + h >= t1 || t1 - (t + h) < opts.min_step) {
      h = t1 - t;
      final_step = true;
    }

    Vector k2, k3, k4, k5, k6, k7, y_new;
    const double t_new = final_step ? t1 : t + h;
    try {
      k2 = rhs(t + c2 * h, y + h * (a21 * k1));
      k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
      k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = rhs(t_new, y_new);
    } catch (const FeasibilityLoss&) {
      // A trial stage left the region where the right-hand side is defined.
      if (stats) ++stats->rejected;
      if (h * min_factor < opts.min_step) throw;
      h *= min_factor;
      last_rejected = true;
      continue;
    }

    const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, y_new, opts);

    if (en <= 1.0 && y_new.allFinite()) {
      t = t_new;
      y = y_new;
      k1 = k7;
      if (stats) ++stats->accepted;
      double factor = en == 0.0 ? max_factor : safety * std::pow(en, -0.2);
      factor = std::clamp(factor, min_factor, max_factor);
      if (last_rejected) factor = std::min(factor, 1.0);
      h *= factor;
      last_rejected = false;
    } else {
      if (stats) ++stats->rejected;
      const double factor =
          y_new.allFinite() ? std::max(min_factor, safety * std::pow(en, -0.2)) : min_factor;
      h *= factor;
      last_rejected = true;
    }
  }
  return y;
}

}  // namespace cbfsafe
