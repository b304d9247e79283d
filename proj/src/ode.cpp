#include "edunkl/ode.hpp"

#include <algorithm>
#include <cmath>

namespace edunkl {

namespace {

// Dormand-Prince coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

OdeResult integrate_dopri5(const std::function<CMat(double, const CMat&)>& rhs, const CMat& y0,
                           const OdeOptions& options) {
  OdeResult res;
  CMat y = y0;
  double s = 0.0;
  double h = options.initial_step;
  CMat k1 = rhs(s, y);
  while (s < 1.0) {
    if (res.steps + res.rejected > options.max_steps) {
      throw LabError(ErrorCode::ToleranceNotMet, "step budget exhausted before reaching the end of the path");
    }
    if (s + h > 1.0) h = 1.0 - s;
    const CMat k2 = rhs(s + c2 * h, y + h * (a21 * k1));
    const CMat k3 = rhs(s + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const CMat k4 = rhs(s + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const CMat k5 = rhs(s + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const CMat k6 = rhs(s + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const CMat ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const CMat k7 = rhs(s + h, ynew);
    const CMat err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double ratio = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double scale = options.atol + options.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
      ratio = std::max(ratio, std::abs(err(i)) / scale);
    }
    if (!std::isfinite(ratio)) ratio = 1e10;
    if (ratio <= 1.0) {
      s += h;
      y = ynew;
      k1 = k7;
      ++res.steps;
      res.local_error_sum += err.cwiseAbs().maxCoeff();
    } else {
      ++res.rejected;
    }
    const double factor = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < options.min_step && s < 1.0) {
      throw LabError(ErrorCode::StepUnderflow, "step size underflow; the path passes too close to a pole");
    }
  }
  res.value = y;
  return res;
}

}  // namespace edunkl
