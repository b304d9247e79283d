#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace edunkl {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using IVec = Eigen::Matrix<long long, Eigen::Dynamic, 1>;
using IMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};
inline constexpr cplx kTwoPiI{0.0, 2.0 * std::numbers::pi};

enum class ErrorCode {
  NotLatticePreserving,
  NotFinite,
  NonCyclicStabilizer,
  DegenerateTransverseLattice,
  TrivialBundleParameter,
  PoleEvaluation,
  StabilizedBundle,
  NotDescendable,
  TrivialOnTransverseCurve,
  OrderOverflow,
  SamplePointTooClose,
  BasepointOnHypertorus,
  StepUnderflow,
  ToleranceNotMet,
  Unsupported,
  ConfigError,
};

const char* to_string(ErrorCode code);

class LabError : public std::runtime_error {
 public:
  LabError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// e(x) = exp(2 pi i x)
inline cplx unit_phase(double x) { return std::polar(1.0, 2.0 * kPi * x); }
inline cplx expo(cplx x) { return std::exp(kTwoPiI * x); }

// Fractional part in [0, 1); values within `snap` of an integer map to 0.
inline double frac01(double x, double snap = 1e-12) {
  double f = x - std::floor(x);
  if (f > 1.0 - snap || f < snap) f = 0.0;
  return f;
}

inline double dist_to_integer(double x) { return std::abs(x - std::round(x)); }

}  // namespace edunkl
