#include "edunkl/theta.hpp"

#include <cmath>

namespace edunkl {

namespace {

constexpr int kMinTerms = 8;
constexpr int kMaxTerms = 96;
constexpr double kStopRatio = 1e-18;
constexpr double kMinImTau = 0.05;
constexpr double kParameterGuard = 1e-9;
constexpr double kPoleGuard = 1e-12;

}  // namespace

ThetaEvaluator::ThetaEvaluator(cplx tau, double truncation_scale)
    : tau_(tau), truncation_scale_(truncation_scale) {
  if (!(tau.imag() >= kMinImTau)) {
    throw LabError(ErrorCode::DegenerateTransverseLattice,
                   "theta modulus must satisfy Im tau >= 0.05 (reduce the lattice first)");
  }
  if (!(truncation_scale >= 1.0)) {
    throw LabError(ErrorCode::ConfigError, "theta truncation scale must be >= 1");
  }
  nome_ = expo(tau);
  prefactor_ = 2.0 * std::exp(kI * kPi * tau / 4.0);
  signed_powers_.resize(kMaxTerms + 1);
  // q^{k(k+1)/2} built incrementally: q^{T(k)} = q^{T(k-1)} * q^k.
  cplx tri{1.0, 0.0};
  cplx qk{1.0, 0.0};
  for (int k = 0; k <= kMaxTerms; ++k) {
    if (k > 0) {
      qk *= nome_;
      tri *= qk;
    }
    signed_powers_[k] = (k % 2 == 0 ? 1.0 : -1.0) * tri;
  }
  theta_dz0_ = series(cplx{0.0, 0.0}).d1;

  // Self-check: five more terms must not move theta on |Im z| <= Im tau.
  const cplx probes[] = {cplx{0.3, 0.0}, 0.25 + 0.9 * tau, 0.4 - 0.9 * tau, 0.5 * tau};
  for (cplx z : probes) {
    const cplx a = series(z).value;
    const cplx b = series(z, 5).value;
    if (std::abs(a - b) > 1e-14 * std::max(1.0, std::abs(a))) {
      throw LabError(ErrorCode::ToleranceNotMet, "theta series truncation self-check failed");
    }
  }
}

ThetaEvaluator::Reduction ThetaEvaluator::reduce(cplx z) const {
  const double y = z.imag() / tau_.imag();
  const long long n2 = std::llround(y);
  const cplx z1 = z - static_cast<double>(n2) * tau_;
  const long long n1 = std::llround(z1.real());
  return {z1 - static_cast<double>(n1), n1, n2};
}

ComplexJet1D ThetaEvaluator::series(cplx z, int extra_terms) const {
  // sin((2k+1) pi z) = (u^{2k+1} - u^{-(2k+1)}) / 2i with u = exp(i pi z).
  const cplx u = std::exp(kI * kPi * z);
  const cplx u_inv = 1.0 / u;
  const cplx u2 = u * u;
  const cplx u2_inv = u_inv * u_inv;
  cplx up = u;
  cplx dn = u_inv;
  cplx s0{0.0, 0.0}, s1{0.0, 0.0}, s2{0.0, 0.0};
  int stop_at = -1;
  int small_run = 0;
  for (int k = 0; k <= kMaxTerms; ++k) {
    const double odd = 2.0 * k + 1.0;
    const cplx c = signed_powers_[k];
    const cplx sine = (up - dn) / (2.0 * kI);
    const cplx cosine = (up + dn) / 2.0;
    const cplx t0 = c * sine;
    s0 += t0;
    s1 += c * odd * kPi * cosine;
    s2 -= c * odd * odd * kPi * kPi * sine;
    up *= u2;
    dn *= u2_inv;
    if (stop_at < 0) {
      const double scale = std::max({std::abs(s0), std::abs(s1) / kPi, 1e-300});
      small_run = (std::abs(t0) * odd * odd < kStopRatio * scale) ? small_run + 1 : 0;
      if (k + 1 >= kMinTerms && small_run >= 2) {
        stop_at = static_cast<int>(std::ceil((k + 1) * truncation_scale_)) + extra_terms;
      }
    }
    if (stop_at >= 0 && k + 1 >= stop_at) break;
  }
  return {prefactor_ * s0, prefactor_ * s1, prefactor_ * s2};
}

ComplexJet1D ThetaEvaluator::jet(cplx z) const {
  const Reduction r = reduce(z);
  const ComplexJet1D base = series(r.z0);
  const double n2 = static_cast<double>(r.n2);
  const double sign = ((r.n1 + r.n2) % 2 == 0) ? 1.0 : -1.0;
  const cplx mult = sign * std::exp(-kI * kPi * n2 * n2 * tau_ - kTwoPiI * n2 * r.z0);
  const cplx k = -kTwoPiI * n2;
  return {mult * base.value, mult * (k * base.value + base.d1),
          mult * (k * k * base.value + 2.0 * k * base.d1 + base.d2)};
}

std::pair<cplx, cplx> ThetaEvaluator::log_derivative(cplx z) const {
  const Reduction r = reduce(z);
  const ComplexJet1D base = series(r.z0);
  const cplx l = base.d1 / base.value;
  return {l - kTwoPiI * static_cast<double>(r.n2), base.d2 / base.value - l * l};
}

double ThetaEvaluator::lattice_distance(cplx z) const {
  const Reduction r = reduce(z);
  double best = std::abs(r.z0);
  for (int a = -1; a <= 1; ++a) {
    for (int b = -1; b <= 1; ++b) {
      best = std::min(best, std::abs(r.z0 - static_cast<double>(a) - static_cast<double>(b) * tau_));
    }
  }
  return best;
}

cplx theta(cplx z, const ThetaEvaluator& ev) { return ev.theta(z); }
cplx theta_dz(cplx z, const ThetaEvaluator& ev) { return ev.theta_dz(z); }
cplx theta_dz0(const ThetaEvaluator& ev) { return ev.theta_dz0(); }

ComplexJet1D kronecker_jet(cplx t, cplx mu, const ThetaEvaluator& ev) {
  if (ev.lattice_distance(mu) < kParameterGuard) {
    throw LabError(ErrorCode::TrivialBundleParameter,
                   "Kronecker parameter lies on the period lattice (bundle is trivial)");
  }
  if (ev.lattice_distance(t) < kPoleGuard) {
    throw LabError(ErrorCode::PoleEvaluation, "Kronecker function evaluated on its pole divisor");
  }
  // F(t0 + p + q tau) = exp(-2 pi i mu q) F(t0); all t-derivatives scale alike.
  const ThetaEvaluator::Reduction r = ev.reduce(t);
  const cplx mult = expo(-mu * static_cast<double>(r.n2));
  const cplx t0 = r.z0;
  const ComplexJet1D num = ev.jet(t0 + mu);
  const ComplexJet1D den = ev.series(t0);
  const cplx c = ev.theta_dz0() / ev.theta(mu);
  const cplx inv = 1.0 / den.value;
  const cplx ld = den.d1 * inv;
  const cplx f = c * num.value * inv;
  const cplx f1 = c * (num.d1 - num.value * ld) * inv;
  const cplx f2 = c * (num.d2 - 2.0 * num.d1 * ld - num.value * den.d2 * inv + 2.0 * num.value * ld * ld) * inv;
  return {mult * f, mult * f1, mult * f2};
}

cplx kronecker_F(cplx t, cplx mu, const ThetaEvaluator& ev) { return kronecker_jet(t, mu, ev).value; }

cplx kronecker_F_dt(cplx t, cplx mu, const ThetaEvaluator& ev) { return kronecker_jet(t, mu, ev).d1; }

}  // namespace edunkl
