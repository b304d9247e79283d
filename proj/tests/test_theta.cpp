#include <random>

#include "doctest.h"
#include "edunkl/theta.hpp"

using namespace edunkl;

namespace {

// Unreduced sine series, summed far past convergence; independent of the
// evaluator's reduction and stopping rule.
cplx raw_theta(cplx z, cplx tau, int terms = 80) {
  cplx s{0.0, 0.0};
  for (int k = 0; k < terms; ++k) {
    const double h = k + 0.5;
    const cplx a = kI * kPi * tau * h * h;
    const cplx b = kI * kPi * (2.0 * k + 1.0) * z;
    if ((a + b).real() < -700.0 && (a - b).real() < -700.0) break;
    s += (k % 2 == 0 ? 1.0 : -1.0) * (std::exp(a + b) - std::exp(a - b)) / (2.0 * kI);
  }
  return 2.0 * s;
}

cplx dedekind_eta(cplx tau) {
  const cplx q = expo(tau);
  cplx prod{1.0, 0.0};
  cplx qn = q;
  for (int n = 1; n < 400; ++n) {
    prod *= 1.0 - qn;
    qn *= q;
  }
  return expo(tau / 24.0) * prod;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

const cplx kModuli[] = {cplx{0.0, 1.0}, unit_phase(1.0 / 3.0), cplx{0.0, 2.0}};

}  // namespace

TEST_CASE("theta is odd and vanishes at the origin") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (cplx tau : kModuli) {
    ThetaEvaluator ev(tau);
    CHECK(std::abs(ev.theta(0.0)) == doctest::Approx(0.0));
    for (int i = 0; i < 20; ++i) {
      const cplx z{u(rng), u(rng) * tau.imag()};
      CHECK(rel(ev.theta(-z), -ev.theta(z)) < 1e-12);
      CHECK(rel(ev.theta_dz(-z), ev.theta_dz(z)) < 1e-11);
    }
  }
}

TEST_CASE("theta quasi-periodicity against the unreduced series") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (cplx tau : kModuli) {
    ThetaEvaluator ev(tau);
    for (int i = 0; i < 20; ++i) {
      const cplx z = u(rng) + u(rng) * tau;
      CHECK(rel(ev.theta(z), raw_theta(z, tau)) < 1e-12);
      CHECK(rel(ev.theta(z + 1.0), -raw_theta(z, tau)) < 1e-11);
      const cplx mult = -std::exp(-kI * kPi * tau - kTwoPiI * z);
      CHECK(rel(ev.theta(z + tau), mult * raw_theta(z, tau)) < 1e-11);
      CHECK(rel(raw_theta(z + tau, tau), mult * raw_theta(z, tau)) < 1e-11);
    }
  }
}

TEST_CASE("theta'(0|i) equals 2 pi eta(i)^3") {
  ThetaEvaluator ev(cplx{0.0, 1.0});
  const cplx eta = dedekind_eta(cplx{0.0, 1.0});
  // Closed form eta(i) = Gamma(1/4) / (2 pi^{3/4}).
  CHECK(std::abs(eta - std::tgamma(0.25) / (2.0 * std::pow(kPi, 0.75))) < 1e-13);
  CHECK(std::abs(ev.theta_dz0() - 2.0 * kPi * eta * eta * eta) < 1e-10);
  for (cplx tau : kModuli) {
    ThetaEvaluator e(tau);
    const cplx et = dedekind_eta(tau);
    CHECK(std::abs(e.theta_dz0() - 2.0 * kPi * et * et * et) < 1e-10);
  }
}

TEST_CASE("theta derivative matches a central difference") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (cplx tau : kModuli) {
    ThetaEvaluator ev(tau);
    const double h = 1e-5;
    for (int i = 0; i < 20; ++i) {
      const cplx z = u(rng) + u(rng) * tau;
      const cplx fd = (ev.theta(z + h) - ev.theta(z - h)) / (2.0 * h);
      CHECK(std::abs(fd - ev.theta_dz(z)) < 1e-8 * std::max(1.0, std::abs(ev.theta_dz(z))));
      const cplx fd2 = (ev.theta_dz(z + h) - ev.theta_dz(z - h)) / (2.0 * h);
      CHECK(std::abs(fd2 - ev.jet(z).d2) < 1e-7 * std::max(1.0, std::abs(ev.jet(z).d2)));
    }
  }
}

TEST_CASE("theta rejects unreduced moduli and stays put under doubled truncation") {
  CHECK_THROWS_AS(ThetaEvaluator(cplx{0.3, 0.01}), LabError);
  ThetaEvaluator a(cplx{0.1, 0.9});
  ThetaEvaluator b(cplx{0.1, 0.9}, 2.0);
  for (cplx z : {cplx{0.2, 0.1}, cplx{-0.4, 0.45}, cplx{3.3, -2.0}}) {
    CHECK(rel(a.theta(z), b.theta(z)) < 1e-13);
  }
}

TEST_CASE("Kronecker function residue, parity and quasi-periodicity") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (cplx tau : kModuli) {
    ThetaEvaluator ev(tau);
    const cplx mu = 0.31 + 0.27 * tau;
    for (int k = 0; k < 8; ++k) {
      const cplx t = 1e-4 * std::polar(1.0, 2.0 * kPi * k / 8.0);
      CHECK(std::abs(t * kronecker_F(t, mu, ev) - 1.0) < 1e-3);
    }
    // t F(t) = 1 + a t + b t^2 + ...: the +-t average removes odd orders, and
    // Richardson over |t| in {1e-3, 1e-4} removes the t^2 term.
    auto even = [&](cplx t, auto&& g) { return 0.5 * (g(t) + g(-t)); };
    auto tf = [&](cplx t) { return t * kronecker_F(t, mu, ev); };
    auto ttd = [&](cplx t) { return t * t * kronecker_F_dt(t, mu, ev); };
    const cplx t1 = 1e-3 * std::polar(1.0, 0.4);
    const cplx t2 = 1e-4 * std::polar(1.0, 0.4);
    CHECK(std::abs((100.0 * even(t2, tf) - even(t1, tf)) / 99.0 - 1.0) < 1e-8);
    CHECK(std::abs((100.0 * even(t2, ttd) - even(t1, ttd)) / 99.0 + 1.0) < 1e-8);

    for (int i = 0; i < 20; ++i) {
      const cplx t = u(rng) + u(rng) * tau;
      const cplx m = u(rng) + u(rng) * tau;
      if (ev.lattice_distance(t) < 0.05 || ev.lattice_distance(m) < 0.05) continue;
      const cplx f = kronecker_F(t, m, ev);
      CHECK(rel(kronecker_F(-t, -m, ev), -f) < 1e-11);
      CHECK(rel(kronecker_F(t + 1.0, m, ev), f) < 1e-10);
      CHECK(rel(kronecker_F(t + tau, m, ev) * expo(m), f) < 1e-10);
      const double h = 1e-6;
      const cplx fd = (kronecker_F(t + h, m, ev) - kronecker_F(t - h, m, ev)) / (2.0 * h);
      const cplx d = kronecker_F_dt(t, m, ev);
      CHECK(std::abs(fd - d) < 1e-7 * std::max(1.0, std::abs(d)));
      CHECK(rel(kronecker_F_dt(t + 1.0, m, ev), d) < 1e-10);
      const cplx fd2 = (kronecker_F_dt(t + h, m, ev) - kronecker_F_dt(t - h, m, ev)) / (2.0 * h);
      const cplx d2 = kronecker_jet(t, m, ev).d2;
      CHECK(std::abs(fd2 - d2) < 1e-6 * std::max(1.0, std::abs(d2)));
    }
  }
}

TEST_CASE("Kronecker guards") {
  ThetaEvaluator ev(cplx{0.0, 1.0});
  CHECK_THROWS_WITH_AS(kronecker_F(0.3, cplx{1.0, 1.0}, ev), doctest::Contains("TrivialBundleParameter"), LabError);
  CHECK_THROWS_WITH_AS(kronecker_F(cplx{0.0, 1.0}, 0.3, ev), doctest::Contains("PoleEvaluation"), LabError);
  // Bounded on a grid away from the pole.
  double maxabs = 0.0;
  for (int a = 0; a < 10; ++a)
    for (int b = 0; b < 10; ++b) {
      const cplx t{a / 10.0 - 0.45, b / 10.0 - 0.45};
      if (ev.lattice_distance(t) < 0.05) continue;
      maxabs = std::max(maxabs, std::abs(kronecker_F(t, cplx{0.2, 0.3}, ev)));
    }
  CHECK(maxabs < 1e3);
}
