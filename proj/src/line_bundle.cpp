#include "edunkl/line_bundle.hpp"

#include <cmath>

namespace edunkl {

namespace {

bool is_integral(const RVec& v, double tol) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dist_to_integer(v(i)) > tol) return false;
  }
  return true;
}

cplx apply_covector(const CVec& a, const CVec& v) {
  cplx s{0.0, 0.0};
  for (Eigen::Index k = 0; k < v.size(); ++k) s += a(k) * v(k);
  return s;
}

}  // namespace

FlatLineBundle make_bundle(const RVec& multipliers, const CVec& connection, const FiniteGroup& group) {
  if (multipliers.size() != 2 * group.dim() || connection.size() != group.dim()) {
    throw LabError(ErrorCode::ConfigError, "bundle data has the wrong dimension");
  }
  for (Eigen::Index i = 0; i < multipliers.size(); ++i) {
    if (!std::isfinite(multipliers(i))) throw LabError(ErrorCode::NotFinite, "multiplier exponent is not finite");
  }
  FlatLineBundle L;
  L.multipliers = multipliers;
  L.connection = connection;
  for (std::size_t w = 0; w < group.size(); ++w) {
    if (is_integral(dual_action(group, w, multipliers) - multipliers, 1e-9)) L.stabilizer.push_back(w);
  }
  L.stabilizer_free = L.stabilizer.size() == 1;
  return L;
}

void require_stabilizer_free(const FlatLineBundle& L) {
  if (!L.stabilizer_free) {
    throw LabError(ErrorCode::StabilizedBundle,
                   "bundle is fixed by " + std::to_string(L.stabilizer.size() - 1) + " nontrivial group element(s)");
  }
}

FlatLineBundle bundle_pullback(const FiniteGroup& group, std::size_t w, const FlatLineBundle& L) {
  FlatLineBundle out = L;
  out.multipliers = dual_action(group, w, L.multipliers);
  const CMat& winv = group[group.inverse(w)].matrix;
  out.connection = winv.transpose() * L.connection;
  // Stabilizers of w.alpha are conjugates; recompute rather than conjugate.
  out.stabilizer.clear();
  for (std::size_t u = 0; u < group.size(); ++u) {
    if (is_integral(dual_action(group, u, out.multipliers) - out.multipliers, 1e-9)) out.stabilizer.push_back(u);
  }
  return out;
}

RVec tensor_multipliers(const RVec& a, const RVec& b) { return a + b; }
RVec dual_multipliers(const RVec& a) { return -a; }

cplx automorphy_factor(const RVec& multipliers, const IVec& gamma) {
  // Reduce exponents first so large lattice vectors keep full precision.
  double phase = 0.0;
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    phase += std::fmod(multipliers(i) * static_cast<double>(gamma(i)), 1.0);
  }
  return unit_phase(phase);
}

bool same_bundle(const RVec& a, const RVec& b, double tol) { return a.size() == b.size() && is_integral(a - b, tol); }

DescentParameters descent_parameters(const ComplexTorus& torus, const FiniteGroup& group, const FlatLineBundle& L,
                                     const ReflectionHypertorus& H, int j) {
  if (j < 1 || j >= H.order) throw LabError(ErrorCode::ConfigError, "descent index outside 1..n_H-1");
  const std::size_t g = H.stabilizer[static_cast<std::size_t>(j)];
  DescentParameters d;
  d.bundle_multipliers = L.multipliers - dual_action(group, g, L.multipliers);
  const RVec& mM = d.bundle_multipliers;
  const double A = mM.dot(H.unit_lift.cast<double>());
  const double B = mM.dot(H.tau_lift.cast<double>());
  const int r = torus.real_rank();
  for (int i = 0; i < r; ++i) {
    IVec e = IVec::Zero(r);
    e(i) = 1;
    const auto [p, q] = H.transverse_lattice_coords(torus, e);
    d.tangential_defect = std::max(
        d.tangential_defect, dist_to_integer(mM(i) - static_cast<double>(p) * A - static_cast<double>(q) * B));
  }
  if (d.tangential_defect > 1e-8) {
    throw LabError(ErrorCode::NotDescendable, "multipliers do not vanish on lattice directions tangent to H");
  }
  d.a = frac01(A);
  d.b = frac01(B);
  if (d.a == 0.0 && d.b == 0.0) {
    throw LabError(ErrorCode::TrivialOnTransverseCurve, "descended bundle is trivial on the transverse curve");
  }
  d.mu = d.a * H.modulus - d.b;
  return d;
}

CVec SectionHandle::value(const CVec& z) const {
  const auto j = evaluator(z);
  CVec out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) out(static_cast<Eigen::Index>(k)) = j[k].value;
  return out;
}

SectionHandle zero_section(int dim) {
  SectionHandle s;
  s.dim = dim;
  s.evaluator = [dim](const CVec&) { return std::vector<Jet>(static_cast<std::size_t>(dim), Jet::zero(dim)); };
  return s;
}

SectionHandle section_f(const ComplexTorus& torus, const FiniteGroup& group, const FlatLineBundle& L,
                        const std::vector<ReflectionHypertorus>& hypertori, std::size_t h, int j,
                        const SectionOptions& options) {
  const ReflectionHypertorus& H = hypertori.at(h);
  const DescentParameters d = descent_parameters(torus, group, L, H, j);
  const int n = torus.dim();

  CVec base = H.base_point;
  if (options.base_shift) base += torus.lattice_vector(*options.base_shift);

  // g^{-j} fixes the base point modulo Gamma; the induced map on fibres of L
  // over this lift is multiplication by chi_L(g^{-j} x - x).
  const std::size_t ginv = group.inverse(H.stabilizer[static_cast<std::size_t>(j)]);
  const auto [gamma0, resid] = torus.nearest_lattice_coords(group[ginv].matrix * base - base);
  if (resid > 1e-8) throw LabError(ErrorCode::NotDescendable, "base point is not fixed modulo the lattice");
  const cplx kappa = std::conj(automorphy_factor(L.multipliers, gamma0));

  auto theta = std::make_shared<const ThetaEvaluator>(H.modulus, options.theta_truncation_scale);
  const CVec l = H.normal / H.scale;  // t = l . (z - base)
  const double a = d.a;
  const cplx mu = d.mu;

  SectionHandle s;
  s.dim = n;
  s.pole_locus = {h};
  s.automorphy = d.bundle_multipliers;
  s.descent = d;
  s.trivialization = kappa;
  s.evaluator = [theta, l, base, a, mu, kappa, n](const CVec& z) {
    const cplx t = apply_covector(l, z - base);
    const ComplexJet1D F = kronecker_jet(t, mu, *theta);
    const cplx c = kTwoPiI * a;
    const cplx e = kappa * expo(a * t);
    const cplx g0 = e * F.value;
    const cplx g1 = e * (c * F.value + F.d1);
    const cplx g2 = e * (c * c * F.value + 2.0 * c * F.d1 + F.d2);
    const Jet G = along_linear_form(g0, g1, g2, l);
    std::vector<Jet> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = G * l(k);
    return out;
  };
  return s;
}

CVec transverse_direction(const ReflectionHypertorus& H) {
  // alpha(v) = sum normal_k v_k; choose v parallel to conj(normal).
  const CVec v = H.normal.conjugate();
  const cplx av = apply_covector(H.normal, v);
  return v * (H.scale / av);
}

cplx residue_at(const SectionHandle& s, const ReflectionHypertorus& H, int nodes, double radius) {
  const CVec v = transverse_direction(H);
  cplx sum{0.0, 0.0};
  for (int k = 0; k < nodes; ++k) {
    const double th = 2.0 * kPi * k / nodes;
    const cplx e = std::polar(radius, th);
    const CVec z = H.generic_point + e * v;
    const CVec dz = (kI * e) * v;
    sum += apply_covector(s.value(z), dz);
  }
  // (1 / 2 pi i) * sum * (2 pi / nodes)
  return sum / (kI * static_cast<double>(nodes)) / s.trivialization;
}

double automorphy_residual(const ComplexTorus& torus, const SectionHandle& s, const std::vector<CVec>& points) {
  double worst = 0.0;
  const int r = torus.real_rank();
  for (const CVec& z : points) {
    const CVec f0 = s.value(z);
    const double scale = std::max(f0.norm(), 1e-300);
    for (int i = 0; i < r; ++i) {
      IVec e = IVec::Zero(r);
      e(i) = 1;
      const CVec f1 = s.value(z + torus.lattice_vector(e));
      const CVec expected = automorphy_factor(s.automorphy, e) * f0;
      worst = std::max(worst, (f1 - expected).norm() / scale);
    }
  }
  return worst;
}

}  // namespace edunkl

namespace edunkl {

std::optional<cplx> product_modulus(const ComplexTorus& torus) {
  const int n = torus.dim();
  const auto& b = torus.lattice_basis();
  const cplx tau = b[1](0);
  for (int k = 0; k < n; ++k) {
    CVec e = CVec::Zero(n);
    e(k) = 1.0;
    if ((b[2 * k] - e).norm() > 1e-12 || (b[2 * k + 1] - tau * e).norm() > 1e-12) return std::nullopt;
  }
  return tau;
}

ScalarJetFn quasi_periodic_test_function(const ComplexTorus& torus, const RVec& multipliers, const CVec& shifts) {
  const auto tau = product_modulus(torus);
  if (!tau) throw LabError(ErrorCode::Unsupported, "test sections need a product lattice (Z + tau Z)^n");
  const int n = torus.dim();
  auto theta = std::make_shared<const ThetaEvaluator>(*tau);
  struct Factor {
    double a;
    cplx mu;
    bool trivial;
  };
  std::vector<Factor> factors;
  for (int k = 0; k < n; ++k) {
    const double a = frac01(multipliers(2 * k));
    const double b = frac01(multipliers(2 * k + 1));
    factors.push_back({a, a * *tau - b, a == 0.0 && b == 0.0});
  }
  return [theta, factors, shifts, n](const CVec& z) {
    Jet out = Jet::constant(1.0, n);
    for (int k = 0; k < n; ++k) {
      const Factor& f = factors[static_cast<std::size_t>(k)];
      if (f.trivial) continue;
      const cplx u = z(k) - shifts(k);
      const ComplexJet1D F = kronecker_jet(u, f.mu, *theta);
      const cplx c = kTwoPiI * f.a;
      const cplx e = expo(f.a * u);
      CVec l = CVec::Zero(n);
      l(k) = 1.0;
      out = out * along_linear_form(e * F.value, e * (c * F.value + F.d1), e * (c * c * F.value + 2.0 * c * F.d1 + F.d2), l);
    }
    return out;
  };
}

}  // namespace edunkl
