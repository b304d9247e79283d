#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "edunkl/jet.hpp"
#include "edunkl/lattice_group.hpp"
#include "edunkl/theta.hpp"

namespace edunkl {

/// Degree-zero line bundle L_alpha with constant multipliers
/// chi(gamma_i) = exp(2 pi i m_i) and flat connection d + beta.
/// Sections are functions on V with s(z + gamma) = chi(gamma) s(z).
struct FlatLineBundle {
  RVec multipliers;
  CVec connection;
  bool stabilizer_free = false;
  std::vector<std::size_t> stabilizer;  // w with w.alpha = alpha in X^dual
};

FlatLineBundle make_bundle(const RVec& multipliers, const CVec& connection, const FiniteGroup& group);
void require_stabilizer_free(const FlatLineBundle& L);

/// L^w: multipliers m o lattice_matrix(w^{-1}), connection beta o w^{-1}.
FlatLineBundle bundle_pullback(const FiniteGroup& group, std::size_t w, const FlatLineBundle& L);

/// Multiplier vector of L (x) L' and of the dual bundle.
RVec tensor_multipliers(const RVec& a, const RVec& b);
RVec dual_multipliers(const RVec& a);

/// chi(gamma) = exp(2 pi i m . gamma) for gamma in lattice coordinates.
cplx automorphy_factor(const RVec& multipliers, const IVec& gamma);

/// True when the two multiplier vectors define the same point of X^dual.
bool same_bundle(const RVec& a, const RVec& b, double tol = 1e-9);

/// Parameters of the section of M = (L^{g_H^j})* (x) L pulled back from the
/// transverse curve: G(u) = exp(2 pi i a u) F(u, mu), mu = a tau_H - b.
struct DescentParameters {
  double a = 0.0;
  double b = 0.0;
  cplx mu;
  RVec bundle_multipliers;  // multipliers of M
  double tangential_defect = 0.0;  // max distance of tangential multipliers from Z
};

DescentParameters descent_parameters(const ComplexTorus& torus, const FiniteGroup& group, const FlatLineBundle& L,
                                     const ReflectionHypertorus& H, int j);

/// V*-valued meromorphic section realized on the universal cover. Component k
/// of the evaluator is <s(z), e_k> with its jet.
struct SectionHandle {
  std::function<std::vector<Jet>(const CVec&)> evaluator;
  int dim = 0;
  std::vector<std::size_t> pole_locus;  // hypertorus indices
  RVec automorphy;
  std::optional<DescentParameters> descent;
  /// Value at the lift x_H of the canonical identification of M|_H with the
  /// trivial bundle (induced by g_H^j: L|_H -> L^{g_H^j}|_H); the Poincare
  /// residue is taken relative to it.
  cplx trivialization{1.0, 0.0};

  std::vector<Jet> jets(const CVec& z) const { return evaluator(z); }
  CVec value(const CVec& z) const;
  cplx pair(const CVec& z, const CVec& v) const { return value(z).transpose() * v; }
};

SectionHandle zero_section(int dim);

struct SectionOptions {
  double theta_truncation_scale = 1.0;
  /// Build at the lift x_H + gamma instead of x_H (uniqueness cross-check).
  std::optional<IVec> base_shift;
};

/// The section f_{H,j} of (L^{g_H^j})* (x) L (x) V_H^* with simple pole on H and
/// residue 1.
SectionHandle section_f(const ComplexTorus& torus, const FiniteGroup& group, const FlatLineBundle& L,
                        const std::vector<ReflectionHypertorus>& hypertori, std::size_t h, int j,
                        const SectionOptions& options = {});

/// Poincare residue along H by trapezoidal quadrature on a transverse circle
/// of normalized radius `radius` around the generic point of H.
cplx residue_at(const SectionHandle& s, const ReflectionHypertorus& H, int nodes = 256, double radius = 0.1);

/// Unit transverse vector v_H with alpha_H(v_H) / a_H = 1.
CVec transverse_direction(const ReflectionHypertorus& H);

/// Max relative violation of s(z + gamma_i) = chi(gamma_i) s(z) over the lattice basis.
double automorphy_residual(const ComplexTorus& torus, const SectionHandle& s, const std::vector<CVec>& points);

}  // namespace edunkl

namespace edunkl {

/// Scalar function on V with jets, used as a probe section.
using ScalarJetFn = std::function<Jet(const CVec&)>;

/// Meromorphic section of the bundle with multipliers `m` on a product torus
/// (Z + tau Z)^n: prod_k G_k(z_k - shift_k), with G_k a Kronecker-type factor
/// carrying the two multipliers of coordinate k (constant when they are trivial).
/// Poles lie on z_k = shift_k mod lattice. Throws Unsupported on other lattices.
ScalarJetFn quasi_periodic_test_function(const ComplexTorus& torus, const RVec& multipliers, const CVec& shifts);

/// Modulus tau if the torus is a product (Z + tau Z)^n in the standard basis order.
std::optional<cplx> product_modulus(const ComplexTorus& torus);

}  // namespace edunkl
