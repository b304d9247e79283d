#pragma once

#include <vector>

#include "edunkl/types.hpp"

namespace edunkl {

/// Value and first two z-derivatives of a holomorphic function.
struct ComplexJet1D {
  cplx value;
  cplx d1;
  cplx d2;
};

/// Odd Jacobi theta function theta(z|tau) with
///   theta(z+1) = -theta(z),  theta(z+tau) = -exp(-pi i tau - 2 pi i z) theta(z),
/// evaluated by its sine q-series after reducing z into the fundamental cell.
///
/// The moduli seen here are Lagrange-reduced upstream; construction rejects
/// Im tau < 0.05 where the series stops being usefully geometric.
class ThetaEvaluator {
 public:
  explicit ThetaEvaluator(cplx tau, double truncation_scale = 1.0);

  cplx modulus() const { return tau_; }
  cplx nome() const { return nome_; }
  double truncation_scale() const { return truncation_scale_; }

  cplx theta(cplx z) const { return jet(z).value; }
  cplx theta_dz(cplx z) const { return jet(z).d1; }
  cplx theta_dz0() const { return theta_dz0_; }

  /// theta, theta', theta'' at z, with the argument reduction multiplier applied.
  ComplexJet1D jet(cplx z) const;

  /// Logarithmic derivative theta'/theta and its derivative at z.
  /// Reduction only shifts these by the constant -2 pi i n2, so they stay finite
  /// for any |z| away from the lattice.
  std::pair<cplx, cplx> log_derivative(cplx z) const;

  /// Series for z already in the reduced cell; `extra_terms` adds terms past
  /// the stopping rule (used for the truncation self-check).
  ComplexJet1D series(cplx z, int extra_terms = 0) const;

  /// Distance from z to the nearest point of Z + tau Z.
  double lattice_distance(cplx z) const;

  /// Decomposes z = z0 + n1 + n2 tau with z0 in the centered cell.
  struct Reduction {
    cplx z0;
    long long n1;
    long long n2;
  };
  Reduction reduce(cplx z) const;

 private:
  cplx tau_;
  cplx nome_;
  cplx prefactor_;  // 2 exp(pi i tau / 4)
  double truncation_scale_;
  std::vector<cplx> signed_powers_;  // (-1)^k q^{k(k+1)/2}
  cplx theta_dz0_;
};

cplx theta(cplx z, const ThetaEvaluator& ev);
cplx theta_dz(cplx z, const ThetaEvaluator& ev);
cplx theta_dz0(const ThetaEvaluator& ev);

/// Kronecker function F(t, mu) = theta'(0) theta(t + mu) / (theta(t) theta(mu)).
/// F(t+1) = F(t), F(t+tau) = exp(-2 pi i mu) F(t), residue 1 at t = 0.
cplx kronecker_F(cplx t, cplx mu, const ThetaEvaluator& ev);
cplx kronecker_F_dt(cplx t, cplx mu, const ThetaEvaluator& ev);
ComplexJet1D kronecker_jet(cplx t, cplx mu, const ThetaEvaluator& ev);

}  // namespace edunkl
