#pragma once

#include <memory>
#include <vector>

#include "edunkl/dunkl_ops.hpp"

namespace edunkl {

using VectorJetFn = std::function<std::vector<Jet>(const CVec&)>;

enum class ConnectionKind {
  Representation,  // components (L^*)^w, reflection terms map w to g w
  DunklSystem,     // components psi(w^{-1} z) of a joint Dunkl eigenfunction
};

/// Matrix-valued connection d + sum_k A_k dz_k on a rank-|W| bundle, in the
/// universal-cover trivialization. Horizontal sections solve dY = -A Y.
class ConnectionMatrixForm {
 public:
  struct Entry {
    std::size_t row = 0, col = 0;
    std::size_t hypertorus = 0;
    int power = 0;
    cplx coefficient;
    SectionHandle section;
    CMat pre;   // section is evaluated at pre * z
    CMat post;  // covector post^T s(pre z)
  };

  ConnectionKind kind = ConnectionKind::Representation;
  std::shared_ptr<const FiniteGroup> group;
  int dim = 0;
  std::vector<Entry> entries;
  std::vector<CVec> diagonal;              // A_v[w, w] = diagonal[w] . v
  std::vector<RVec> component_multipliers;  // automorphy of component w

  int size() const { return static_cast<int>(diagonal.size()); }

  /// A_v(z).
  CMat matrix(const CVec& v, const CVec& z) const;
  /// A_{e_k}(z) for the coordinate directions.
  std::vector<CMat> matrices(const CVec& z) const;
  /// Derivative of A_v along u at z.
  CMat derivative(const CVec& u, const CVec& v, const CVec& z) const;

  /// Identification of horizontal sections near g^{-1} x + gamma with those
  /// near x: Y_new[g w] = chi_w(gamma)^{-1} Y[w].
  CMat gluing_matrix(std::size_t g, const IVec& gamma) const;
};

ConnectionMatrixForm build_connection(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P);
ConnectionMatrixForm vectorized_dunkl_system(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P);

/// (d_v + A_v) Y at z.
CVec apply_rho_dv(const ConnectionMatrixForm& A, const CVec& v, const VectorJetFn& Y, const CVec& z);

/// |rho(d_u) rho(d_v) Y - rho(d_v) rho(d_u) Y| at z, by exact differentiation.
double mixed_partial_residual(const ConnectionMatrixForm& A, const CVec& u, const CVec& v, const VectorJetFn& Y,
                              const CVec& z);

/// max |A_{g v}(z)[g w, g w'] - A_v(g^{-1} z)[w, w']|.
double equivariance_residual(const ConnectionMatrixForm& A, std::size_t g, const CVec& v, const CVec& z);

/// phi_H = multiple * (theta'/theta)(t) alpha_H / a_H; multiple = 1 is the
/// exact logarithmic derivative of a local equation of H.
class DunklOpdamForm {
 public:
  DunklOpdamForm(const std::vector<ReflectionHypertorus>& hypertori, double multiple = 1.0);
  CVec value(std::size_t h, const CVec& z) const;

 private:
  std::vector<ReflectionHypertorus> hypertori_;
  std::vector<std::shared_ptr<const ThetaEvaluator>> theta_;
  double multiple_;
};

/// rho(D_{v, phi}) applied to a section of the single component w; returns all components.
CVec dunkl_opdam_action(const ConnectionMatrixForm& A, const Arrangement& arr, const DunklOpdamForm& phi,
                        const CVec& v, std::size_t w, const ScalarJetFn& section, const CVec& z);

struct HolomorphyReport {
  double max_laurent = 0.0;  // max |a_{-1}| over hypertori, components, radii and sections
  double max_growth = 0.0;  // sup |output| on the smallest circle over the largest
  std::size_t cases = 0;
};

/// Laurent coefficient a_{-1} of the Dunkl-Opdam action near every hypertorus,
/// on `sections_per_component` probe sections of each component. Radii are
/// expected in decreasing order.
HolomorphyReport holomorphy_check(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                                  double phi_multiple, const std::vector<double>& radii,
                                  int sections_per_component, std::uint64_t seed,
                                  std::size_t max_components = 0);

}  // namespace edunkl
