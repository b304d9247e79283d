#pragma once

#include <map>
#include <memory>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "edunkl/jet.hpp"
#include "edunkl/lattice_group.hpp"
#include "edunkl/line_bundle.hpp"

namespace edunkl {

/// Torus, group and its reflection hypertori, shared by all operator code.
struct Arrangement {
  Family family;
  std::shared_ptr<const FiniteGroup> group_ptr;
  std::vector<ReflectionHypertorus> hypertori;
  std::uint64_t seed = 0;

  static Arrangement build(const Family& family, const HypertorusOptions& options = {});

  const ComplexTorus& torus() const { return family.torus; }
  const FiniteGroup& group() const { return *group_ptr; }
  int dim() const { return family.torus.dim(); }

  /// The index set of pairs (H, j), 1 <= j < n_H.
  std::vector<std::pair<std::size_t, int>> strata() const;
  std::size_t orbit_count() const;
};

/// W-invariant function on the strata, keyed by (orbit id, j).
struct ParameterSet {
  std::map<std::pair<std::size_t, int>, cplx> values;

  cplx C(std::size_t orbit, int j) const;
  cplx C(const ReflectionHypertorus& H, int j) const { return C(H.orbit_id, j); }
  /// c(H, j) = (exp(-2 pi i j / n_H) - 1) C(H, j) / 2, and 0 for j = 0.
  cplx c(const ReflectionHypertorus& H, int j) const;

  static ParameterSet zero() { return {}; }
  static ParameterSet constant(const Arrangement& arr, cplx value);
  static ParameterSet random(const Arrangement& arr, std::mt19937_64& rng, double scale = 0.5);
};

/// sum of C(H, j) f_{H,j} over (H, j) with g_H^j = g; zero unless g is a reflection.
SectionHandle assemble_F_Cg(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P, std::size_t g);

/// Coefficients of s + q . d + r : dd at a point, each with jets.
/// `second` is row-major n x n and symmetric.
struct CoefficientJets {
  Jet scalar;
  std::vector<Jet> first;
  std::vector<Jet> second;

  static CoefficientJets zero(int n);
  double max_abs(int up_to_order = 2) const;
};

struct OperatorTerm {
  int order = 0;
  std::function<CoefficientJets(const CVec&)> eval;
};

/// sum_g (s_g + q_g . d + r_g : dd) o g with (g psi)(z) = psi(g^{-1} z).
class DiffReflOperator {
 public:
  DiffReflOperator() = default;
  DiffReflOperator(std::shared_ptr<const FiniteGroup> group, int dim) : group_(std::move(group)), dim_(dim) {}

  int dim() const { return dim_; }
  int order() const;
  const FiniteGroup& group() const { return *group_; }
  const std::shared_ptr<const FiniteGroup>& group_ptr() const { return group_; }
  const std::map<std::size_t, OperatorTerm>& terms() const { return terms_; }
  const std::set<std::size_t>& poles() const { return poles_; }

  void add_term(std::size_t g, OperatorTerm term);
  void add_poles(const std::set<std::size_t>& p) { poles_.insert(p.begin(), p.end()); }

  CoefficientJets coefficients(std::size_t g, const CVec& z) const;

  /// (P psi)(z) for a scalar probe with jets.
  cplx apply(const ScalarJetFn& psi, const CVec& z) const;

 private:
  std::shared_ptr<const FiniteGroup> group_;
  int dim_ = 0;
  std::map<std::size_t, OperatorTerm> terms_;
  std::set<std::size_t> poles_;
};

DiffReflOperator group_operator(const std::shared_ptr<const FiniteGroup>& group, int dim, std::size_t g);
DiffReflOperator multiplication_operator(const std::shared_ptr<const FiniteGroup>& group, int dim,
                                         const ScalarJetFn& m, std::size_t g = 0);
DiffReflOperator derivative_operator(const std::shared_ptr<const FiniteGroup>& group, const CVec& v);

DiffReflOperator compose(const DiffReflOperator& A, const DiffReflOperator& B);
DiffReflOperator combine(cplx a, const DiffReflOperator& A, cplx b, const DiffReflOperator& B);
DiffReflOperator commutator(const DiffReflOperator& A, const DiffReflOperator& B);

/// nabla_v - sum C(H, j) <f_{H,j}, v> g_H^j on sections of L.
DiffReflOperator build_dunkl(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P, const CVec& v);

/// Max |coefficient| over all terms and points, by part.
struct CoefficientNorms {
  double scalar = 0.0;
  double first = 0.0;
  double second = 0.0;
  double max() const { return std::max({scalar, first, second}); }
};
CoefficientNorms coefficient_norms(const DiffReflOperator& P, const std::vector<CVec>& points);

/// Seeded points of the fundamental cell with transverse clearance >= margin.
std::vector<CVec> regular_points(const Arrangement& arr, std::size_t count, std::uint64_t seed, double margin = 0.05);
void require_regular(const Arrangement& arr, const std::vector<CVec>& points, double margin = 0.05);

struct CommutatorReport {
  std::map<std::size_t, double> zeroth_order;  // per group element
  double first_order = 0.0;
  double second_order = 0.0;
  double max_zeroth() const;
};

CommutatorReport commutator_coefficients(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                                         const CVec& u, const CVec& v, const std::vector<CVec>& points);

double check_equivariance(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P, std::size_t w,
                          const CVec& v, const std::vector<CVec>& points);

struct SectionIdentityReport {
  double adjoint = 0.0;           // Ad w F_{C,g} against F_{C,wgw^-1} on L^w
  double symmetry = 0.0;          // nabla_u <F, v> = nabla_v <F, u>
  double symmetry_fd_check = 0.0; // analytic derivative against finite differences
  double twisted_quadratic = 0.0; // sums with g u, g v
  double plain_quadratic = 0.0;
  double max() const { return std::max({adjoint, symmetry, twisted_quadratic, plain_quadratic}); }
};

/// `parts` selects identities 1..4: adjoint action, symmetry of the covariant
/// derivative, and the two quadratic sums over factorizations h g = k.
SectionIdentityReport check_section_identities(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                               const std::set<int>& parts, const std::vector<CVec>& points, std::uint64_t seed = 1);

/// Coefficientwise distance between D^{beta} - D^{beta'} and (beta - beta')(v).
double connection_shift_check(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                              const CVec& beta, const CVec& beta_prime, const CVec& v,
                              const std::vector<CVec>& points);

}  // namespace edunkl
