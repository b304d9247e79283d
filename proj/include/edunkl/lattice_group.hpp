#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edunkl/types.hpp"

namespace edunkl {

/// Realification C^n -> R^{2n}, (z) -> (Re z, Im z).
RVec realify(const CVec& z);
CVec complexify(const RVec& x);
RMat realify(const CMat& M);

/// X = V / Gamma for V = C^n and a full-rank lattice given by 2n real-independent
/// generators. A point of the dual torus is carried by its multiplier vector
/// m_i = omega(alpha, gamma_i) = Im alpha(gamma_i).
class ComplexTorus {
 public:
  ComplexTorus() = default;
  explicit ComplexTorus(std::vector<CVec> lattice_basis);

  int dim() const { return n_; }
  int real_rank() const { return 2 * n_; }
  const std::vector<CVec>& lattice_basis() const { return basis_; }
  const RMat& real_basis() const { return real_basis_; }

  /// Real coordinates y with z = sum_i y_i gamma_i.
  RVec lattice_coords(const CVec& z) const;
  CVec point(const RVec& coords) const;
  CVec lattice_vector(const IVec& coords) const;

  /// Multiplier vector of the antilinear form alpha(v) = sum_k conj(a_k) v_k.
  RVec multipliers_of(const CVec& a) const;

  /// omega(alpha, v) for alpha given by its multipliers: the real-linear
  /// functional with prescribed values on the lattice basis.
  double omega(const RVec& multipliers, const CVec& v) const;

  /// Nearest integer vector to the lattice coordinates and the residual.
  std::pair<IVec, double> nearest_lattice_coords(const CVec& z) const;

 private:
  int n_ = 0;
  std::vector<CVec> basis_;
  RMat real_basis_;
  RMat real_basis_inv_;
};

struct GroupElement {
  CMat matrix;
  IMat lattice_matrix;  // matrix * gamma_i = sum_k lattice_matrix(k, i) gamma_k
  int order = 1;
  cplx det{1.0, 0.0};
};

/// Extract the integer lattice action of a complex matrix, or throw NotLatticePreserving.
IMat lattice_action(const CMat& matrix, const ComplexTorus& torus);

class FiniteGroup {
 public:
  FiniteGroup() = default;
  FiniteGroup(std::vector<GroupElement> elements, std::vector<std::vector<std::size_t>> mult);

  std::size_t size() const { return elements_.size(); }
  int dim() const { return elements_.empty() ? 0 : static_cast<int>(elements_[0].matrix.rows()); }
  const GroupElement& operator[](std::size_t i) const { return elements_[i]; }
  const std::vector<GroupElement>& elements() const { return elements_; }

  std::size_t multiply(std::size_t a, std::size_t b) const { return mult_[a][b]; }
  std::size_t inverse(std::size_t a) const { return inverse_[a]; }
  std::size_t power(std::size_t a, int k) const;
  std::optional<std::size_t> index_of(const IMat& lattice_matrix) const;

 private:
  std::vector<GroupElement> elements_;
  std::vector<std::vector<std::size_t>> mult_;
  std::vector<std::size_t> inverse_;
  std::map<std::vector<long long>, std::size_t> by_key_;
};

FiniteGroup group_closure(const std::vector<CMat>& generators, const ComplexTorus& torus,
                          std::size_t max_order = 10000);

/// Indices of the elements fixing a complex hyperplane pointwise.
std::vector<std::size_t> find_reflections(const FiniteGroup& group);

struct ReflectionHypertorus {
  std::size_t generator = 0;  // g_H, det = exp(2 pi i / n_H)
  int order = 1;              // n_H
  CVec normal;                // alpha_H: alpha_H(v) = sum_k normal_k v_k
  CVec base_point;            // x_H
  cplx scale;                 // a_H: alpha_H(Gamma) = a_H (Z + tau_H Z)
  cplx modulus;               // tau_H, Lagrange-reduced
  IVec unit_lift;             // lattice coords of a vector mapping to a_H
  IVec tau_lift;              // lattice coords of a vector mapping to a_H tau_H
  std::vector<CVec> tangent_basis;  // real spanning set of V^{g_H}
  CVec generic_point;         // x_H + t0, t0 seeded in V^{g_H}
  std::vector<std::size_t> stabilizer;  // W_H as powers of g_H: stabilizer[j] = g_H^j
  std::size_t orbit_id = 0;
  std::array<double, 2> key_coords{};    // base point in (1, tau_H) coordinates mod 1

  /// Integer (p, q) with alpha_H(gamma)/a_H = p + q tau_H for a lattice vector.
  std::pair<long long, long long> transverse_lattice_coords(const ComplexTorus& torus,
                                                            const IVec& gamma) const;
};

struct HypertorusOptions {
  std::uint64_t seed = 0x5eedULL;
};

std::vector<ReflectionHypertorus> enumerate_hypertori(const FiniteGroup& group, const ComplexTorus& torus,
                                                      const HypertorusOptions& options = {});

/// Index of the hypertorus w.H in `hypertori`.
std::size_t image_hypertorus(const std::vector<ReflectionHypertorus>& hypertori, const FiniteGroup& group,
                             const ComplexTorus& torus, std::size_t w, std::size_t h);

/// Normalized transverse coordinate t = alpha_H(z - x_H) / a_H.
cplx transverse_coordinate(const ReflectionHypertorus& H, const CVec& z);

/// Distance from t(z) to Z + tau_H Z.
double transverse_clearance(const ReflectionHypertorus& H, const CVec& z);
double min_clearance(const std::vector<ReflectionHypertorus>& hypertori, const CVec& z);

/// Multiplier vector of w.alpha: m o lattice_matrix(w^{-1}).
RVec dual_action(const FiniteGroup& group, std::size_t w, const RVec& multipliers);

/// A torus together with lattice-preserving generators.
struct Family {
  std::string name;
  ComplexTorus torus;
  std::vector<CMat> generators;
};

cplx triangular_modulus();
Family cyclic_family(int ell, std::optional<cplx> modulus = std::nullopt);
Family symmetric_family(int n, cplx modulus = cplx{0.0, 1.0});
Family wreath_family(int n, int ell, std::optional<cplx> modulus = std::nullopt);
Family custom_family(const std::vector<CMat>& generators, const std::vector<CVec>& lattice_basis);

/// Lattice E^n = (Z + tau Z)^n with basis ordered (e_1, tau e_1, e_2, tau e_2, ...).
ComplexTorus product_torus(int n, cplx modulus);

}  // namespace edunkl
