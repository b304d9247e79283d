#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edunkl/connection.hpp"
#include "edunkl/ode.hpp"

namespace edunkl {

/// Line segment a -> b, or the arc center + radius e^{i theta} direction.
struct Segment {
  enum class Kind { Line, Arc } kind = Kind::Line;
  CVec a, b;
  CVec center, direction;
  double radius = 0.0, theta0 = 0.0, theta1 = 0.0;

  static Segment line(CVec from, CVec to);
  static Segment arc(CVec center, CVec direction, double radius, double theta0, double theta1);

  CVec point(double s) const;
  CVec velocity(double s) const;
  Segment reversed() const;
  Segment mapped(const CMat& M, const CVec& shift) const;  // image under z -> M z + shift
};

/// Path from x to w^{-1} x + gamma; an element of the orbifold fundamental group.
struct PathSpec {
  std::vector<Segment> segments;
  std::size_t endpoint_group_element = 0;
  IVec endpoint_lattice;
  double clearance = 0.0;
  std::string label;

  CVec start() const { return segments.front().point(0.0); }
  CVec end() const { return segments.back().point(1.0); }
};

/// gamma1 o gamma2: gamma2 first, then the image of gamma1 under z -> w2^{-1} z + gamma2.
PathSpec compose_paths(const FiniteGroup& group, const ComplexTorus& torus, const PathSpec& first_applied_last,
                       const PathSpec& second);
PathSpec inverse_path(const FiniteGroup& group, const ComplexTorus& torus, const PathSpec& p);

/// Sampled minimum transverse clearance along a path.
double path_clearance(const std::vector<ReflectionHypertorus>& hypertori, const PathSpec& p, double spacing = 0.004);
void validate_path(const Arrangement& arr, const PathSpec& p, double min_clearance = 0.05);

/// Closed parallelogram through a seeded regular point, spanned by two random
/// directions of length `size`; it lies in a ball free of hypertori.
PathSpec contractible_rectangle(const Arrangement& arr, std::uint64_t seed, double size = 0.3);

struct BraidOptions {
  double arc_radius = 0.1;
  double staging_angle_offset = 0.0;  // rotate the staging point around the lift (homotopic variant)
  double min_clearance = 0.05;
  std::uint64_t seed = 0xb1a5;
};

struct BraidGenerators {
  CVec basepoint;
  std::vector<PathSpec> translations;        // one per lattice basis vector
  std::vector<PathSpec> hypertorus_loops;     // one per orbit, in orbit order
  std::vector<std::size_t> loop_hypertorus;   // representative used for each loop
};

/// Seeded basepoint with trivial stabilizer and clearance >= 0.1.
CVec default_basepoint(const Arrangement& arr, std::uint64_t seed = 0xba5e);

BraidGenerators braid_generators(const Arrangement& arr, const CVec& basepoint, const BraidOptions& options = {});

/// Loop around one particular hypertorus (used for homotopy checks).
PathSpec hypertorus_loop(const Arrangement& arr, const CVec& basepoint, std::size_t h, const BraidOptions& options = {});

struct MonodromyMatrix {
  CMat matrix;
  double error_estimate = 0.0;
  std::size_t steps = 0;
  double condition_number = 0.0;  // of the fundamental solution at the end of the path
};

struct TransportOptions {
  OdeOptions ode;
  bool estimate_error = true;  // rerun at half tolerance
};

MonodromyMatrix transport(const ConnectionMatrixForm& A, const Arrangement& arr, const PathSpec& path,
                          const TransportOptions& options = {});

/// tau_{H,m} = -(2 pi i / n_H) sum_j C(H, j) exp(-2 pi i j m / n_H), m = 1..n_H.
std::vector<cplx> tau_from_C(const ParameterSet& P, const ReflectionHypertorus& H);
std::vector<cplx> predicted_eigenvalues(const ParameterSet& P, const ReflectionHypertorus& H);

struct HeckeOrbitReport {
  std::size_t orbit = 0;
  int order = 1;
  std::vector<cplx> tau;
  std::vector<cplx> predicted;
  std::vector<cplx> observed;
  std::vector<int> multiplicities;  // observed count per predicted value
  double residual = 0.0;            // ||prod (T - lambda_m)|| / ||T||^n, stated convention
  /// Same residual for the convention variants a mismatch would point to:
  /// "inverse-loop" (T^{-1}), "tau-sign" (tau -> -tau), "conjugate-roots" (roots of unity inverted).
  std::map<std::string, double> variant_residuals;
  double eigenvalue_distance = 0.0; // max distance of observed to assigned predicted
  bool collision = false;
  double det_residual = 0.0;
  std::string orientation;  // "as-stated", a variant name, or "unmatched"
};

struct HeckeReport {
  std::vector<HeckeOrbitReport> orbits;
  double max_residual() const;
};

HeckeReport hecke_check(const ParameterSet& P, const Arrangement& arr, const BraidGenerators& gens,
                        const std::vector<MonodromyMatrix>& loop_monodromy, double match_tol = 1e-5);

/// Word letters: generator index (translations first, then loops), negative
/// value -(i+1) for the inverse.
using Word = std::vector<int>;

PathSpec word_path(const Arrangement& arr, const BraidGenerators& gens, const Word& word);
CVec word_start(const BraidGenerators& gens);

struct DualityEntry {
  Word word;
  cplx trace_rep;
  cplx trace_dual;
  double residual = 0.0;
};

/// tr pi(word) against tr xi(word^{-1}) for the representation and the Dunkl system.
std::vector<DualityEntry> dual_consistency_check(const ConnectionMatrixForm& rep, const ConnectionMatrixForm& dunkl,
                                                 const Arrangement& arr, const BraidGenerators& gens,
                                                 const std::vector<Word>& words, const TransportOptions& options = {});

struct CommutantReport {
  std::size_t dimension = 0;
  double gap_ratio = 0.0;
  std::vector<double> smallest_singular_values;
};

CommutantReport irreducibility_evidence(const std::vector<CMat>& matrices, double threshold = 1e-6);

struct ParameterProbeReport {
  int rank = 0;       // complex rank of the trace Jacobian
  int expected = 0;   // 2 dim V
  std::vector<double> singular_values;
  std::vector<std::string> skipped;
  std::vector<Word> words;  // the probed translation words
};

/// Jacobian in (m, beta) of the traces of 2 dim V seeded translation words, by
/// central differences, with rows scaled by the trace modulus. Single basis loops are not enough: a group element
/// conjugating one basis translation into another makes their traces equal.
ParameterProbeReport parameter_family_probe(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                                            double step = 1e-4, double rank_tol = 1e-6, std::uint64_t seed = 0x7ace);

std::vector<cplx> translation_traces(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                                     const BraidGenerators& gens, const TransportOptions& options);
std::vector<cplx> word_traces(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                              const BraidGenerators& gens, const std::vector<Word>& words,
                              const TransportOptions& options);

}  // namespace edunkl
