#include "edunkl/monodromy.hpp"

#include <algorithm>
#include <cmath>

namespace edunkl {

namespace {

cplx apply_covector(const CVec& a, const CVec& v) {
  cplx s{0.0, 0.0};
  for (Eigen::Index k = 0; k < v.size(); ++k) s += a(k) * v(k);
  return s;
}

double segment_length(const Segment& s) {
  if (s.kind == Segment::Kind::Line) return (s.b - s.a).norm();
  return s.radius * std::abs(s.theta1 - s.theta0) * s.direction.norm();
}

IVec lattice_coords_of(const ComplexTorus& torus, const CVec& v, const char* what) {
  const auto [k, resid] = torus.nearest_lattice_coords(v);
  if (resid > 1e-8) throw LabError(ErrorCode::NotLatticePreserving, std::string(what) + " is not a lattice vector");
  return k;
}

CVec transverse_eigenvector(const FiniteGroup& G, const ReflectionHypertorus& H) {
  const CMat& M = G[H.generator].matrix;
  CVec v = (M - CMat::Identity(M.rows(), M.cols())) * H.normal.conjugate();
  return v * (H.scale / apply_covector(H.normal, v));
}

}  // namespace

Segment Segment::line(CVec from, CVec to) {
  Segment s;
  s.kind = Kind::Line;
  s.a = std::move(from);
  s.b = std::move(to);
  return s;
}

Segment Segment::arc(CVec center, CVec direction, double radius, double theta0, double theta1) {
  Segment s;
  s.kind = Kind::Arc;
  s.center = std::move(center);
  s.direction = std::move(direction);
  s.radius = radius;
  s.theta0 = theta0;
  s.theta1 = theta1;
  return s;
}

CVec Segment::point(double s) const {
  if (kind == Kind::Line) return a + s * (b - a);
  const double th = theta0 + s * (theta1 - theta0);
  return center + std::polar(radius, th) * direction;
}

CVec Segment::velocity(double s) const {
  if (kind == Kind::Line) return b - a;
  const double th = theta0 + s * (theta1 - theta0);
  return (kI * (theta1 - theta0) * std::polar(radius, th)) * direction;
}

Segment Segment::reversed() const {
  if (kind == Kind::Line) return line(b, a);
  return arc(center, direction, radius, theta1, theta0);
}

Segment Segment::mapped(const CMat& M, const CVec& shift) const {
  if (kind == Kind::Line) return line(M * a + shift, M * b + shift);
  return arc(M * center + shift, M * direction, radius, theta0, theta1);
}

PathSpec compose_paths(const FiniteGroup& group, const ComplexTorus& torus, const PathSpec& p1, const PathSpec& p2) {
  const std::size_t w2inv = group.inverse(p2.endpoint_group_element);
  const CMat& M = group[w2inv].matrix;
  const CVec shift = torus.lattice_vector(p2.endpoint_lattice);
  PathSpec out;
  out.segments = p2.segments;
  for (const Segment& s : p1.segments) out.segments.push_back(s.mapped(M, shift));
  out.endpoint_group_element = group.multiply(p1.endpoint_group_element, p2.endpoint_group_element);
  out.endpoint_lattice = group[w2inv].lattice_matrix * p1.endpoint_lattice + p2.endpoint_lattice;
  out.clearance = std::min(p1.clearance, p2.clearance);
  out.label = p1.label + "*" + p2.label;
  return out;
}

PathSpec inverse_path(const FiniteGroup& group, const ComplexTorus& torus, const PathSpec& p) {
  const std::size_t w = p.endpoint_group_element;
  const CMat& M = group[w].matrix;
  const CVec shift = -(M * torus.lattice_vector(p.endpoint_lattice));
  PathSpec out;
  for (auto it = p.segments.rbegin(); it != p.segments.rend(); ++it) out.segments.push_back(it->reversed().mapped(M, shift));
  out.endpoint_group_element = group.inverse(w);
  out.endpoint_lattice = -(group[w].lattice_matrix * p.endpoint_lattice);
  out.clearance = p.clearance;
  out.label = p.label + "^-1";
  return out;
}

double path_clearance(const std::vector<ReflectionHypertorus>& hypertori, const PathSpec& p, double spacing) {
  double best = 1e300;
  for (const Segment& s : p.segments) {
    const int samples = std::max(8, static_cast<int>(std::ceil(segment_length(s) / spacing)));
    for (int i = 0; i <= samples; ++i) best = std::min(best, min_clearance(hypertori, s.point(double(i) / samples)));
  }
  return best;
}

void validate_path(const Arrangement& arr, const PathSpec& p, double min_clear) {
  if (p.segments.empty()) return;
  for (std::size_t i = 1; i < p.segments.size(); ++i) {
    if ((p.segments[i].point(0.0) - p.segments[i - 1].point(1.0)).norm() > 1e-10) {
      throw LabError(ErrorCode::ConfigError, "path segments are not contiguous");
    }
  }
  const auto& G = arr.group();
  const CVec expected =
      G[G.inverse(p.endpoint_group_element)].matrix * p.start() + arr.torus().lattice_vector(p.endpoint_lattice);
  if ((p.end() - expected).norm() > 1e-12 * std::max(1.0, expected.norm()) + 1e-12) {
    throw LabError(ErrorCode::ConfigError, "path endpoint does not match its group and lattice data");
  }
  if (path_clearance(arr.hypertori, p) < min_clear) {
    throw LabError(ErrorCode::SamplePointTooClose, "path comes closer than the clearance bound to a hypertorus");
  }
}

CVec default_basepoint(const Arrangement& arr, std::uint64_t seed) {
  const auto& G = arr.group();
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    const CVec x = regular_points(arr, 1, seed + attempt, 0.15)[0];
    bool free = true;
    for (std::size_t g = 1; g < G.size() && free; ++g) {
      const auto [k, resid] = arr.torus().nearest_lattice_coords(G[g].matrix * x - x);
      (void)k;
      if (resid < 0.05) free = false;
    }
    if (free) return x;
  }
  throw LabError(ErrorCode::BasepointOnHypertorus, "no basepoint with trivial stabilizer found");
}

PathSpec hypertorus_loop(const Arrangement& arr, const CVec& x, std::size_t h, const BraidOptions& options) {
  const auto& G = arr.group();
  const auto& torus = arr.torus();
  const ReflectionHypertorus& H = arr.hypertori.at(h);
  const CMat& M = G[H.generator].matrix;
  const CVec vg = transverse_eigenvector(G, H);
  const double r = options.arc_radius;
  const cplx tx = transverse_coordinate(H, x);

  // Lifts of H near x, nearest first.
  std::vector<std::pair<double, cplx>> lifts;
  const cplx tau = H.modulus;
  const double q0 = std::floor(tx.imag() / tau.imag());
  for (int dq = -2; dq <= 2; ++dq) {
    const double q = q0 + dq;
    const double p0 = std::floor((tx - q * tau).real());
    for (int dp = -2; dp <= 2; ++dp) {
      const cplx lam = (p0 + dp) + q * tau;
      lifts.emplace_back(std::abs(tx - lam), lam);
    }
  }
  std::sort(lifts.begin(), lifts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  auto build = [&](const std::vector<CVec>& waypoints, cplx lam) -> std::optional<PathSpec> {
    const CVec from = waypoints.empty() ? x : waypoints.back();
    const cplx d = transverse_coordinate(H, from) - lam;
    if (std::abs(d) < 2.0 * r) return std::nullopt;
    const CVec c = from - d * vg;
    const double theta0 = std::arg(d) + options.staging_angle_offset;
    const CVec staging = c + std::polar(r, theta0) * vg;
    std::vector<Segment> approach;
    CVec cur = x;
    for (const CVec& wp : waypoints) {
      approach.push_back(Segment::line(cur, wp));
      cur = wp;
    }
    approach.push_back(Segment::line(cur, staging));
    const IVec gamma_c = lattice_coords_of(torus, M * c - c, "hypertorus lift displacement");
    const CVec shift = -torus.lattice_vector(gamma_c);
    PathSpec p;
    p.segments = approach;
    p.segments.push_back(Segment::arc(c, vg, r, theta0, theta0 + 2.0 * kPi / H.order));
    for (auto it = approach.rbegin(); it != approach.rend(); ++it) p.segments.push_back(it->reversed().mapped(M, shift));
    p.endpoint_group_element = G.inverse(H.generator);
    p.endpoint_lattice = -gamma_c;
    p.label = "T" + std::to_string(H.orbit_id);
    p.clearance = path_clearance(arr.hypertori, p);
    // The arc itself sits at distance r from H; everything else must clear the bound.
    if (p.clearance < options.min_clearance) return std::nullopt;
    if ((p.segments[approach.size()].point(1.0) - p.segments[approach.size() + 1].point(0.0)).norm() > 1e-10) {
      return std::nullopt;
    }
    return p;
  };

  for (std::size_t i = 0; i < std::min<std::size_t>(6, lifts.size()); ++i) {
    if (auto p = build({}, lifts[i].second)) return *p;
  }
  std::mt19937_64 rng(options.seed + h);
  std::normal_distribution<double> nd;
  for (int attempt = 0; attempt < 200; ++attempt) {
    const cplx lam = lifts[static_cast<std::size_t>(attempt) % 3].second;
    CVec wp = x;
    for (Eigen::Index k = 0; k < wp.size(); ++k) wp(k) += 0.25 * cplx{nd(rng), nd(rng)};
    if (min_clearance(arr.hypertori, wp) < 0.1) continue;
    if (auto p = build({wp}, lam)) return *p;
  }
  throw LabError(ErrorCode::BasepointOnHypertorus, "could not route a loop around hypertorus " + std::to_string(h));
}

BraidGenerators braid_generators(const Arrangement& arr, const CVec& x, const BraidOptions& options) {
  if (min_clearance(arr.hypertori, x) < 0.1) {
    throw LabError(ErrorCode::BasepointOnHypertorus, "basepoint is within 0.1 of a hypertorus");
  }
  const auto& torus = arr.torus();
  BraidGenerators out;
  out.basepoint = x;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> nd;
  for (int i = 0; i < torus.real_rank(); ++i) {
    IVec e = IVec::Zero(torus.real_rank());
    e(i) = 1;
    const CVec target = x + torus.lattice_vector(e);
    PathSpec p;
    p.endpoint_group_element = 0;
    p.endpoint_lattice = e;
    p.label = "t" + std::to_string(i);
    p.segments = {Segment::line(x, target)};
    p.clearance = path_clearance(arr.hypertori, p);
    for (int attempt = 0; p.clearance < options.min_clearance; ++attempt) {
      if (attempt > 500) throw LabError(ErrorCode::BasepointOnHypertorus, "could not route a translation loop");
      CVec wp = 0.5 * (x + target);
      for (Eigen::Index k = 0; k < wp.size(); ++k) wp(k) += 0.3 * cplx{nd(rng), nd(rng)};
      p.segments = {Segment::line(x, wp), Segment::line(wp, target)};
      p.clearance = path_clearance(arr.hypertori, p);
    }
    out.translations.push_back(p);
  }
  for (std::size_t orbit = 0; orbit < arr.orbit_count(); ++orbit) {
    bool done = false;
    for (std::size_t h = 0; h < arr.hypertori.size() && !done; ++h) {
      if (arr.hypertori[h].orbit_id != orbit) continue;
      try {
        out.hypertorus_loops.push_back(hypertorus_loop(arr, x, h, options));
        out.loop_hypertorus.push_back(h);
        done = true;
      } catch (const LabError&) {
      }
    }
    if (!done) throw LabError(ErrorCode::BasepointOnHypertorus, "no routable representative for an orbit");
  }
  return out;
}

namespace {

std::pair<CMat, OdeResult> fundamental_solution(const ConnectionMatrixForm& A, const PathSpec& path,
                                                const OdeOptions& ode) {
  const int N = A.size();
  CMat Phi = CMat::Identity(N, N);
  OdeResult total;
  for (const Segment& seg : path.segments) {
    auto rhs = [&](double s, const CMat& Y) -> CMat { return -(A.matrix(seg.velocity(s), seg.point(s)) * Y); };
    OdeOptions o = ode;
    const OdeResult r = integrate_dopri5(rhs, CMat::Identity(N, N), o);
    Phi = r.value * Phi;
    total.steps += r.steps;
    total.rejected += r.rejected;
    total.local_error_sum += r.local_error_sum;
  }
  return {Phi, total};
}

}  // namespace

MonodromyMatrix transport(const ConnectionMatrixForm& A, const Arrangement& arr, const PathSpec& path,
                          const TransportOptions& options) {
  const CMat Q = A.gluing_matrix(path.endpoint_group_element, path.endpoint_lattice);
  (void)arr;
  const auto [Phi, info] = fundamental_solution(A, path, options.ode);
  MonodromyMatrix out;
  out.steps = info.steps;
  if (!options.estimate_error) {
    out.matrix = Q * Phi;
    out.error_estimate = info.local_error_sum;
  } else {
    OdeOptions half = options.ode;
    half.rtol *= 0.5;
    half.atol *= 0.5;
    const auto [Phi2, info2] = fundamental_solution(A, path, half);
    out.matrix = Q * Phi2;
    out.steps += info2.steps;
    out.error_estimate = std::max(2.0 * (Q * (Phi2 - Phi)).cwiseAbs().maxCoeff(), info2.local_error_sum);
  }
  Eigen::JacobiSVD<CMat> svd(Phi);
  const auto& sv = svd.singularValues();
  out.condition_number = sv(0) / sv(sv.size() - 1);
  return out;
}

std::vector<cplx> tau_from_C(const ParameterSet& P, const ReflectionHypertorus& H) {
  const int n = H.order;
  std::vector<cplx> out;
  for (int m = 1; m <= n; ++m) {
    cplx s{0.0, 0.0};
    for (int j = 1; j < n; ++j) s += P.C(H, j) * unit_phase(-static_cast<double>(j) * m / n);
    out.push_back(-(kTwoPiI / static_cast<double>(n)) * s);
  }
  return out;
}

std::vector<cplx> predicted_eigenvalues(const ParameterSet& P, const ReflectionHypertorus& H) {
  const auto tau = tau_from_C(P, H);
  std::vector<cplx> out;
  for (int m = 1; m <= H.order; ++m) out.push_back(unit_phase(static_cast<double>(m) / H.order) * std::exp(tau[m - 1]));
  return out;
}

double HeckeReport::max_residual() const {
  double m = 0.0;
  for (const auto& o : orbits) m = std::max(m, o.residual);
  return m;
}

namespace {

double polynomial_residual(const CMat& T, const std::vector<cplx>& roots) {
  const Eigen::Index N = T.rows();
  CMat R = CMat::Identity(N, N);
  for (const cplx& r : roots) R = (R * (T - r * CMat::Identity(N, N))).eval();
  Eigen::JacobiSVD<CMat> svd(T);
  return R.norm() / std::pow(svd.singularValues()(0), static_cast<double>(roots.size()));
}

}  // namespace

HeckeReport hecke_check(const ParameterSet& P, const Arrangement& arr, const BraidGenerators& gens,
                        const std::vector<MonodromyMatrix>& loops, double match_tol) {
  HeckeReport rep;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const ReflectionHypertorus& H = arr.hypertori[gens.loop_hypertorus[i]];
    const CMat& T = loops[i].matrix;
    HeckeOrbitReport o;
    o.orbit = H.orbit_id;
    o.order = H.order;
    o.tau = tau_from_C(P, H);
    o.predicted = predicted_eigenvalues(P, H);
    o.residual = polynomial_residual(T, o.predicted);

    std::vector<cplx> tau_flip, roots_conj;
    for (int m = 1; m <= H.order; ++m) {
      tau_flip.push_back(unit_phase(static_cast<double>(m) / H.order) * std::exp(-o.tau[m - 1]));
      roots_conj.push_back(unit_phase(-static_cast<double>(m) / H.order) * std::exp(o.tau[m - 1]));
    }
    o.variant_residuals["inverse-loop"] = polynomial_residual(T.inverse(), o.predicted);
    o.variant_residuals["tau-sign"] = polynomial_residual(T, tau_flip);
    o.variant_residuals["conjugate-roots"] = polynomial_residual(T, roots_conj);

    Eigen::ComplexEigenSolver<CMat> es(T);
    o.multiplicities.assign(o.predicted.size(), 0);
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
      const cplx ev = es.eigenvalues()(k);
      o.observed.push_back(ev);
      std::size_t best = 0;
      for (std::size_t m = 1; m < o.predicted.size(); ++m)
        if (std::abs(ev - o.predicted[m]) < std::abs(ev - o.predicted[best])) best = m;
      ++o.multiplicities[best];
      o.eigenvalue_distance = std::max(o.eigenvalue_distance, std::abs(ev - o.predicted[best]));
    }
    std::sort(o.observed.begin(), o.observed.end(), [](cplx a, cplx b) {
      return std::arg(a) < std::arg(b) || (std::arg(a) == std::arg(b) && std::abs(a) < std::abs(b));
    });
    for (std::size_t a = 0; a < o.predicted.size(); ++a)
      for (std::size_t b = a + 1; b < o.predicted.size(); ++b)
        if (std::abs(o.predicted[a] - o.predicted[b]) < 100.0 * match_tol) o.collision = true;
    cplx det_pred{1.0, 0.0};
    for (std::size_t m = 0; m < o.predicted.size(); ++m) det_pred *= std::pow(o.predicted[m], o.multiplicities[m]);
    o.det_residual = std::abs(T.determinant() - det_pred);

    o.orientation = "unmatched";
    if (o.residual < match_tol) {
      o.orientation = "as-stated";
    } else {
      for (const auto& [name, r] : o.variant_residuals)
        if (r < match_tol) o.orientation = name;
    }
    rep.orbits.push_back(o);
  }
  return rep;
}

CVec word_start(const BraidGenerators& gens) { return gens.basepoint; }

PathSpec word_path(const Arrangement& arr, const BraidGenerators& gens, const Word& word) {
  const std::size_t nt = gens.translations.size();
  auto letter = [&](int l) {
    const std::size_t idx = static_cast<std::size_t>(l >= 0 ? l : -l - 1);
    const PathSpec& p = idx < nt ? gens.translations.at(idx) : gens.hypertorus_loops.at(idx - nt);
    return l >= 0 ? p : inverse_path(arr.group(), arr.torus(), p);
  };
  if (word.empty()) {
    PathSpec p;
    p.segments = {Segment::line(gens.basepoint, gens.basepoint)};
    p.endpoint_lattice = IVec::Zero(arr.torus().real_rank());
    p.label = "e";
    return p;
  }
  PathSpec acc = letter(word.back());
  for (auto it = word.rbegin() + 1; it != word.rend(); ++it) acc = compose_paths(arr.group(), arr.torus(), letter(*it), acc);
  return acc;
}

std::vector<DualityEntry> dual_consistency_check(const ConnectionMatrixForm& rep, const ConnectionMatrixForm& dunkl,
                                                 const Arrangement& arr, const BraidGenerators& gens,
                                                 const std::vector<Word>& words, const TransportOptions& options) {
  std::vector<DualityEntry> out;
  for (const Word& w : words) {
    Word inv(w.rbegin(), w.rend());
    for (int& l : inv) l = -l - 1;
    DualityEntry e;
    e.word = w;
    e.trace_rep = transport(rep, arr, word_path(arr, gens, w), options).matrix.trace();
    e.trace_dual = transport(dunkl, arr, word_path(arr, gens, inv), options).matrix.trace();
    e.residual = std::abs(e.trace_rep - e.trace_dual);
    out.push_back(e);
  }
  return out;
}

CommutantReport irreducibility_evidence(const std::vector<CMat>& matrices, double threshold) {
  CommutantReport rep;
  if (matrices.empty()) return rep;
  const Eigen::Index N = matrices[0].rows();
  const CMat I = CMat::Identity(N, N);
  CMat S(static_cast<Eigen::Index>(matrices.size()) * N * N, N * N);
  // vec(X M - M X) = (M^T kron I - I kron M) vec(X)
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const CMat& M = matrices[i];
    CMat K(N * N, N * N);
    for (Eigen::Index a = 0; a < N; ++a)
      for (Eigen::Index b = 0; b < N; ++b) K.block(a * N, b * N, N, N) = M(b, a) * I - (a == b ? M : CMat::Zero(N, N));
    S.block(static_cast<Eigen::Index>(i) * N * N, 0, N * N, N * N) = K;
  }
  Eigen::BDCSVD<CMat> svd(S);
  const RVec sv = svd.singularValues();
  const double top = std::max(sv(0), 1e-300);
  std::size_t dim = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) < threshold * top) ++dim;
  // Square systems have N^2 singular values; a tall stack has the same count.
  rep.dimension = dim;
  const Eigen::Index cut = sv.size() - static_cast<Eigen::Index>(dim);
  if (cut > 0 && dim > 0) rep.gap_ratio = sv(cut - 1) / std::max(sv(cut), 1e-300);
  else if (dim == 0) rep.gap_ratio = 0.0;
  for (Eigen::Index k = std::max<Eigen::Index>(0, sv.size() - 4); k < sv.size(); ++k) rep.smallest_singular_values.push_back(sv(k));
  return rep;
}

std::vector<cplx> translation_traces(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                                     const BraidGenerators& gens, const TransportOptions& options) {
  const ConnectionMatrixForm A = build_connection(arr, L, P);
  std::vector<cplx> out;
  for (const PathSpec& p : gens.translations) out.push_back(transport(A, arr, p, options).matrix.trace());
  return out;
}

std::vector<cplx> word_traces(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                              const BraidGenerators& gens, const std::vector<Word>& words,
                              const TransportOptions& options) {
  const ConnectionMatrixForm A = build_connection(arr, L, P);
  std::vector<cplx> out;
  for (const Word& w : words) out.push_back(transport(A, arr, word_path(arr, gens, w), options).matrix.trace());
  return out;
}

ParameterProbeReport parameter_family_probe(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                                            double step, double rank_tol, std::uint64_t seed) {
  const int n = arr.dim();
  ParameterProbeReport rep;
  rep.expected = 2 * n;
  const BraidGenerators gens = braid_generators(arr, default_basepoint(arr));
  const int nt = static_cast<int>(gens.translations.size());
  // Seeded lattice vectors in pairwise distinct W-orbits (up to sign), each
  // realized as a product of basis translations.
  const auto& G = arr.group();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coeff(-1, 1);
  std::vector<IVec> chosen;
  while (static_cast<int>(rep.words.size()) < 2 * n) {
    IVec k(nt);
    for (int i = 0; i < nt; ++i) k(i) = coeff(rng);
    if (k.isZero()) continue;
    bool fresh = true;
    for (std::size_t w = 0; w < G.size() && fresh; ++w) {
      const IVec image = G[w].lattice_matrix * k;
      for (const IVec& c : chosen)
        if (image == c || image == -c) fresh = false;
    }
    if (!fresh) continue;
    chosen.push_back(k);
    Word word;
    for (int i = 0; i < nt; ++i)
      for (long long r = 0; r < std::abs(k(i)); ++r) word.push_back(k(i) > 0 ? i : -i - 1);
    rep.words.push_back(word);
  }
  TransportOptions opt;
  opt.estimate_error = false;
  const int params = 4 * n;  // 2n multipliers, then Re and Im of each beta_k
  RMat J(4 * n, params);
  auto perturbed = [&](int p, double h) -> std::optional<FlatLineBundle> {
    RVec m = L.multipliers;
    CVec beta = L.connection;
    if (p < 2 * n) m(p) += h;
    else if (p < 3 * n) beta(p - 2 * n) += h;
    else beta(p - 3 * n) += cplx{0.0, h};
    FlatLineBundle B = make_bundle(m, beta, arr.group());
    if (!B.stabilizer_free) return std::nullopt;
    return B;
  };
  for (int p = 0; p < params; ++p) {
    const auto plus = perturbed(p, step), minus = perturbed(p, -step);
    if (!plus || !minus) {
      rep.skipped.push_back("parameter " + std::to_string(p));
      J.col(p).setZero();
      continue;
    }
    const auto tp = word_traces(arr, *plus, P, gens, rep.words, opt);
    const auto tm = word_traces(arr, *minus, P, gens, rep.words, opt);
    for (int i = 0; i < 2 * n; ++i) {
      // Rows are scaled by the trace size (a log-derivative); rank is unchanged.
      const cplx d = (tp[i] - tm[i]) / (2.0 * step * std::max(1e-300, 0.5 * std::abs(tp[i] + tm[i])));
      J(2 * i, p) = d.real();
      J(2 * i + 1, p) = d.imag();
    }
  }
  Eigen::JacobiSVD<RMat> svd(J);
  const RVec sv = svd.singularValues();
  int real_rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    rep.singular_values.push_back(sv(k));
    if (sv(k) > rank_tol * sv(0)) ++real_rank;
  }
  rep.rank = real_rank / 2;
  return rep;
}

}  // namespace edunkl

namespace edunkl {

PathSpec contractible_rectangle(const Arrangement& arr, std::uint64_t seed, double size) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const int n = arr.dim();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const CVec x = regular_points(arr, 1, seed + 7919ULL * attempt, 0.1)[0];
    CVec u(n), v(n);
    for (int k = 0; k < n; ++k) {
      u(k) = cplx{nd(rng), nd(rng)};
      v(k) = cplx{nd(rng), nd(rng)};
    }
    u *= size / u.norm();
    v *= size / v.norm();
    PathSpec p;
    p.segments = {Segment::line(x, x + u), Segment::line(x + u, x + u + v), Segment::line(x + u + v, x + v),
                  Segment::line(x + v, x)};
    p.endpoint_lattice = IVec::Zero(arr.torus().real_rank());
    p.label = "rect";
    // Every point of the filled parallelogram must be regular, so the loop is null-homotopic.
    double fill = 1e300;
    for (int i = 0; i <= 20; ++i)
      for (int j = 0; j <= 20; ++j) fill = std::min(fill, min_clearance(arr.hypertori, x + (i / 20.0) * u + (j / 20.0) * v));
    if (fill < 0.06) continue;
    p.clearance = path_clearance(arr.hypertori, p);
    return p;
  }
  throw LabError(ErrorCode::BasepointOnHypertorus, "no hypertorus-free parallelogram found");
}

}  // namespace edunkl
