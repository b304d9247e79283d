#include "edunkl/lattice_group.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <random>

#include "edunkl/smith.hpp"

namespace edunkl {

namespace {

constexpr double kIntegerTol = 1e-9;
constexpr double kKeyTol = 1e-9;

std::vector<long long> flatten(const IMat& M) {
  std::vector<long long> out(static_cast<std::size_t>(M.size()));
  for (Eigen::Index j = 0; j < M.cols(); ++j)
    for (Eigen::Index i = 0; i < M.rows(); ++i) out[static_cast<std::size_t>(j * M.rows() + i)] = M(i, j);
  return out;
}

CVec normalize_covector(CVec a) {
  a /= a.norm();
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (std::abs(a(k)) > 1e-9) {
      a *= std::conj(a(k)) / std::abs(a(k));
      a(k) = cplx{a(k).real(), 0.0};
      break;
    }
  }
  return a;
}

struct ReducedBasis {
  cplx b1, b2;
  IVec c1, c2;
};

// Gauss-Lagrange reduction of a rank-2 lattice in C, tracking lattice lifts.
ReducedBasis lagrange_reduce(cplx b1, cplx b2, IVec c1, IVec c2) {
  for (int iter = 0; iter < 1000; ++iter) {
    if (std::abs(b2) < std::abs(b1)) {
      std::swap(b1, b2);
      std::swap(c1, c2);
    }
    const long long m = std::llround((b2 / b1).real());
    if (m == 0) break;
    b2 -= static_cast<double>(m) * b1;
    c2 -= m * c1;
  }
  if ((b2 / b1).imag() < 0) {
    b2 = -b2;
    c2 = -c2;
  }
  return {b1, b2, c1, c2};
}

// (p, q) real with z = p + q tau.
std::array<double, 2> cell_coords(cplx z, cplx tau) {
  const double q = z.imag() / tau.imag();
  return {z.real() - q * tau.real(), q};
}

bool same_modulo_lattice(cplx d, cplx tau) {
  const auto c = cell_coords(d, tau);
  return dist_to_integer(c[0]) < kKeyTol && dist_to_integer(c[1]) < kKeyTol;
}

bool is_integer_vector(const RVec& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (dist_to_integer(y(i)) > kIntegerTol) return false;
  return true;
}

}  // namespace

RVec realify(const CVec& z) {
  RVec x(2 * z.size());
  x.head(z.size()) = z.real();
  x.tail(z.size()) = z.imag();
  return x;
}

CVec complexify(const RVec& x) {
  const Eigen::Index n = x.size() / 2;
  CVec z(n);
  for (Eigen::Index k = 0; k < n; ++k) z(k) = cplx{x(k), x(n + k)};
  return z;
}

RMat realify(const CMat& M) {
  const Eigen::Index n = M.rows();
  RMat R(2 * n, 2 * n);
  R.topLeftCorner(n, n) = M.real();
  R.topRightCorner(n, n) = -M.imag();
  R.bottomLeftCorner(n, n) = M.imag();
  R.bottomRightCorner(n, n) = M.real();
  return R;
}

ComplexTorus::ComplexTorus(std::vector<CVec> lattice_basis) : basis_(std::move(lattice_basis)) {
  if (basis_.empty() || basis_.size() % 2 != 0) {
    throw LabError(ErrorCode::ConfigError, "lattice basis must contain 2n vectors");
  }
  n_ = static_cast<int>(basis_.size() / 2);
  real_basis_.resize(2 * n_, 2 * n_);
  for (int i = 0; i < 2 * n_; ++i) {
    if (basis_[static_cast<std::size_t>(i)].size() != n_) {
      throw LabError(ErrorCode::ConfigError, "lattice basis vectors must lie in C^n");
    }
    real_basis_.col(i) = realify(basis_[static_cast<std::size_t>(i)]);
  }
  const double det = real_basis_.determinant();
  if (std::abs(det) < 1e-12) {
    throw LabError(ErrorCode::ConfigError, "lattice basis is not linearly independent over R");
  }
  real_basis_inv_ = real_basis_.inverse();
}

RVec ComplexTorus::lattice_coords(const CVec& z) const { return real_basis_inv_ * realify(z); }

CVec ComplexTorus::point(const RVec& coords) const { return complexify(real_basis_ * coords); }

CVec ComplexTorus::lattice_vector(const IVec& coords) const { return point(coords.cast<double>()); }

RVec ComplexTorus::multipliers_of(const CVec& a) const {
  RVec m(2 * n_);
  for (int i = 0; i < 2 * n_; ++i) m(i) = a.dot(basis_[static_cast<std::size_t>(i)]).imag();
  return m;
}

double ComplexTorus::omega(const RVec& multipliers, const CVec& v) const {
  return multipliers.dot(lattice_coords(v));
}

std::pair<IVec, double> ComplexTorus::nearest_lattice_coords(const CVec& z) const {
  const RVec y = lattice_coords(z);
  IVec k(y.size());
  double residual = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    k(i) = std::llround(y(i));
    residual = std::max(residual, std::abs(y(i) - static_cast<double>(k(i))));
  }
  return {k, residual};
}

IMat lattice_action(const CMat& matrix, const ComplexTorus& torus) {
  if (matrix.rows() != torus.dim() || matrix.cols() != torus.dim()) {
    throw LabError(ErrorCode::ConfigError, "generator dimension does not match the torus");
  }
  const RMat& B = torus.real_basis();
  const RMat L = B.inverse() * realify(matrix) * B;
  IMat out(L.rows(), L.cols());
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    for (Eigen::Index j = 0; j < L.cols(); ++j) {
      if (dist_to_integer(L(i, j)) > kIntegerTol) {
        throw LabError(ErrorCode::NotLatticePreserving, "generator does not preserve the lattice");
      }
      out(i, j) = std::llround(L(i, j));
    }
  }
  return out;
}

FiniteGroup::FiniteGroup(std::vector<GroupElement> elements, std::vector<std::vector<std::size_t>> mult)
    : elements_(std::move(elements)), mult_(std::move(mult)) {
  inverse_.assign(elements_.size(), 0);
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    by_key_[flatten(elements_[i].lattice_matrix)] = i;
    for (std::size_t j = 0; j < elements_.size(); ++j) {
      if (mult_[i][j] == 0) {
        inverse_[i] = j;
        break;
      }
    }
  }
}

std::size_t FiniteGroup::power(std::size_t a, int k) const {
  std::size_t base = k < 0 ? inverse(a) : a;
  std::size_t out = 0;
  for (int i = 0; i < std::abs(k); ++i) out = multiply(out, base);
  return out;
}

std::optional<std::size_t> FiniteGroup::index_of(const IMat& lattice_matrix) const {
  const auto it = by_key_.find(flatten(lattice_matrix));
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

FiniteGroup group_closure(const std::vector<CMat>& generators, const ComplexTorus& torus,
                          std::size_t max_order) {
  const int n = torus.dim();
  std::vector<GroupElement> elems;
  std::map<std::vector<long long>, std::size_t> index;
  auto add = [&](const CMat& M, const IMat& L) -> std::size_t {
    const auto key = flatten(L);
    if (auto it = index.find(key); it != index.end()) return it->second;
    if (elems.size() >= max_order) {
      throw LabError(ErrorCode::NotFinite, "group closure exceeded " + std::to_string(max_order) + " elements");
    }
    GroupElement g;
    g.matrix = M;
    g.lattice_matrix = L;
    g.det = M.determinant();
    index.emplace(key, elems.size());
    elems.push_back(std::move(g));
    return elems.size() - 1;
  };

  add(CMat::Identity(n, n), IMat::Identity(2 * n, 2 * n));
  std::vector<std::pair<CMat, IMat>> gens;
  for (const CMat& G : generators) gens.emplace_back(G, lattice_action(G, torus));

  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    for (const auto& [G, L] : gens) {
      const std::size_t before = elems.size();
      // Left multiplication by generators reaches every element of the closure.
      const CMat M = G * elems[i].matrix;
      const IMat LL = L * elems[i].lattice_matrix;
      const std::size_t k = add(M, LL);
      if (elems.size() > before) queue.push_back(k);
    }
  }

  std::vector<std::vector<std::size_t>> mult(elems.size(), std::vector<std::size_t>(elems.size()));
  for (std::size_t a = 0; a < elems.size(); ++a) {
    for (std::size_t b = 0; b < elems.size(); ++b) {
      const IMat L = elems[a].lattice_matrix * elems[b].lattice_matrix;
      const auto it = index.find(flatten(L));
      if (it == index.end()) throw LabError(ErrorCode::NotFinite, "closure is not multiplicatively closed");
      mult[a][b] = it->second;
    }
  }
  for (std::size_t a = 0; a < elems.size(); ++a) {
    std::size_t p = a;
    int order = 1;
    while (p != 0) {
      p = mult[p][a];
      ++order;
      if (order > static_cast<int>(elems.size()) + 1) throw LabError(ErrorCode::NotFinite, "element of infinite order");
    }
    elems[a].order = order;
  }
  return FiniteGroup(std::move(elems), std::move(mult));
}

std::vector<std::size_t> find_reflections(const FiniteGroup& group) {
  std::vector<std::size_t> out;
  const int n = group.dim();
  for (std::size_t i = 1; i < group.size(); ++i) {
    const CMat K = group[i].matrix - CMat::Identity(n, n);
    Eigen::JacobiSVD<CMat> svd(K);
    const auto& s = svd.singularValues();
    int rank = 0;
    for (Eigen::Index k = 0; k < s.size(); ++k)
      if (s(k) > 1e-9) ++rank;
    if (rank == 1) out.push_back(i);
  }
  return out;
}

std::pair<long long, long long> ReflectionHypertorus::transverse_lattice_coords(const ComplexTorus& torus,
                                                                                const IVec& gamma) const {
  cplx value{0.0, 0.0};
  const CVec v = torus.lattice_vector(gamma);
  for (Eigen::Index k = 0; k < v.size(); ++k) value += normal(k) * v(k);
  const auto c = cell_coords(value / scale, modulus);
  const long long p = std::llround(c[0]);
  const long long q = std::llround(c[1]);
  if (std::abs(c[0] - static_cast<double>(p)) > 1e-8 || std::abs(c[1] - static_cast<double>(q)) > 1e-8) {
    throw LabError(ErrorCode::DegenerateTransverseLattice, "lattice vector does not map into the transverse lattice");
  }
  return {p, q};
}

namespace {

cplx apply_covector(const CVec& a, const CVec& v) {
  cplx s{0.0, 0.0};
  for (Eigen::Index k = 0; k < v.size(); ++k) s += a(k) * v(k);
  return s;
}

struct Candidate {
  CVec normal;
  CVec base_point;
  cplx scale;
  cplx modulus;
  IVec unit_lift, tau_lift;
  std::vector<CVec> tangent_basis;
  std::vector<RVec> tangent_coords;
};

std::vector<std::size_t> point_stabilizer(const FiniteGroup& group, const ComplexTorus& torus, const CVec& p) {
  std::vector<std::size_t> out;
  const RVec y = torus.lattice_coords(p);
  for (std::size_t w = 0; w < group.size(); ++w) {
    const RVec d = group[w].lattice_matrix.cast<double>() * y - y;
    if (is_integer_vector(d)) out.push_back(w);
  }
  return out;
}

bool matches(const Candidate& a, const CVec& normal, const CVec& base_point) {
  if ((a.normal - normal).norm() > kKeyTol) return false;
  const cplx d = apply_covector(a.normal, base_point - a.base_point) / a.scale;
  return same_modulo_lattice(d, a.modulus);
}

}  // namespace

std::vector<ReflectionHypertorus> enumerate_hypertori(const FiniteGroup& group, const ComplexTorus& torus,
                                                      const HypertorusOptions& options) {
  const int n = torus.dim();
  const int r = 2 * n;
  std::vector<Candidate> found;

  for (std::size_t g : find_reflections(group)) {
    const IMat K = group[g].lattice_matrix - IMat::Identity(r, r);
    const SmithForm snf = smith_normal_form(K);
    if (snf.rank != 2) {
      throw LabError(ErrorCode::DegenerateTransverseLattice, "reflection has lattice rank != 2");
    }
    const long long d1 = snf.diagonal(0);
    const long long d2 = snf.diagonal(1);

    // alpha_H spans the row space of (g - 1).
    const CMat Km = group[g].matrix - CMat::Identity(n, n);
    Eigen::Index best_row = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (Km.row(i).norm() > Km.row(best_row).norm()) best_row = i;
    const CVec normal = normalize_covector(Km.row(best_row).transpose());

    const IVec v1 = snf.V.col(0);
    const IVec v2 = snf.V.col(1);
    const ReducedBasis rb = lagrange_reduce(apply_covector(normal, torus.lattice_vector(v1)),
                                            apply_covector(normal, torus.lattice_vector(v2)), v1, v2);
    const cplx tau = rb.b2 / rb.b1;
    if (!(tau.imag() > 1e-9)) {
      throw LabError(ErrorCode::DegenerateTransverseLattice, "transverse lattice has rank < 2");
    }
    std::vector<CVec> tangents;
    std::vector<RVec> tangent_coords;
    for (int k = 2; k < r; ++k) {
      const IVec col = snf.V.col(k);
      tangents.push_back(torus.lattice_vector(col));
      tangent_coords.push_back(col.cast<double>());
    }

    for (long long k1 = 0; k1 < d1; ++k1) {
      for (long long k2 = 0; k2 < d2; ++k2) {
        RVec s = RVec::Zero(r);
        s(0) = static_cast<double>(k1) / static_cast<double>(d1);
        s(1) = static_cast<double>(k2) / static_cast<double>(d2);
        const CVec x = torus.point(snf.V.cast<double>() * s);
        bool dup = false;
        for (const Candidate& c : found) {
          if (matches(c, normal, x)) {
            dup = true;
            break;
          }
        }
        if (!dup) found.push_back({normal, x, rb.b1, tau, rb.c1, rb.c2, tangents, tangent_coords});
      }
    }
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(0.15, 0.85);

  std::vector<ReflectionHypertorus> out;
  for (const Candidate& c : found) {
    ReflectionHypertorus H;
    H.normal = c.normal;
    H.base_point = c.base_point;
    H.scale = c.scale;
    H.modulus = c.modulus;
    H.unit_lift = c.unit_lift;
    H.tau_lift = c.tau_lift;
    H.tangent_basis = c.tangent_basis;
    const auto kc = cell_coords(apply_covector(c.normal, c.base_point) / c.scale, c.modulus);
    H.key_coords = {frac01(kc[0], 1e-9), frac01(kc[1], 1e-9)};

    auto generic = [&]() {
      CVec p = c.base_point;
      for (const CVec& t : c.tangent_basis) p += uni(rng) * t;
      return p;
    };
    H.generic_point = generic();
    std::vector<std::size_t> stab = point_stabilizer(group, torus, H.generic_point);
    const std::vector<std::size_t> stab2 = point_stabilizer(group, torus, generic());
    std::vector<std::size_t> both;
    std::set_intersection(stab.begin(), stab.end(), stab2.begin(), stab2.end(), std::back_inserter(both));
    stab = both;

    const int order = static_cast<int>(stab.size());
    const cplx target = unit_phase(1.0 / order);
    std::optional<std::size_t> gen;
    for (std::size_t w : stab) {
      if (std::abs(group[w].det - target) < 1e-10) gen = w;
    }
    if (!gen || group[*gen].order != order) {
      throw LabError(ErrorCode::NonCyclicStabilizer, "generic stabilizer of a hypertorus is not cyclic");
    }
    H.generator = *gen;
    H.order = order;
    for (int j = 0; j < order; ++j) H.stabilizer.push_back(group.power(*gen, j));
    out.push_back(std::move(H));
  }

  // Deterministic order: lexicographic in the canonical key.
  auto key = [](const ReflectionHypertorus& H) {
    std::vector<long long> k;
    for (Eigen::Index i = 0; i < H.normal.size(); ++i) {
      k.push_back(std::llround(H.normal(i).real() * 1e8));
      k.push_back(std::llround(H.normal(i).imag() * 1e8));
    }
    k.push_back(std::llround(H.key_coords[0] * 1e8));
    k.push_back(std::llround(H.key_coords[1] * 1e8));
    return k;
  };
  std::stable_sort(out.begin(), out.end(),
                   [&](const ReflectionHypertorus& a, const ReflectionHypertorus& b) { return key(a) < key(b); });

  // Orbits under W, labelled by first appearance in key order.
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  for (auto& H : out) H.orbit_id = kUnset;
  std::size_t next = 0;
  for (std::size_t h = 0; h < out.size(); ++h) {
    if (out[h].orbit_id != kUnset) continue;
    for (std::size_t w = 0; w < group.size(); ++w) {
      const std::size_t img = image_hypertorus(out, group, torus, w, h);
      if (out[img].order != out[h].order) {
        throw LabError(ErrorCode::NonCyclicStabilizer, "W-image of a hypertorus changed n_H");
      }
      out[img].orbit_id = next;
    }
    ++next;
  }
  return out;
}

std::size_t image_hypertorus(const std::vector<ReflectionHypertorus>& hypertori, const FiniteGroup& group,
                             const ComplexTorus& torus, std::size_t w, std::size_t h) {
  (void)torus;
  const ReflectionHypertorus& H = hypertori[h];
  const CMat& M = group[w].matrix;
  // (w.alpha)(v) = alpha(w^{-1} v)
  const CVec alpha = normalize_covector((H.normal.transpose() * M.inverse()).transpose());
  const CVec x = M * H.base_point;
  for (std::size_t k = 0; k < hypertori.size(); ++k) {
    const ReflectionHypertorus& K = hypertori[k];
    if ((K.normal - alpha).norm() > kKeyTol) continue;
    const cplx d = apply_covector(K.normal, x - K.base_point) / K.scale;
    if (same_modulo_lattice(d, K.modulus)) return k;
  }
  throw LabError(ErrorCode::NonCyclicStabilizer, "hypertorus list is not W-stable");
}

cplx transverse_coordinate(const ReflectionHypertorus& H, const CVec& z) {
  return apply_covector(H.normal, z - H.base_point) / H.scale;
}

double transverse_clearance(const ReflectionHypertorus& H, const CVec& z) {
  const cplx t = transverse_coordinate(H, z);
  const auto c = cell_coords(t, H.modulus);
  const double p0 = std::floor(c[0]);
  const double q0 = std::floor(c[1]);
  double best = std::numeric_limits<double>::infinity();
  for (int a = -1; a <= 2; ++a)
    for (int b = -1; b <= 2; ++b)
      best = std::min(best, std::abs(t - (p0 + a) - (q0 + b) * H.modulus));
  return best;
}

double min_clearance(const std::vector<ReflectionHypertorus>& hypertori, const CVec& z) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& H : hypertori) best = std::min(best, transverse_clearance(H, z));
  return best;
}

RVec dual_action(const FiniteGroup& group, std::size_t w, const RVec& multipliers) {
  const IMat& Linv = group[group.inverse(w)].lattice_matrix;
  return Linv.cast<double>().transpose() * multipliers;
}

ComplexTorus product_torus(int n, cplx modulus) {
  std::vector<CVec> basis;
  for (int k = 0; k < n; ++k) {
    CVec e = CVec::Zero(n);
    e(k) = 1.0;
    basis.push_back(e);
    basis.push_back(modulus * e);
  }
  return ComplexTorus(std::move(basis));
}

cplx triangular_modulus() { return unit_phase(1.0 / 3.0); }

namespace {

void check_ell(int ell) {
  if (ell != 2 && ell != 3 && ell != 4 && ell != 6) {
    throw LabError(ErrorCode::ConfigError,
                   "l = " + std::to_string(ell) +
                       " is not allowed: cyclic and wreath families need l in {2, 3, 4, 6} with a Z/l-invariant "
                       "lattice (any for l=2, triangular for l=3,6, square for l=4)");
  }
}

cplx default_modulus(int ell) { return (ell == 3 || ell == 6) ? triangular_modulus() : cplx{0.0, 1.0}; }

void check_lattice_compatible(const Family& f, int ell) {
  try {
    for (const CMat& g : f.generators) (void)lattice_action(g, f.torus);
  } catch (const LabError&) {
    throw LabError(ErrorCode::ConfigError,
                   "lattice is not invariant under Z/" + std::to_string(ell) +
                       " (l=4 needs a square lattice, l=3,6 a triangular one)");
  }
}

}  // namespace

Family cyclic_family(int ell, std::optional<cplx> modulus) {
  check_ell(ell);
  Family f;
  f.name = "cyclic(" + std::to_string(ell) + ")";
  f.torus = product_torus(1, modulus.value_or(default_modulus(ell)));
  CMat g(1, 1);
  g(0, 0) = unit_phase(1.0 / ell);
  f.generators = {g};
  check_lattice_compatible(f, ell);
  return f;
}

Family symmetric_family(int n, cplx modulus) {
  if (n < 1) throw LabError(ErrorCode::ConfigError, "symmetric family needs n >= 1");
  Family f;
  f.name = "symmetric(" + std::to_string(n) + ")";
  f.torus = product_torus(n, modulus);
  for (int k = 0; k + 1 < n; ++k) {
    CMat s = CMat::Identity(n, n);
    s(k, k) = s(k + 1, k + 1) = 0.0;
    s(k, k + 1) = s(k + 1, k) = 1.0;
    f.generators.push_back(s);
  }
  return f;
}

Family wreath_family(int n, int ell, std::optional<cplx> modulus) {
  check_ell(ell);
  Family f = symmetric_family(n, modulus.value_or(default_modulus(ell)));
  f.name = "wreath(" + std::to_string(n) + "," + std::to_string(ell) + ")";
  CMat d = CMat::Identity(n, n);
  d(0, 0) = unit_phase(1.0 / ell);
  f.generators.push_back(d);
  check_lattice_compatible(f, ell);
  return f;
}

Family custom_family(const std::vector<CMat>& generators, const std::vector<CVec>& lattice_basis) {
  Family f;
  f.name = "custom";
  f.torus = ComplexTorus(lattice_basis);
  f.generators = generators;
  return f;
}

}  // namespace edunkl
