#include "edunkl/dunkl_ops.hpp"

#include <cmath>

namespace edunkl {

namespace {

cplx apply_covector(const CVec& a, const CVec& v) {
  cplx s{0.0, 0.0};
  for (Eigen::Index k = 0; k < v.size(); ++k) s += a(k) * v(k);
  return s;
}

Jet derivative_along(const Jet& f, const Jet& direction_coefficient, Eigen::Index i) {
  return direction_coefficient * partial(f, i);
}

// Coefficients of B evaluated at g^{-1} z, then transported by g.
CoefficientJets conjugate_by(const CoefficientJets& b, const CMat& G, const CMat& Ginv, int order) {
  const int n = static_cast<int>(G.rows());
  CoefficientJets out = CoefficientJets::zero(n);
  out.scalar = pull_back_linear(b.scalar, Ginv);
  if (order < 1) return out;
  std::vector<Jet> q(static_cast<std::size_t>(n)), r;
  for (int i = 0; i < n; ++i) q[i] = pull_back_linear(b.first[i], Ginv);
  for (int k = 0; k < n; ++k) {
    Jet acc = Jet::zero(n);
    for (int i = 0; i < n; ++i) acc += q[i] * G(k, i);
    out.first[k] = acc;
  }
  if (order < 2) return out;
  for (int i = 0; i < n * n; ++i) r.push_back(pull_back_linear(b.second[i], Ginv));
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      Jet acc = Jet::zero(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) acc += r[i * n + j] * (G(k, i) * G(l, j));
      out.second[k * n + l] = acc;
    }
  return out;
}

// (A0 + A1.d + A2:dd) o (p + q.d + r:dd), truncated at total order 2.
CoefficientJets multiply(const CoefficientJets& A, int orderA, const CoefficientJets& B, int orderB) {
  const int n = static_cast<int>(A.first.size());
  CoefficientJets out = CoefficientJets::zero(n);
  out.scalar = A.scalar * B.scalar;
  if (orderA >= 1) {
    for (int i = 0; i < n; ++i) out.scalar += derivative_along(B.scalar, A.first[i], i);
  }
  if (orderA >= 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out.scalar += A.second[i * n + j] * partial(partial(B.scalar, i), j);
  }
  for (int k = 0; k < n; ++k) {
    Jet acc = Jet::zero(n);
    if (orderB >= 1) acc += A.scalar * B.first[k];
    if (orderA >= 1) acc += B.scalar * A.first[k];
    if (orderA >= 1 && orderB >= 1) {
      for (int i = 0; i < n; ++i) acc += derivative_along(B.first[k], A.first[i], i);
    }
    if (orderA >= 2) {
      for (int i = 0; i < n; ++i) acc += 2.0 * (A.second[k * n + i] * partial(B.scalar, i));
    }
    out.first[k] = acc;
  }
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      Jet acc = Jet::zero(n);
      if (orderB >= 2) acc += A.scalar * B.second[k * n + l];
      if (orderA >= 2) acc += B.scalar * A.second[k * n + l];
      if (orderA >= 1 && orderB >= 1) acc += 0.5 * (A.first[k] * B.first[l] + A.first[l] * B.first[k]);
      out.second[k * n + l] = acc;
    }
  return out;
}

CoefficientJets scaled_sum(cplx a, const CoefficientJets& x, cplx b, const CoefficientJets& y) {
  CoefficientJets out = x;
  out.scalar = a * x.scalar + b * y.scalar;
  for (std::size_t i = 0; i < out.first.size(); ++i) out.first[i] = a * x.first[i] + b * y.first[i];
  for (std::size_t i = 0; i < out.second.size(); ++i) out.second[i] = a * x.second[i] + b * y.second[i];
  return out;
}

std::vector<std::size_t> reflection_elements(const Arrangement& arr) {
  std::set<std::size_t> out;
  for (const auto& H : arr.hypertori)
    for (int j = 1; j < H.order; ++j) out.insert(H.stabilizer[static_cast<std::size_t>(j)]);
  return {out.begin(), out.end()};
}

}  // namespace

Arrangement Arrangement::build(const Family& family, const HypertorusOptions& options) {
  Arrangement arr;
  arr.family = family;
  arr.group_ptr = std::make_shared<const FiniteGroup>(group_closure(family.generators, family.torus));
  arr.hypertori = enumerate_hypertori(*arr.group_ptr, family.torus, options);
  arr.seed = options.seed;
  return arr;
}

std::vector<std::pair<std::size_t, int>> Arrangement::strata() const {
  std::vector<std::pair<std::size_t, int>> out;
  for (std::size_t h = 0; h < hypertori.size(); ++h)
    for (int j = 1; j < hypertori[h].order; ++j) out.emplace_back(h, j);
  return out;
}

std::size_t Arrangement::orbit_count() const {
  std::size_t count = 0;
  for (const auto& H : hypertori) count = std::max(count, H.orbit_id + 1);
  return count;
}

cplx ParameterSet::C(std::size_t orbit, int j) const {
  const auto it = values.find({orbit, j});
  return it == values.end() ? cplx{0.0, 0.0} : it->second;
}

cplx ParameterSet::c(const ReflectionHypertorus& H, int j) const {
  if (j % H.order == 0) return {0.0, 0.0};
  return 0.5 * (unit_phase(-static_cast<double>(j) / H.order) - 1.0) * C(H, j);
}

ParameterSet ParameterSet::constant(const Arrangement& arr, cplx value) {
  ParameterSet P;
  for (const auto& H : arr.hypertori)
    for (int j = 1; j < H.order; ++j) P.values[{H.orbit_id, j}] = value;
  return P;
}

ParameterSet ParameterSet::random(const Arrangement& arr, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g;
  ParameterSet P;
  for (const auto& H : arr.hypertori)
    for (int j = 1; j < H.order; ++j) {
      if (P.values.count({H.orbit_id, j})) continue;
      P.values[{H.orbit_id, j}] = scale * cplx{g(rng), g(rng)};
    }
  return P;
}

SectionHandle assemble_F_Cg(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P, std::size_t g) {
  const int n = arr.dim();
  std::vector<std::pair<cplx, SectionHandle>> parts;
  std::vector<std::size_t> poles;
  for (std::size_t h = 0; h < arr.hypertori.size(); ++h) {
    const auto& H = arr.hypertori[h];
    for (int j = 1; j < H.order; ++j) {
      if (H.stabilizer[static_cast<std::size_t>(j)] != g) continue;
      const cplx C = P.C(H, j);
      if (C == cplx{0.0, 0.0}) continue;
      parts.emplace_back(C, section_f(arr.torus(), arr.group(), L, arr.hypertori, h, j));
      poles.push_back(h);
    }
  }
  SectionHandle s = zero_section(n);
  s.automorphy = L.multipliers - dual_action(arr.group(), g, L.multipliers);
  s.pole_locus = poles;
  if (parts.empty()) return s;
  s.evaluator = [parts, n](const CVec& z) {
    std::vector<Jet> out(static_cast<std::size_t>(n), Jet::zero(n));
    for (const auto& [C, f] : parts) {
      const auto jets = f.jets(z);
      for (int k = 0; k < n; ++k) out[k] += C * jets[k];
    }
    return out;
  };
  return s;
}

CoefficientJets CoefficientJets::zero(int n) {
  CoefficientJets c;
  c.scalar = Jet::zero(n);
  c.first.assign(static_cast<std::size_t>(n), Jet::zero(n));
  c.second.assign(static_cast<std::size_t>(n * n), Jet::zero(n));
  return c;
}

double CoefficientJets::max_abs(int up_to_order) const {
  double m = std::abs(scalar.value);
  if (up_to_order >= 1)
    for (const auto& j : first) m = std::max(m, std::abs(j.value));
  if (up_to_order >= 2)
    for (const auto& j : second) m = std::max(m, std::abs(j.value));
  return m;
}

int DiffReflOperator::order() const {
  int o = 0;
  for (const auto& [g, t] : terms_) o = std::max(o, t.order);
  return o;
}

void DiffReflOperator::add_term(std::size_t g, OperatorTerm term) {
  if (term.order > 2) throw LabError(ErrorCode::OrderOverflow, "operator order exceeds 2");
  auto it = terms_.find(g);
  if (it == terms_.end()) {
    terms_.emplace(g, std::move(term));
    return;
  }
  auto prev = it->second.eval;
  auto next = term.eval;
  it->second.order = std::max(it->second.order, term.order);
  it->second.eval = [prev, next](const CVec& z) { return scaled_sum(1.0, prev(z), 1.0, next(z)); };
}

CoefficientJets DiffReflOperator::coefficients(std::size_t g, const CVec& z) const {
  const auto it = terms_.find(g);
  if (it == terms_.end()) return CoefficientJets::zero(dim_);
  return it->second.eval(z);
}

cplx DiffReflOperator::apply(const ScalarJetFn& psi, const CVec& z) const {
  cplx total{0.0, 0.0};
  for (const auto& [g, term] : terms_) {
    const CMat& Ginv = (*group_)[group_->inverse(g)].matrix;
    const Jet phi = pull_back_linear(psi(Ginv * z), Ginv);
    const CoefficientJets c = term.eval(z);
    total += c.scalar.value * phi.value;
    if (term.order >= 1)
      for (int i = 0; i < dim_; ++i) total += c.first[i].value * phi.grad(i);
    if (term.order >= 2)
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) total += c.second[i * dim_ + j].value * phi.hess(i, j);
  }
  return total;
}

DiffReflOperator group_operator(const std::shared_ptr<const FiniteGroup>& group, int dim, std::size_t g) {
  DiffReflOperator op(group, dim);
  op.add_term(g, {0, [dim](const CVec&) {
                    CoefficientJets c = CoefficientJets::zero(dim);
                    c.scalar = Jet::constant(1.0, dim);
                    return c;
                  }});
  return op;
}

DiffReflOperator multiplication_operator(const std::shared_ptr<const FiniteGroup>& group, int dim,
                                         const ScalarJetFn& m, std::size_t g) {
  DiffReflOperator op(group, dim);
  op.add_term(g, {0, [dim, m](const CVec& z) {
                    CoefficientJets c = CoefficientJets::zero(dim);
                    c.scalar = m(z);
                    return c;
                  }});
  return op;
}

DiffReflOperator derivative_operator(const std::shared_ptr<const FiniteGroup>& group, const CVec& v) {
  const int dim = static_cast<int>(v.size());
  DiffReflOperator op(group, dim);
  op.add_term(0, {1, [dim, v](const CVec&) {
                    CoefficientJets c = CoefficientJets::zero(dim);
                    for (int k = 0; k < dim; ++k) c.first[k] = Jet::constant(v(k), dim);
                    return c;
                  }});
  return op;
}

DiffReflOperator compose(const DiffReflOperator& A, const DiffReflOperator& B) {
  if (A.order() + B.order() > 2) throw LabError(ErrorCode::OrderOverflow, "composition would exceed order 2");
  const auto& group = A.group();
  DiffReflOperator out(A.group_ptr(), A.dim());
  out.add_poles(A.poles());
  out.add_poles(B.poles());
  for (const auto& [ga, ta] : A.terms())
    for (const auto& [gb, tb] : B.terms()) {
      const CMat G = group[ga].matrix;
      const CMat Ginv = group[group.inverse(ga)].matrix;
      const int oa = ta.order, ob = tb.order;
      auto ea = ta.eval;
      auto eb = tb.eval;
      out.add_term(group.multiply(ga, gb), {oa + ob, [=](const CVec& z) {
                                              const CoefficientJets a = ea(z);
                                              const CoefficientJets b = conjugate_by(eb(Ginv * z), G, Ginv, ob);
                                              return multiply(a, oa, b, ob);
                                            }});
    }
  return out;
}

DiffReflOperator combine(cplx a, const DiffReflOperator& A, cplx b, const DiffReflOperator& B) {
  DiffReflOperator out(A.group_ptr(), A.dim());
  out.add_poles(A.poles());
  out.add_poles(B.poles());
  const int n = A.dim();
  for (const auto& [g, t] : A.terms()) {
    auto e = t.eval;
    out.add_term(g, {t.order, [e, a, n](const CVec& z) { return scaled_sum(a, e(z), 0.0, CoefficientJets::zero(n)); }});
  }
  for (const auto& [g, t] : B.terms()) {
    auto e = t.eval;
    out.add_term(g, {t.order, [e, b, n](const CVec& z) { return scaled_sum(b, e(z), 0.0, CoefficientJets::zero(n)); }});
  }
  return out;
}

DiffReflOperator commutator(const DiffReflOperator& A, const DiffReflOperator& B) {
  return combine(1.0, compose(A, B), -1.0, compose(B, A));
}

DiffReflOperator build_dunkl(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P, const CVec& v) {
  const int n = arr.dim();
  DiffReflOperator op(arr.group_ptr, n);
  const cplx bv = apply_covector(L.connection, v);
  op.add_term(0, {1, [n, v, bv](const CVec&) {
                    CoefficientJets c = CoefficientJets::zero(n);
                    c.scalar = Jet::constant(bv, n);
                    for (int k = 0; k < n; ++k) c.first[k] = Jet::constant(v(k), n);
                    return c;
                  }});
  std::set<std::size_t> poles;
  for (std::size_t h = 0; h < arr.hypertori.size(); ++h)
    if (std::abs(apply_covector(arr.hypertori[h].normal, v)) > 1e-12) poles.insert(h);
  op.add_poles(poles);
  for (std::size_t g : reflection_elements(arr)) {
    const SectionHandle F = assemble_F_Cg(arr, L, P, g);
    if (F.pole_locus.empty()) continue;
    op.add_term(g, {0, [F, v, n](const CVec& z) {
                      CoefficientJets c = CoefficientJets::zero(n);
                      const auto jets = F.jets(z);
                      for (int k = 0; k < n; ++k) c.scalar -= jets[k] * v(k);
                      return c;
                    }});
  }
  return op;
}

CoefficientNorms coefficient_norms(const DiffReflOperator& P, const std::vector<CVec>& points) {
  CoefficientNorms out;
  for (const CVec& z : points)
    for (const auto& [g, t] : P.terms()) {
      const CoefficientJets c = t.eval(z);
      out.scalar = std::max(out.scalar, std::abs(c.scalar.value));
      for (const auto& j : c.first) out.first = std::max(out.first, std::abs(j.value));
      for (const auto& j : c.second) out.second = std::max(out.second, std::abs(j.value));
    }
  return out;
}

std::vector<CVec> regular_points(const Arrangement& arr, std::size_t count, std::uint64_t seed, double margin) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CVec> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 100000 * (count + 1)) {
      throw LabError(ErrorCode::SamplePointTooClose, "could not find regular sample points");
    }
    RVec y(arr.torus().real_rank());
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = u(rng);
    const CVec z = arr.torus().point(y);
    if (min_clearance(arr.hypertori, z) >= margin) out.push_back(z);
  }
  return out;
}

void require_regular(const Arrangement& arr, const std::vector<CVec>& points, double margin) {
  for (const CVec& z : points) {
    if (min_clearance(arr.hypertori, z) < margin) {
      throw LabError(ErrorCode::SamplePointTooClose, "sample point within the excluded neighborhood of a hypertorus");
    }
  }
}

double CommutatorReport::max_zeroth() const {
  double m = 0.0;
  for (const auto& [g, v] : zeroth_order) m = std::max(m, v);
  return m;
}

CommutatorReport commutator_coefficients(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                                         const CVec& u, const CVec& v, const std::vector<CVec>& points) {
  require_regular(arr, points);
  const DiffReflOperator Du = build_dunkl(arr, L, P, u);
  const DiffReflOperator Dv = build_dunkl(arr, L, P, v);
  const DiffReflOperator K = commutator(Du, Dv);
  CommutatorReport rep;
  for (const auto& [g, t] : K.terms()) rep.zeroth_order[g] = 0.0;
  for (const CVec& z : points)
    for (const auto& [g, t] : K.terms()) {
      const CoefficientJets c = t.eval(z);
      rep.zeroth_order[g] = std::max(rep.zeroth_order[g], std::abs(c.scalar.value));
      for (const auto& j : c.first) rep.first_order = std::max(rep.first_order, std::abs(j.value));
      for (const auto& j : c.second) rep.second_order = std::max(rep.second_order, std::abs(j.value));
    }
  return rep;
}

double check_equivariance(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P, std::size_t w,
                          const CVec& v, const std::vector<CVec>& points) {
  require_regular(arr, points);
  const auto& G = arr.group();
  const int n = arr.dim();
  const DiffReflOperator lhs = compose(compose(group_operator(arr.group_ptr, n, w), build_dunkl(arr, L, P, v)),
                                       group_operator(arr.group_ptr, n, G.inverse(w)));
  const DiffReflOperator rhs = build_dunkl(arr, bundle_pullback(G, w, L), P, G[w].matrix * v);
  return coefficient_norms(combine(1.0, lhs, -1.0, rhs), points).max();
}

SectionIdentityReport check_section_identities(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                               const std::set<int>& parts, const std::vector<CVec>& points, std::uint64_t seed) {
  require_regular(arr, points);
  const auto& G = arr.group();
  const int n = arr.dim();
  const auto refl = reflection_elements(arr);
  SectionIdentityReport rep;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  auto rand_vec = [&]() {
    CVec x(n);
    for (int k = 0; k < n; ++k) x(k) = cplx{nd(rng), nd(rng)};
    return x;
  };
  const CVec u = rand_vec(), v = rand_vec();

  std::map<std::pair<std::size_t, std::size_t>, SectionHandle> cache;  // (bundle twist w, g)
  std::map<std::size_t, FlatLineBundle> twisted;
  auto bundle = [&](std::size_t w) -> const FlatLineBundle& {
    auto it = twisted.find(w);
    if (it == twisted.end()) it = twisted.emplace(w, bundle_pullback(G, w, L)).first;
    return it->second;
  };
  auto F = [&](std::size_t w, std::size_t g) -> const SectionHandle& {
    auto it = cache.find({w, g});
    if (it == cache.end()) it = cache.emplace(std::make_pair(w, g), assemble_F_Cg(arr, bundle(w), P, g)).first;
    return it->second;
  };

  if (parts.count(1)) {
    for (std::size_t w = 0; w < G.size(); ++w) {
      const CMat& Winv = G[G.inverse(w)].matrix;
      for (std::size_t g : refl) {
        const std::size_t conj = G.multiply(G.multiply(w, g), G.inverse(w));
        for (const CVec& z : points) {
          const CVec lhs = Winv.transpose() * F(0, g).value(Winv * z);
          const CVec rhs = F(w, conj).value(z);
          rep.adjoint = std::max(rep.adjoint, (lhs - rhs).norm());
        }
      }
    }
  }
  const bool part_ii = parts.count(2) > 0;
  const bool part_iii = parts.count(3) > 0;
  const bool part_iv = parts.count(4) > 0;
  if (part_ii) {
    const double h = 1e-5;
    for (std::size_t g : refl) {
      const CMat& Ginv = G[G.inverse(g)].matrix;
      const CVec shift = L.connection - Ginv.transpose() * L.connection;  // beta - beta o g^{-1}
      const cplx su = apply_covector(shift, u), sv = apply_covector(shift, v);
      for (const CVec& z : points) {
        const auto jets = F(0, g).jets(z);
        cplx du_fv{0.0, 0.0}, dv_fu{0.0, 0.0}, fv{0.0, 0.0}, fu{0.0, 0.0};
        for (int k = 0; k < n; ++k) {
          fv += jets[k].value * v(k);
          fu += jets[k].value * u(k);
          du_fv += apply_covector(jets[k].grad, u) * v(k);
          dv_fu += apply_covector(jets[k].grad, v) * u(k);
        }
        rep.symmetry = std::max(rep.symmetry, std::abs((du_fv + su * fv) - (dv_fu + sv * fu)));
        const cplx fd = (F(0, g).pair(z + h * u, v) - F(0, g).pair(z - h * u, v)) / (2.0 * h);
        rep.symmetry_fd_check = std::max(rep.symmetry_fd_check, std::abs(fd - du_fv) / std::max(1.0, std::abs(du_fv)));
      }
    }
  }
  if (part_iii || part_iv) {
    for (std::size_t k = 0; k < G.size(); ++k)
      for (const CVec& z : points) {
        cplx t_uv{0.0, 0.0}, t_vu{0.0, 0.0}, p_uv{0.0, 0.0}, p_vu{0.0, 0.0};
        for (std::size_t g : refl) {
          const std::size_t h = G.multiply(k, G.inverse(g));  // h g = k
          if (!std::binary_search(refl.begin(), refl.end(), h)) continue;
          const CVec Fg = F(0, g).value(z);
          const CVec Fh = F(g, h).value(z);
          const CMat& M = G[g].matrix;
          const cplx gv_ = apply_covector(Fg, v), gu_ = apply_covector(Fg, u);
          t_uv += gv_ * apply_covector(Fh, M * u);
          t_vu += gu_ * apply_covector(Fh, M * v);
          p_uv += gv_ * apply_covector(Fh, u);
          p_vu += gu_ * apply_covector(Fh, v);
        }
        if (part_iii) rep.twisted_quadratic = std::max(rep.twisted_quadratic, std::abs(t_uv - t_vu));
        if (part_iv) rep.plain_quadratic = std::max(rep.plain_quadratic, std::abs(p_uv - p_vu));
      }
  }
  return rep;
}

double connection_shift_check(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                              const CVec& beta, const CVec& beta_prime, const CVec& v,
                              const std::vector<CVec>& points) {
  FlatLineBundle a = L, b = L;
  a.connection = beta;
  b.connection = beta_prime;
  const int n = arr.dim();
  const cplx shift = apply_covector(beta - beta_prime, v);
  const DiffReflOperator diff = combine(1.0, build_dunkl(arr, a, P, v), -1.0, build_dunkl(arr, b, P, v));
  const DiffReflOperator expected =
      multiplication_operator(arr.group_ptr, n, [shift, n](const CVec&) { return Jet::constant(shift, n); });
  return coefficient_norms(combine(1.0, diff, -1.0, expected), points).max();
}

}  // namespace edunkl
