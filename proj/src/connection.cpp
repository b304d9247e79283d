#include "edunkl/connection.hpp"

#include <cmath>

namespace edunkl {

namespace {

cplx apply_covector(const CVec& a, const CVec& v) {
  cplx s{0.0, 0.0};
  for (Eigen::Index k = 0; k < v.size(); ++k) s += a(k) * v(k);
  return s;
}

// Covector value of an entry and its z-gradient (row k: gradient of component k).
struct EntryJet {
  CVec value;
  CMat grad;
};

EntryJet entry_jet(const ConnectionMatrixForm::Entry& e, const CVec& z, bool with_grad) {
  const auto jets = e.section.jets(e.pre * z);
  const Eigen::Index n = z.size();
  EntryJet out{CVec::Zero(n), CMat::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Jet& s = jets[static_cast<std::size_t>(i)];
    const CVec g = with_grad ? CVec(e.pre.transpose() * s.grad) : CVec();
    for (Eigen::Index k = 0; k < n; ++k) {
      out.value(k) += e.post(i, k) * s.value;
      if (with_grad) out.grad.row(k) += e.post(i, k) * g.transpose();
    }
  }
  return out;
}

}  // namespace

CMat ConnectionMatrixForm::matrix(const CVec& v, const CVec& z) const {
  const int N = size();
  CMat A = CMat::Zero(N, N);
  for (int w = 0; w < N; ++w) A(w, w) = apply_covector(diagonal[w], v);
  for (const Entry& e : entries) {
    A(e.row, e.col) += e.coefficient * apply_covector(entry_jet(e, z, false).value, v);
  }
  return A;
}

std::vector<CMat> ConnectionMatrixForm::matrices(const CVec& z) const {
  const int N = size();
  std::vector<CMat> out(static_cast<std::size_t>(dim), CMat::Zero(N, N));
  for (int w = 0; w < N; ++w)
    for (int k = 0; k < dim; ++k) out[k](w, w) = diagonal[w](k);
  for (const Entry& e : entries) {
    const CVec c = entry_jet(e, z, false).value;
    for (int k = 0; k < dim; ++k) out[k](e.row, e.col) += e.coefficient * c(k);
  }
  return out;
}

CMat ConnectionMatrixForm::derivative(const CVec& u, const CVec& v, const CVec& z) const {
  const int N = size();
  CMat D = CMat::Zero(N, N);
  for (const Entry& e : entries) {
    const EntryJet j = entry_jet(e, z, true);
    // d/du of sum_k c_k(z) v_k
    cplx s{0.0, 0.0};
    for (int k = 0; k < dim; ++k) s += v(k) * apply_covector(j.grad.row(k).transpose(), u);
    D(e.row, e.col) += e.coefficient * s;
  }
  return D;
}

CMat ConnectionMatrixForm::gluing_matrix(std::size_t g, const IVec& gamma) const {
  const int N = size();
  CMat Q = CMat::Zero(N, N);
  for (int w = 0; w < N; ++w) {
    Q(static_cast<Eigen::Index>(group->multiply(g, static_cast<std::size_t>(w))), w) =
        std::conj(automorphy_factor(component_multipliers[w], gamma));
  }
  return Q;
}

ConnectionMatrixForm build_connection(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P) {
  require_stabilizer_free(L);
  const auto& G = arr.group();
  const int n = arr.dim();
  ConnectionMatrixForm A;
  A.kind = ConnectionKind::Representation;
  A.group = arr.group_ptr;
  A.dim = n;
  const CMat I = CMat::Identity(n, n);
  for (std::size_t w = 0; w < G.size(); ++w) {
    const FlatLineBundle Lw = bundle_pullback(G, w, L);
    A.diagonal.push_back(-Lw.connection);
    A.component_multipliers.push_back(dual_multipliers(Lw.multipliers));
    for (const auto& [h, j] : arr.strata()) {
      const cplx C = P.C(arr.hypertori[h], j);
      if (C == cplx{0.0, 0.0}) continue;
      const std::size_t g = arr.hypertori[h].stabilizer[static_cast<std::size_t>(j)];
      A.entries.push_back({G.multiply(g, w), w, h, j, C, section_f(arr.torus(), G, Lw, arr.hypertori, h, j), I, I});
    }
  }
  return A;
}

ConnectionMatrixForm vectorized_dunkl_system(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P) {
  require_stabilizer_free(L);
  const auto& G = arr.group();
  const int n = arr.dim();
  ConnectionMatrixForm A;
  A.kind = ConnectionKind::DunklSystem;
  A.group = arr.group_ptr;
  A.dim = n;
  std::map<std::pair<std::size_t, int>, SectionHandle> sections;
  for (const auto& [h, j] : arr.strata()) sections[{h, j}] = section_f(arr.torus(), G, L, arr.hypertori, h, j);
  for (std::size_t w = 0; w < G.size(); ++w) {
    const CMat& winv = G[G.inverse(w)].matrix;
    A.diagonal.push_back(winv.transpose() * L.connection);
    A.component_multipliers.push_back(bundle_pullback(G, w, L).multipliers);
    for (const auto& [h, j] : arr.strata()) {
      const cplx C = P.C(arr.hypertori[h], j);
      if (C == cplx{0.0, 0.0}) continue;
      const std::size_t g = arr.hypertori[h].stabilizer[static_cast<std::size_t>(j)];
      A.entries.push_back({w, G.multiply(w, g), h, j, -C, sections.at({h, j}), winv, winv});
    }
  }
  return A;
}

CVec apply_rho_dv(const ConnectionMatrixForm& A, const CVec& v, const VectorJetFn& Y, const CVec& z) {
  const auto jets = Y(z);
  const int N = A.size();
  CVec y(N), dy(N);
  for (int w = 0; w < N; ++w) {
    y(w) = jets[w].value;
    dy(w) = apply_covector(jets[w].grad, v);
  }
  return dy + A.matrix(v, z) * y;
}

double mixed_partial_residual(const ConnectionMatrixForm& A, const CVec& u, const CVec& v, const VectorJetFn& Y,
                              const CVec& z) {
  const auto jets = Y(z);
  const int N = A.size();
  CVec y(N), du(N), dv(N), duv(N), dvu(N);
  for (int w = 0; w < N; ++w) {
    y(w) = jets[w].value;
    du(w) = apply_covector(jets[w].grad, u);
    dv(w) = apply_covector(jets[w].grad, v);
    duv(w) = (u.transpose() * jets[w].hess * v)(0);
    dvu(w) = (v.transpose() * jets[w].hess * u)(0);
  }
  const CMat Au = A.matrix(u, z), Av = A.matrix(v, z);
  const CVec uv = duv + A.derivative(u, v, z) * y + Av * du + Au * dv + Au * (Av * y);
  const CVec vu = dvu + A.derivative(v, u, z) * y + Au * dv + Av * du + Av * (Au * y);
  return (uv - vu).norm();
}

double equivariance_residual(const ConnectionMatrixForm& A, std::size_t g, const CVec& v, const CVec& z) {
  const auto& G = *A.group;
  const CMat& M = G[g].matrix;
  const CMat lhs = A.matrix(M * v, z);
  const CMat rhs = A.matrix(v, G[G.inverse(g)].matrix * z);
  double worst = 0.0;
  const int N = A.size();
  for (int w = 0; w < N; ++w)
    for (int x = 0; x < N; ++x) {
      const auto gw = static_cast<Eigen::Index>(G.multiply(g, static_cast<std::size_t>(w)));
      const auto gx = static_cast<Eigen::Index>(G.multiply(g, static_cast<std::size_t>(x)));
      worst = std::max(worst, std::abs(lhs(gw, gx) - rhs(w, x)));
    }
  return worst;
}

DunklOpdamForm::DunklOpdamForm(const std::vector<ReflectionHypertorus>& hypertori, double multiple)
    : hypertori_(hypertori), multiple_(multiple) {
  for (const auto& H : hypertori_) theta_.push_back(std::make_shared<const ThetaEvaluator>(H.modulus));
}

CVec DunklOpdamForm::value(std::size_t h, const CVec& z) const {
  const auto& H = hypertori_.at(h);
  const cplx t = transverse_coordinate(H, z);
  return (multiple_ * theta_[h]->log_derivative(t).first) * (H.normal / H.scale);
}

CVec dunkl_opdam_action(const ConnectionMatrixForm& A, const Arrangement& arr, const DunklOpdamForm& phi,
                        const CVec& v, std::size_t w, const ScalarJetFn& section, const CVec& z) {
  if (A.kind != ConnectionKind::Representation) {
    throw LabError(ErrorCode::Unsupported, "Dunkl-Opdam action is defined on the representation form");
  }
  const auto& G = arr.group();
  CVec out = CVec::Zero(A.size());
  const Jet b = section(z);
  out(static_cast<Eigen::Index>(w)) += apply_covector(b.grad, v) + apply_covector(A.diagonal[w], v) * b.value;
  for (const auto& e : A.entries) {
    if (e.col != w) continue;
    const auto& H = arr.hypertori[e.hypertorus];
    const std::size_t g = H.stabilizer[static_cast<std::size_t>(e.power)];
    const cplx moved = section(G[G.inverse(g)].matrix * z).value;
    out(static_cast<Eigen::Index>(e.row)) += e.coefficient * (apply_covector(entry_jet(e, z, false).value, v) * b.value -
                                                              apply_covector(phi.value(e.hypertorus, z), v) * moved);
  }
  return out;
}

HolomorphyReport holomorphy_check(const Arrangement& arr, const FlatLineBundle& L, const ParameterSet& P,
                                  double phi_multiple, const std::vector<double>& radii,
                                  int sections_per_component, std::uint64_t seed, std::size_t max_components) {
  const auto tau = product_modulus(arr.torus());
  if (!tau) throw LabError(ErrorCode::Unsupported, "probe sections need a product lattice");
  const ConnectionMatrixForm A = build_connection(arr, L, P);
  const DunklOpdamForm phi(arr.hypertori, phi_multiple);
  const auto& G = arr.group();
  const int n = arr.dim();
  const ThetaEvaluator ev(*tau);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> nd;
  HolomorphyReport rep;
  const std::size_t comps = max_components == 0 ? G.size() : std::min<std::size_t>(max_components, G.size());
  constexpr int nodes = 64;
  for (std::size_t h = 0; h < arr.hypertori.size(); ++h) {
    const auto& H = arr.hypertori[h];
    const CVec p = H.generic_point;
    const CVec vH = transverse_direction(H);
    for (std::size_t w = 0; w < comps; ++w)
      for (int s = 0; s < sections_per_component; ++s) {
        // Probe poles must stay clear of every image of p the action evaluates at.
        CVec shifts(n);
        for (;;) {
          for (int k = 0; k < n; ++k) shifts(k) = unif(rng) + unif(rng) * *tau;
          double clearance = 1e9;
          for (std::size_t g = 0; g < G.size(); ++g) {
            const CVec q = G[g].matrix * p;
            for (int k = 0; k < n; ++k) clearance = std::min(clearance, ev.lattice_distance(q(k) - shifts(k)));
          }
          if (clearance > 0.15) break;
        }
        const ScalarJetFn probe = quasi_periodic_test_function(arr.torus(), A.component_multipliers[w], shifts);
        CVec v(n);
        for (int k = 0; k < n; ++k) v(k) = cplx{nd(rng), nd(rng)};
        double first = 0.0, last = 0.0;
        for (std::size_t ri = 0; ri < radii.size(); ++ri) {
          const double r = radii[ri];
          double biggest = 0.0;
          CVec a = CVec::Zero(A.size());
          for (int q = 0; q < nodes; ++q) {
            const cplx e = std::polar(r, 2.0 * kPi * q / nodes);
            const CVec out = dunkl_opdam_action(A, arr, phi, v, w, probe, p + e * vH);
            a += out * e;
            biggest = std::max(biggest, out.norm());
          }
          a /= static_cast<double>(nodes);
          rep.max_laurent = std::max(rep.max_laurent, a.cwiseAbs().maxCoeff());
          ++rep.cases;
          if (ri == 0) first = biggest;
          last = biggest;
        }
        if (first > 0.0) rep.max_growth = std::max(rep.max_growth, last / first);
      }
  }
  return rep;
}

}  // namespace edunkl
