#include <random>

#include "doctest.h"
#include "edunkl/monodromy.hpp"

using namespace edunkl;

namespace {

FlatLineBundle bundle_for(const Arrangement& arr, std::mt19937_64& rng, double beta_scale = 0.0) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::normal_distribution<double> g;
  for (;;) {
    RVec m(arr.torus().real_rank());
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
    CVec beta(arr.dim());
    for (int k = 0; k < arr.dim(); ++k) beta(k) = beta_scale * cplx{g(rng), g(rng)};
    FlatLineBundle L = make_bundle(m, beta, arr.group());
    if (L.stabilizer_free) return L;
  }
}

struct Lab {
  Arrangement arr;
  FlatLineBundle L;
  ParameterSet P;
  BraidGenerators gens;
  ConnectionMatrixForm A;
};

Lab make_lab(const Family& f, std::uint64_t seed, std::optional<double> c_scale, double beta_scale = 0.0) {
  Arrangement arr = Arrangement::build(f);
  std::mt19937_64 rng(seed);
  FlatLineBundle L = bundle_for(arr, rng, beta_scale);
  ParameterSet P = c_scale ? ParameterSet::random(arr, rng, *c_scale) : ParameterSet::zero();
  BraidGenerators gens = braid_generators(arr, default_basepoint(arr));
  ConnectionMatrixForm A = build_connection(arr, L, P);
  return {std::move(arr), std::move(L), std::move(P), std::move(gens), std::move(A)};
}

double max_entry(const CMat& M) { return M.cwiseAbs().maxCoeff(); }

CMat mono(const Lab& lab, const Word& w, const TransportOptions& opt = {}) {
  return transport(lab.A, lab.arr, word_path(lab.arr, lab.gens, w), opt).matrix;
}

}  // namespace

TEST_CASE("tau formula") {
  Arrangement arr = Arrangement::build(cyclic_family(2));
  const auto& H = arr.hypertori[0];
  for (cplx c : {cplx{0.0, 0.0}, cplx{0.3, 0.0}, cplx{0.1, -0.4}}) {
    const auto tau = tau_from_C(ParameterSet::constant(arr, c), H);
    REQUIRE(tau.size() == 2);
    CHECK(std::abs(tau[0] - kPi * kI * c) < 1e-14);
    CHECK(std::abs(tau[1] + kPi * kI * c) < 1e-14);
  }
  std::mt19937_64 rng(11);
  for (int ell : {2, 3, 4, 6}) {
    Arrangement a = Arrangement::build(cyclic_family(ell));
    const ParameterSet P = ParameterSet::random(a, rng, 0.7);
    for (const auto& Hk : a.hypertori) {
      cplx s{0.0, 0.0};
      for (cplx t : tau_from_C(P, Hk)) s += t;
      CHECK(std::abs(s) < 1e-12);
    }
  }
}

TEST_CASE("braid generators and path invariants") {
  const Arrangement z2 = Arrangement::build(cyclic_family(2));
  const auto g2 = braid_generators(z2, default_basepoint(z2));
  CHECK(g2.translations.size() == 2);
  CHECK(g2.hypertorus_loops.size() == 4);
  const Arrangement s2 = Arrangement::build(symmetric_family(2));
  const auto gs = braid_generators(s2, default_basepoint(s2));
  CHECK(gs.translations.size() == 4);
  CHECK(gs.hypertorus_loops.size() == 1);

  for (const Family& f : {cyclic_family(2), cyclic_family(3), cyclic_family(4), cyclic_family(6), symmetric_family(2),
                          symmetric_family(3), wreath_family(2, 2)}) {
    CAPTURE(f.name);
    const Arrangement arr = Arrangement::build(f);
    const auto gens = braid_generators(arr, default_basepoint(arr));
    std::vector<PathSpec> all = gens.translations;
    all.insert(all.end(), gens.hypertorus_loops.begin(), gens.hypertorus_loops.end());
    for (const PathSpec& p : all) {
      CHECK_NOTHROW(validate_path(arr, p));
      CHECK(p.clearance >= 0.05);
      CHECK((p.start() - gens.basepoint).norm() < 1e-14);
    }
    for (std::size_t i = 0; i < gens.hypertorus_loops.size(); ++i) {
      const auto& H = arr.hypertori[gens.loop_hypertorus[i]];
      CHECK(gens.hypertorus_loops[i].endpoint_group_element == arr.group().inverse(H.generator));
    }
    const PathSpec both = compose_paths(arr.group(), arr.torus(), all.back(), all.front());
    CHECK_NOTHROW(validate_path(arr, both));
    CHECK_NOTHROW(validate_path(arr, inverse_path(arr.group(), arr.torus(), all.back())));
  }
}

TEST_CASE("translation monodromy at C = 0 is the multiplier diagonal") {
  for (const Family& f : {cyclic_family(3), symmetric_family(2), cyclic_family(4)}) {
    CAPTURE(f.name);
    const Lab lab = make_lab(f, 5, std::nullopt, 0.4);
    const auto& G = lab.arr.group();
    for (const PathSpec& p : lab.gens.translations) {
      const CMat M = transport(lab.A, lab.arr, p, {}).matrix;
      const CVec gamma = lab.arr.torus().lattice_vector(p.endpoint_lattice);
      CMat expect = CMat::Zero(M.rows(), M.cols());
      for (std::size_t w = 0; w < G.size(); ++w) {
        const RVec mw = dual_action(G, w, lab.L.multipliers);
        const cplx beta_w = (lab.L.connection.transpose() * (G[G.inverse(w)].matrix * gamma))(0);
        expect(w, w) = expo(mw.dot(p.endpoint_lattice.cast<double>())) * std::exp(beta_w);
      }
      CHECK(max_entry(M - expect) < 1e-8);
    }
  }
}

TEST_CASE("flatness and reversal") {
  for (const Family& f : {cyclic_family(2), symmetric_family(2), cyclic_family(3)}) {
    CAPTURE(f.name);
    const Lab lab = make_lab(f, 21, 0.4, 0.2);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const PathSpec rect = contractible_rectangle(lab.arr, 100 + s);
      CHECK_NOTHROW(validate_path(lab.arr, rect));
      const CMat M = transport(lab.A, lab.arr, rect, {}).matrix;
      CHECK(max_entry(M - CMat::Identity(M.rows(), M.cols())) < 1e-7);
    }
    for (const PathSpec& p : {lab.gens.translations[0], lab.gens.hypertorus_loops[0]}) {
      const MonodromyMatrix fwd = transport(lab.A, lab.arr, p, {});
      const MonodromyMatrix back = transport(lab.A, lab.arr, inverse_path(lab.arr.group(), lab.arr.torus(), p), {});
      const CMat I = CMat::Identity(fwd.matrix.rows(), fwd.matrix.cols());
      CHECK(max_entry(back.matrix * fwd.matrix - I) < 2.0 * (fwd.error_estimate + back.error_estimate) + 1e-12);
      CHECK(fwd.condition_number < 1e6);
    }
  }
}

TEST_CASE("Hecke relations") {
  const Arrangement z2 = Arrangement::build(cyclic_family(2));
  for (cplx c : {cplx{0.1, 0.0}, cplx{0.3, 0.2}}) {
    CAPTURE(c);
    std::mt19937_64 rng(3);
    const FlatLineBundle L = bundle_for(z2, rng);
    const ParameterSet P = ParameterSet::constant(z2, c);
    const auto gens = braid_generators(z2, default_basepoint(z2));
    const auto A = build_connection(z2, L, P);
    std::vector<MonodromyMatrix> loops;
    for (const auto& p : gens.hypertorus_loops) loops.push_back(transport(A, z2, p, {}));
    const HeckeReport rep = hecke_check(P, z2, gens, loops);
    const std::vector<cplx> closed{-std::exp(kPi * kI * c), std::exp(-kPi * kI * c)};
    for (const auto& o : rep.orbits) {
      CHECK(o.residual < 1e-5);
      CHECK(o.det_residual < 1e-5);
      CHECK(o.orientation == "as-stated");
      for (cplx ev : o.observed) {
        const double d = std::min(std::abs(ev - closed[0]), std::abs(ev - closed[1]));
        CHECK(d < 1e-5);
      }
    }
  }

  std::mt19937_64 rng(9);
  const Lab s2 = make_lab(symmetric_family(2), 9, 0.5);
  std::vector<MonodromyMatrix> loops;
  for (const auto& p : s2.gens.hypertorus_loops) loops.push_back(transport(s2.A, s2.arr, p, {}));
  const HeckeReport rep = hecke_check(s2.P, s2.arr, s2.gens, loops);
  CHECK(rep.max_residual() < 1e-5);
  CHECK(rep.orbits[0].eigenvalue_distance < 1e-5);
}

TEST_CASE("orientation resolved in the perturbative regime") {
  const Lab lab = make_lab(cyclic_family(3), 17, 0.01);
  std::vector<MonodromyMatrix> loops;
  for (const auto& p : lab.gens.hypertorus_loops) loops.push_back(transport(lab.A, lab.arr, p, {}));
  const HeckeReport rep = hecke_check(lab.P, lab.arr, lab.gens, loops);
  for (const auto& o : rep.orbits) {
    CHECK(o.orientation == "as-stated");
    CHECK(o.variant_residuals.at("conjugate-roots") > 1e-3);
    CHECK(o.variant_residuals.at("inverse-loop") > 1e-3);
  }
}

TEST_CASE("degeneration at C = 0") {
  for (const Family& f : {cyclic_family(2), cyclic_family(3), cyclic_family(4), cyclic_family(6), symmetric_family(2)}) {
    CAPTURE(f.name);
    const Lab lab = make_lab(f, 2, std::nullopt);
    const int nt = static_cast<int>(lab.gens.translations.size());
    for (std::size_t i = 0; i < lab.gens.hypertorus_loops.size(); ++i) {
      const CMat T = mono(lab, {nt + static_cast<int>(i)});
      CMat P = CMat::Identity(T.rows(), T.cols());
      for (int k = 0; k < lab.arr.hypertori[lab.gens.loop_hypertorus[i]].order; ++k) P = (P * T).eval();
      CHECK(max_entry(P - CMat::Identity(T.rows(), T.cols())) < 1e-6);
    }
  }
}

TEST_CASE("composition law and abelian translations") {
  const Lab lab = make_lab(cyclic_family(3), 31, 0.3, 0.2);
  const int letters = static_cast<int>(lab.gens.translations.size() + lab.gens.hypertorus_loops.size());
  std::vector<CMat> single;
  for (int l = 0; l < letters; ++l) single.push_back(mono(lab, {l}));
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> pick(0, letters - 1);
  for (int trial = 0; trial < 10; ++trial) {
    const int a = pick(rng), b = pick(rng);
    CHECK(max_entry(mono(lab, {a, b}) - single[a] * single[b]) < 1e-6);
  }
}

// Two translation loops commute when the parallelogram they span misses every
// hypertorus; otherwise their commutator encircles it and only C = 0 forces it to vanish.
TEST_CASE("translation monodromies commute") {
  for (const Family& f : {cyclic_family(2), symmetric_family(2), symmetric_family(3)}) {
    CAPTURE(f.name);
    for (std::optional<double> scale : {std::optional<double>{}, std::optional<double>{0.3}}) {
      const Lab lab = make_lab(f, 31, scale, 0.2);
      const int nt = static_cast<int>(lab.gens.translations.size());
      std::vector<CMat> M;
      for (int a = 0; a < nt; ++a) M.push_back(mono(lab, {a}));
      int free_pairs = 0;
      for (int a = 0; a < nt; ++a)
        for (int b = a + 1; b < nt; ++b) {
          const CVec ga = lab.arr.torus().lattice_basis()[a], gb = lab.arr.torus().lattice_basis()[b];
          double fill = 1e300;
          for (int i = 0; i <= 60; ++i)
            for (int j = 0; j <= 60; ++j)
              fill = std::min(fill, min_clearance(lab.arr.hypertori, lab.gens.basepoint + (i / 60.0) * ga + (j / 60.0) * gb));
          if (scale && fill < 0.05) continue;
          ++free_pairs;
          CHECK(max_entry(M[a] * M[b] - M[b] * M[a]) < 1e-6);
        }
      if (scale && f.torus.dim() > 1) CHECK(free_pairs > 0);
    }
  }
}

TEST_CASE("homotopic routes agree") {
  const Lab lab = make_lab(cyclic_family(2), 41, 0.3);
  const Lab s2 = make_lab(symmetric_family(2), 41, 0.3);
  for (const Lab* l : {&lab, &s2}) {
    for (std::size_t i = 0; i < l->gens.hypertorus_loops.size(); ++i) {
      const std::size_t h = l->gens.loop_hypertorus[i];
      const CMat base = transport(l->A, l->arr, l->gens.hypertorus_loops[i], {}).matrix;
      BraidOptions wider;
      wider.arc_radius = 0.15;
      std::vector<BraidOptions> variants{wider};
      for (double off : {0.4, -0.4, 0.2, -0.2}) {
        BraidOptions o;
        o.staging_angle_offset = off;
        variants.push_back(o);
      }
      int compared = 0;
      for (const BraidOptions& o : variants) {
        const PathSpec p = hypertorus_loop(l->arr, l->gens.basepoint, h, o);
        // A fallback onto another lift of H is a conjugate class, not a homotopic route.
        if (p.endpoint_lattice != l->gens.hypertorus_loops[i].endpoint_lattice) continue;
        ++compared;
        CHECK(max_entry(transport(l->A, l->arr, p, {}).matrix - base) < 1e-6);
      }
      CHECK(compared >= 2);
    }
  }
}

TEST_CASE("duality between the representation and the Dunkl system") {
  const Arrangement arr = Arrangement::build(cyclic_family(2));
  std::mt19937_64 rng(13);
  const FlatLineBundle L = bundle_for(arr, rng, 0.2);
  const ParameterSet P = ParameterSet::random(arr, rng, 0.4);
  const auto gens = braid_generators(arr, default_basepoint(arr));
  const auto rep = build_connection(arr, L, P);
  const auto dual = vectorized_dunkl_system(arr, L, P);
  const int letters = static_cast<int>(gens.translations.size() + gens.hypertorus_loops.size());
  std::vector<Word> words{{}};
  std::uniform_int_distribution<int> len(1, 4), pick(-letters, letters - 1);
  for (int i = 0; i < 10; ++i) {
    Word w(static_cast<std::size_t>(len(rng)));
    for (int& l : w) l = pick(rng);
    words.push_back(w);
  }
  const auto entries = dual_consistency_check(rep, dual, arr, gens, words, {});
  CHECK(std::abs(entries[0].trace_rep - 2.0) < 1e-12);
  CHECK(std::abs(entries[0].trace_dual - 2.0) < 1e-12);
  for (const auto& e : entries) CHECK(e.residual < 1e-5);
}

TEST_CASE("commutant dimension") {
  const CMat I = CMat::Identity(3, 3);
  CHECK(irreducibility_evidence({I, I}).dimension == 9);

  for (std::optional<double> scale : {std::optional<double>{}, std::optional<double>{0.3}}) {
    const Lab lab = make_lab(cyclic_family(2), 55, scale);
    std::vector<CMat> mats;
    const int letters = static_cast<int>(lab.gens.translations.size() + lab.gens.hypertorus_loops.size());
    for (int l = 0; l < letters; ++l) mats.push_back(mono(lab, {l}));
    const CommutantReport rep = irreducibility_evidence(mats);
    CHECK(rep.dimension == 1);
    CHECK(rep.gap_ratio > 1e3);
  }
}

TEST_CASE("parameter family probe") {
  const Lab lab = make_lab(cyclic_family(2), 61, std::nullopt);
  TransportOptions fast;
  fast.estimate_error = false;
  // d/dm_p of the trace of translation i is 2 pi i sum_w L(w^-1)(p, i) e(m_w . e_i).
  const auto& G = lab.arr.group();
  const double h = 1e-5;
  for (int p = 0; p < 2; ++p) {
    RVec mp = lab.L.multipliers, mm = lab.L.multipliers;
    mp(p) += h;
    mm(p) -= h;
    const auto tp = translation_traces(lab.arr, make_bundle(mp, lab.L.connection, G), lab.P, lab.gens, fast);
    const auto tm = translation_traces(lab.arr, make_bundle(mm, lab.L.connection, G), lab.P, lab.gens, fast);
    for (int i = 0; i < 2; ++i) {
      cplx expect{0.0, 0.0};
      for (std::size_t w = 0; w < G.size(); ++w) {
        const RVec mw = dual_action(G, w, lab.L.multipliers);
        expect += kTwoPiI * static_cast<double>(G[G.inverse(w)].lattice_matrix(p, i)) * expo(mw(i));
      }
      CHECK(std::abs((tp[i] - tm[i]) / (2.0 * h) - expect) < 1e-6);
    }
  }
  const Lab generic = make_lab(cyclic_family(2), 62, 0.3);
  const ParameterProbeReport rep = parameter_family_probe(generic.arr, generic.L, generic.P);
  CHECK(rep.rank == rep.expected);
  CHECK(rep.expected == 2);
}

TEST_CASE("halving tolerances stays within the error estimate") {
  const Lab lab = make_lab(symmetric_family(2), 71, 0.4);
  TransportOptions half;
  half.ode.rtol *= 0.25;
  half.ode.atol *= 0.25;
  const int letters = static_cast<int>(lab.gens.translations.size() + lab.gens.hypertorus_loops.size());
  for (int l = 0; l < letters; ++l) {
    const PathSpec p = word_path(lab.arr, lab.gens, {l});
    const MonodromyMatrix a = transport(lab.A, lab.arr, p, {});
    const MonodromyMatrix b = transport(lab.A, lab.arr, p, half);
    CHECK(max_entry(a.matrix - b.matrix) <= a.error_estimate);
  }
}
