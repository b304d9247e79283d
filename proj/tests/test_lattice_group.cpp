#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "edunkl/lattice_group.hpp"
#include "edunkl/smith.hpp"

using namespace edunkl;

namespace {

// Brute-force closure by repeated products of all known elements.
std::size_t brute_force_order(const std::vector<CMat>& gens, const ComplexTorus& torus) {
  std::vector<IMat> elems{IMat::Identity(torus.real_rank(), torus.real_rank())};
  std::vector<IMat> g;
  for (const auto& G : gens) g.push_back(lattice_action(G, torus));
  bool grew = true;
  while (grew) {
    grew = false;
    const auto snapshot = elems;
    for (const auto& a : snapshot)
      for (const auto& b : g) {
        IMat c = a * b;
        if (std::none_of(elems.begin(), elems.end(), [&](const IMat& e) { return e == c; })) {
          elems.push_back(c);
          grew = true;
        }
      }
  }
  return elems.size();
}

// Eigenvalue-1 multiplicity of each element; reflections have n-1.
std::size_t count_reflections_by_eigenvalues(const FiniteGroup& G) {
  std::size_t count = 0;
  for (std::size_t i = 1; i < G.size(); ++i) {
    Eigen::ComplexEigenSolver<CMat> es(G[i].matrix);
    int ones = 0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
      if (std::abs(es.eigenvalues()(k) - 1.0) < 1e-8) ++ones;
    if (ones == G.dim() - 1) ++count;
  }
  return count;
}

// Count components of X^g for n = 1 by a grid search over the fundamental cell.
std::size_t grid_fixed_points(const CMat& g, const ComplexTorus& torus, int mesh) {
  std::vector<RVec> found;
  const IMat L = lattice_action(g, torus);
  for (int a = 0; a < mesh; ++a)
    for (int b = 0; b < mesh; ++b) {
      RVec y(2);
      y << double(a) / mesh, double(b) / mesh;
      const RVec d = L.cast<double>() * y - y;
      if (std::abs(d(0) - std::round(d(0))) < 1e-9 && std::abs(d(1) - std::round(d(1))) < 1e-9) found.push_back(y);
    }
  return found.size();
}

}  // namespace

TEST_CASE("Smith normal form reproduces the matrix") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(-3, 3);
  for (int trial = 0; trial < 30; ++trial) {
    IMat A(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) A(i, j) = u(rng);
    const SmithForm s = smith_normal_form(A);
    CHECK((s.U * A * s.V - s.D).cwiseAbs().maxCoeff() == 0);
    CHECK(std::abs(s.U.cast<double>().determinant()) == doctest::Approx(1.0));
    CHECK(std::abs(s.V.cast<double>().determinant()) == doctest::Approx(1.0));
    for (int i = 0; i + 1 < s.rank; ++i) CHECK(s.D(i + 1, i + 1) % s.D(i, i) == 0);
  }
}

TEST_CASE("group closure") {
  const ComplexTorus E = product_torus(1, cplx{0.0, 1.0});
  CHECK(group_closure({}, E).size() == 1);
  CMat minus(1, 1);
  minus(0, 0) = -1.0;
  const FiniteGroup z2 = group_closure({minus}, E);
  CHECK(z2.size() == 2);
  CHECK(z2[1].matrix(0, 0) == cplx{-1.0, 0.0});

  const Family s3 = symmetric_family(3);
  const FiniteGroup G = group_closure(s3.generators, s3.torus);
  CHECK(G.size() == brute_force_order(s3.generators, s3.torus));
  CHECK(G.size() == 6);
  for (std::size_t a = 0; a < G.size(); ++a) {
    CHECK(G.multiply(a, G.inverse(a)) == 0);
    CMat P = CMat::Identity(3, 3);
    for (int k = 0; k < G[a].order; ++k) P *= G[a].matrix;
    CHECK((P - CMat::Identity(3, 3)).norm() < 1e-10);
  }

  CMat bad(1, 1);
  bad(0, 0) = cplx{0.0, 1.0};
  CHECK_THROWS_WITH_AS(group_closure({bad}, product_torus(1, triangular_modulus())),
                       doctest::Contains("NotLatticePreserving"), LabError);
  CMat two(1, 1);
  two(0, 0) = 2.0;
  CHECK_THROWS_WITH_AS(group_closure({two}, E, 50), doctest::Contains("NotFinite"), LabError);
}

TEST_CASE("reflections by eigenvalue count") {
  for (int ell : {2, 3, 4, 6}) {
    const Family f = cyclic_family(ell);
    const FiniteGroup G = group_closure(f.generators, f.torus);
    CHECK(find_reflections(G).size() == static_cast<std::size_t>(ell - 1));
  }
  const Family s3 = symmetric_family(3);
  const FiniteGroup G3 = group_closure(s3.generators, s3.torus);
  CHECK(find_reflections(G3).size() == 3);
  CHECK(count_reflections_by_eigenvalues(G3) == 3);
  const Family w = wreath_family(2, 2);
  const FiniteGroup W = group_closure(w.generators, w.torus);
  CHECK(W.size() == 8);
  CHECK(find_reflections(W).size() == 4);
  CHECK(count_reflections_by_eigenvalues(W) == 4);
}

TEST_CASE("hypertori of Z/2 and Z/4 on the square torus") {
  const Family f2 = cyclic_family(2);
  const FiniteGroup G2 = group_closure(f2.generators, f2.torus);
  const auto H2 = enumerate_hypertori(G2, f2.torus);
  REQUIRE(H2.size() == 4);
  CHECK(grid_fixed_points(G2[1].matrix, f2.torus, 40) == 4);
  std::set<std::size_t> orbits;
  for (const auto& H : H2) {
    CHECK(H.order == 2);
    orbits.insert(H.orbit_id);
    // base points are the 2-torsion points
    const RVec y = f2.torus.lattice_coords(H.base_point);
    CHECK(std::abs(2 * y(0) - std::round(2 * y(0))) < 1e-12);
    CHECK(std::abs(2 * y(1) - std::round(2 * y(1))) < 1e-12);
    CHECK(H.modulus.imag() > 0);
  }
  CHECK(orbits.size() == 4);

  const Family f4 = cyclic_family(4);
  const FiniteGroup G4 = group_closure(f4.generators, f4.torus);
  const auto H4 = enumerate_hypertori(G4, f4.torus);
  REQUIRE(H4.size() == 4);
  int n4 = 0, n2 = 0;
  std::set<std::size_t> orbit2;
  for (const auto& H : H4) {
    const RVec y = f4.torus.lattice_coords(H.base_point);
    const double a = y(0) - std::floor(y(0) + 1e-12), b = y(1) - std::floor(y(1) + 1e-12);
    if (H.order == 4) {
      ++n4;
      CHECK(((std::abs(a) < 1e-12 && std::abs(b) < 1e-12) || (std::abs(a - 0.5) < 1e-12 && std::abs(b - 0.5) < 1e-12)));
      CHECK(std::abs(G4[H.generator].det - cplx{0.0, 1.0}) < 1e-10);
    } else {
      ++n2;
      CHECK(H.order == 2);
      orbit2.insert(H.orbit_id);
    }
  }
  CHECK(n4 == 2);
  CHECK(n2 == 2);
  CHECK(orbit2.size() == 1);
}

TEST_CASE("hypertori of S_n and the wreath group") {
  for (int n : {2, 3, 4}) {
    const Family f = symmetric_family(n);
    const FiniteGroup G = group_closure(f.generators, f.torus);
    const auto Hs = enumerate_hypertori(G, f.torus);
    CHECK(Hs.size() == static_cast<std::size_t>(n * (n - 1) / 2));
    for (const auto& H : Hs) {
      CHECK(H.order == 2);
      CHECK(H.orbit_id == 0);
    }
  }
  const Family w = wreath_family(2, 2);
  const FiniteGroup W = group_closure(w.generators, w.torus);
  const auto Hw = enumerate_hypertori(W, w.torus);
  CHECK(Hw.size() == 10);
  std::set<std::size_t> orbits;
  for (const auto& H : Hw) orbits.insert(H.orbit_id);
  CHECK(orbits.size() == 5);
}

TEST_CASE("hypertorus invariants") {
  for (const Family& f : {cyclic_family(3), cyclic_family(6), symmetric_family(3), wreath_family(2, 2),
                          wreath_family(2, 4), wreath_family(2, 3)}) {
    CAPTURE(f.name);
    const FiniteGroup G = group_closure(f.generators, f.torus);
    const auto Hs = enumerate_hypertori(G, f.torus);
    std::size_t pairs = 0;
    for (std::size_t h = 0; h < Hs.size(); ++h) {
      const auto& H = Hs[h];
      const CMat& g = G[H.generator].matrix;
      CHECK(std::abs(G[H.generator].det - unit_phase(1.0 / H.order)) < 1e-10);
      // alpha annihilates V^g and is a dual eigenvector
      for (const CVec& t : H.tangent_basis) CHECK(std::abs((H.normal.transpose() * t)(0)) < 1e-10);
      const CVec ag = (H.normal.transpose() * g).transpose();
      CHECK((ag - unit_phase(1.0 / H.order) * H.normal).norm() < 1e-10);
      // g fixes H pointwise modulo Gamma
      const RVec d = f.torus.lattice_coords(g * H.generic_point - H.generic_point);
      for (Eigen::Index i = 0; i < d.size(); ++i) CHECK(std::abs(d(i) - std::round(d(i))) < 1e-9);
      CHECK(std::abs(transverse_coordinate(H, H.base_point)) < 1e-14);
      CHECK(transverse_clearance(H, H.generic_point) < 1e-12);
      CHECK(H.modulus.imag() > 0);
      CHECK(std::abs(H.modulus.real()) <= 0.5 + 1e-12);
      CHECK(std::abs(H.modulus) >= 1.0 - 1e-12);
      pairs += static_cast<std::size_t>(H.order - 1);
      // x_H + gamma has integral transverse coordinates
      for (int i = 0; i < f.torus.real_rank(); ++i) {
        IVec e = IVec::Zero(f.torus.real_rank());
        e(i) = 1;
        const cplx t = transverse_coordinate(H, H.base_point + f.torus.lattice_vector(e));
        const auto [p, q] = H.transverse_lattice_coords(f.torus, e);
        CHECK(std::abs(t - (double(p) + double(q) * H.modulus)) < 1e-10);
      }
      // W-stability
      for (std::size_t w = 0; w < G.size(); ++w) {
        const std::size_t k = image_hypertorus(Hs, G, f.torus, w, h);
        CHECK(Hs[k].order == H.order);
        CHECK(Hs[k].orbit_id == H.orbit_id);
      }
    }
    // (H, j) pairs counted through reflections g = g_H^j
    std::size_t via_reflections = 0;
    for (std::size_t g : find_reflections(G))
      for (const auto& H : Hs)
        for (int j = 1; j < H.order; ++j)
          if (H.stabilizer[static_cast<std::size_t>(j)] == g) ++via_reflections;
    CHECK(via_reflections == pairs);
  }
}

TEST_CASE("transverse coordinate for S_2") {
  const Family f = symmetric_family(2);
  const FiniteGroup G = group_closure(f.generators, f.torus);
  const auto Hs = enumerate_hypertori(G, f.torus);
  REQUIRE(Hs.size() == 1);
  CVec z(2);
  z << cplx{0.3, 0.1}, cplx{-0.2, 0.4};
  const cplx t = transverse_coordinate(Hs[0], z);
  const cplx ratio = t / (z(0) - z(1));
  // Constant normalizing scale independent of the point.
  CVec z2(2);
  z2 << cplx{0.7, -0.3}, cplx{0.1, 0.2};
  CHECK(std::abs(transverse_coordinate(Hs[0], z2) / (z2(0) - z2(1)) - ratio) < 1e-12);
  CHECK(std::abs(std::abs(ratio) - 1.0) < 1e-12);
}

TEST_CASE("dual action") {
  const Family f = symmetric_family(3);
  const FiniteGroup G = group_closure(f.generators, f.torus);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  RVec m(6);
  for (int i = 0; i < 6; ++i) m(i) = u(rng);
  CHECK((dual_action(G, 0, m) - m).norm() == 0.0);
  for (int trial = 0; trial < 50; ++trial) {
    RVec x(6);
    for (int i = 0; i < 6; ++i) x(i) = u(rng);
    const std::size_t a = trial % G.size(), b = (trial * 7 + 3) % G.size();
    CHECK((dual_action(G, G.multiply(a, b), x) - dual_action(G, a, dual_action(G, b, x))).norm() == 0.0);
  }
  const Family c = cyclic_family(2);
  const FiniteGroup Z2 = group_closure(c.generators, c.torus);
  RVec m2(2);
  m2 << 0.3, 0.7;
  CHECK((dual_action(Z2, 1, m2) + m2).norm() == 0.0);
  // omega(w alpha, gamma) = omega(alpha, w^{-1} gamma)
  for (std::size_t w = 0; w < G.size(); ++w)
    for (int i = 0; i < 6; ++i) {
      IVec e = IVec::Zero(6);
      e(i) = 1;
      const CVec gamma = f.torus.lattice_vector(e);
      const CVec wig = G[G.inverse(w)].matrix * gamma;
      CHECK(std::abs(dual_action(G, w, m)(i) - f.torus.omega(m, wig)) < 1e-12);
    }
}

TEST_CASE("family validation") {
  CHECK_THROWS_WITH_AS(cyclic_family(5), doctest::Contains("l in {2, 3, 4, 6}"), LabError);
  CHECK_THROWS_WITH_AS(cyclic_family(4, triangular_modulus()), doctest::Contains("square"), LabError);
  CHECK_THROWS_WITH_AS(wreath_family(2, 3, cplx{0.0, 1.0}), doctest::Contains("triangular"), LabError);
  CHECK_NOTHROW(cyclic_family(2, cplx{0.2, 1.3}));
}
