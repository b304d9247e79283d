#pragma once

#include <random>
#include <vector>

#include "edunkl/lattice_group.hpp"
#include "edunkl/line_bundle.hpp"

namespace edunkl::testing {

struct Setup {
  Family family;
  FiniteGroup group;
  std::vector<ReflectionHypertorus> hypertori;
};

inline Setup make_setup(const Family& f) {
  Setup s{f, group_closure(f.generators, f.torus), {}};
  s.hypertori = enumerate_hypertori(s.group, f.torus);
  return s;
}

inline std::vector<Family> sweep_families() {
  return {cyclic_family(2), cyclic_family(3), cyclic_family(4), cyclic_family(6),
          symmetric_family(2), symmetric_family(3), wreath_family(2, 2), wreath_family(2, 4)};
}

inline RVec random_multipliers(int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  RVec m(size);
  for (int i = 0; i < size; ++i) m(i) = u(rng);
  return m;
}

inline FlatLineBundle generic_bundle(const Setup& s, std::mt19937_64& rng) {
  for (;;) {
    FlatLineBundle L = make_bundle(random_multipliers(s.family.torus.real_rank(), rng),
                                   CVec::Zero(s.family.torus.dim()), s.group);
    if (L.stabilizer_free) return L;
  }
}

// Random point whose transverse clearance from every hypertorus is at least `margin`.
inline CVec regular_point(const Setup& s, std::mt19937_64& rng, double margin = 0.08) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    RVec y(s.family.torus.real_rank());
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = u(rng);
    const CVec z = s.family.torus.point(y);
    if (min_clearance(s.hypertori, z) >= margin) return z;
  }
}

inline CVec random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVec v(n);
  for (int k = 0; k < n; ++k) v(k) = cplx{g(rng), g(rng)};
  return v;
}

}  // namespace edunkl::testing
