#pragma once

#include "edunkl/types.hpp"

namespace edunkl {

/// U * A * V = D with U, V unimodular and D diagonal, d_1 | d_2 | ... (d_i >= 0).
struct SmithForm {
  IMat U;
  IMat V;
  IMat D;
  int rank = 0;

  long long diagonal(int i) const { return D(i, i); }
};

SmithForm smith_normal_form(const IMat& A);

}  // namespace edunkl
