#include "edunkl/smith.hpp"

#include <cstdlib>
#include <numeric>
#include <utility>

namespace edunkl {

namespace {

void swap_rows(IMat& M, int a, int b) {
  if (a != b) M.row(a).swap(M.row(b));
}
void swap_cols(IMat& M, int a, int b) {
  if (a != b) M.col(a).swap(M.col(b));
}

}  // namespace

SmithForm smith_normal_form(const IMat& A) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  IMat D = A;
  IMat U = IMat::Identity(m, m);
  IMat V = IMat::Identity(n, n);

  int t = 0;
  for (; t < std::min(m, n); ++t) {
    // Pivot: smallest nonzero |entry| in the trailing block.
    for (;;) {
      int pr = -1, pc = -1;
      long long best = 0;
      for (int i = t; i < m; ++i) {
        for (int j = t; j < n; ++j) {
          const long long a = std::llabs(D(i, j));
          if (a != 0 && (best == 0 || a < best)) {
            best = a;
            pr = i;
            pc = j;
          }
        }
      }
      if (pr < 0) goto done;
      swap_rows(D, t, pr);
      swap_rows(U, t, pr);
      swap_cols(D, t, pc);
      swap_cols(V, t, pc);

      bool clean = true;
      for (int i = t + 1; i < m; ++i) {
        const long long q = D(i, t) / D(t, t);
        if (q != 0) {
          D.row(i) -= q * D.row(t);
          U.row(i) -= q * U.row(t);
        }
        if (D(i, t) != 0) clean = false;
      }
      for (int j = t + 1; j < n; ++j) {
        const long long q = D(t, j) / D(t, t);
        if (q != 0) {
          D.col(j) -= q * D.col(t);
          V.col(j) -= q * V.col(t);
        }
        if (D(t, j) != 0) clean = false;
      }
      if (!clean) continue;

      // Divisibility: fold any entry not divisible by the pivot into row t.
      bool divisible = true;
      for (int i = t + 1; i < m && divisible; ++i) {
        for (int j = t + 1; j < n; ++j) {
          if (D(i, j) % D(t, t) != 0) {
            D.row(t) += D.row(i);
            U.row(t) += U.row(i);
            divisible = false;
            break;
          }
        }
      }
      if (divisible) break;
    }
    if (D(t, t) < 0) {
      D.row(t) *= -1;
      U.row(t) *= -1;
    }
  }
done:
  SmithForm out{U, V, D, 0};
  for (int i = 0; i < std::min(m, n); ++i) {
    if (D(i, i) != 0) out.rank = i + 1;
  }
  return out;
}

}  // namespace edunkl
