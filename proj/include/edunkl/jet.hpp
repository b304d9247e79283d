#pragma once

#include <algorithm>

#include "edunkl/types.hpp"

namespace edunkl {

/// Second-order Taylor data of a holomorphic function on C^n at a point.
/// `order` is the highest derivative order that is valid; composition of
/// differential operators consumes one order per differentiation.
struct Jet {
  cplx value{0.0, 0.0};
  CVec grad;
  CMat hess;
  int order = 2;

  static Jet zero(int n, int order = 2) { return {cplx{0.0, 0.0}, CVec::Zero(n), CMat::Zero(n, n), order}; }
  static Jet constant(cplx c, int n) { return {c, CVec::Zero(n), CMat::Zero(n, n), 2}; }

  Jet& operator+=(const Jet& o) {
    value += o.value;
    grad += o.grad;
    hess += o.hess;
    order = std::min(order, o.order);
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    value -= o.value;
    grad -= o.grad;
    hess -= o.hess;
    order = std::min(order, o.order);
    return *this;
  }
  Jet& operator*=(cplx c) {
    value *= c;
    grad *= c;
    hess *= c;
    return *this;
  }
};

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator*(Jet a, cplx c) { return a *= c; }
inline Jet operator*(cplx c, Jet a) { return a *= c; }

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet out;
  out.value = a.value * b.value;
  out.grad = a.value * b.grad + b.value * a.grad;
  out.hess = a.value * b.hess + b.value * a.hess + a.grad * b.grad.transpose() + b.grad * a.grad.transpose();
  out.order = std::min(a.order, b.order);
  return out;
}

/// Jet of d/dz_k of the function; loses one order.
inline Jet partial(const Jet& a, Eigen::Index k) {
  const Eigen::Index n = a.grad.size();
  Jet out;
  out.value = a.grad(k);
  out.grad = a.hess.col(k);
  out.hess = CMat::Zero(n, n);
  out.order = a.order - 1;
  return out;
}

/// Given the jet of p at y = G z, the jet of z -> p(G z) at z.
inline Jet pull_back_linear(const Jet& a, const CMat& G) {
  return {a.value, G.transpose() * a.grad, G.transpose() * a.hess * G, a.order};
}

/// Jet at z of z -> h(l(z)) for a linear form l (coefficients `l`) and a
/// one-variable function with value/d1/d2 at l(z).
inline Jet along_linear_form(cplx h, cplx h1, cplx h2, const CVec& l) {
  return {h, h1 * l, h2 * (l * l.transpose()), 2};
}

}  // namespace edunkl
