#pragma once

// n x n endomorphisms A^i_j over R^n with the flat metric, plus the small
// dense linear algebra the library needs (matrix exponential, inverses,
// symmetric eigensolver).  The pairing on skew matrices is <A,B> = -tr(AB),
// the bi-invariant metric of SO(n); the fixed so(n) basis is
// (E_ab)^i_j = d_ai d_bj - d_bi d_aj for a < b, with <E_ab,E_ab> = 2.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hflow/tensor.hpp"

namespace hflow {

class Endo {
 public:
  int n = 0;
  std::array<double, kMaxDim * kMaxDim> m{};  // row-major, entry (i,j) = A^i_j

  Endo() = default;
  explicit Endo(int n_) : n(n_) {
    if (n < 2 || n > kMaxDim) throw std::invalid_argument("Endo: bad dimension");
  }

  static Endo identity(int n) {
    Endo a(n);
    for (int i = 0; i < n; ++i) a(i, i) = 1.0;
    return a;
  }
  static Endo zero(int n) { return Endo(n); }

  double& operator()(int i, int j) { return m[std::size_t(i * kMaxDim + j)]; }
  double operator()(int i, int j) const { return m[std::size_t(i * kMaxDim + j)]; }

  Endo& operator+=(const Endo& o) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) (*this)(i, j) += o(i, j);
    return *this;
  }
  Endo& operator-=(const Endo& o) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) (*this)(i, j) -= o(i, j);
    return *this;
  }
  Endo& operator*=(double s) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) (*this)(i, j) *= s;
    return *this;
  }
  friend Endo operator+(Endo a, const Endo& b) { return a += b; }
  friend Endo operator-(Endo a, const Endo& b) { return a -= b; }
  friend Endo operator*(double s, Endo a) { return a *= s; }

  friend Endo operator*(const Endo& a, const Endo& b) {
    Endo c(a.n);
    for (int i = 0; i < a.n; ++i)
      for (int k = 0; k < a.n; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (int j = 0; j < a.n; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  Endo transpose() const {
    Endo t(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double trace() const {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += (*this)(i, i);
    return s;
  }

  double max_abs() const {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s = std::max(s, std::abs((*this)(i, j)));
    return s;
  }

  double norm1() const {  // max column sum
    double best = 0.0;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += std::abs((*this)(i, j));
      best = std::max(best, s);
    }
    return best;
  }

  double skew_residual() const {
    double r = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r = std::max(r, std::abs((*this)(i, j) + (*this)(j, i)));
    return r;
  }
};

// Frobenius pairing; equals -tr(AB) when both arguments are skew.
inline double frob(const Endo& a, const Endo& b) {
  double s = 0.0;
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) s += a(i, j) * b(i, j);
  return s;
}

// Bi-invariant pairing <A,B> = -tr(AB) on so(n).
inline double so_inner(const Endo& a, const Endo& b) {
  double s = 0.0;
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) s += a(i, j) * b(j, i);
  return -s;
}

inline double norm2(const Endo& a) { return frob(a, a); }
inline double nrm(const Endo& a) { return std::sqrt(frob(a, a)); }

inline Endo bracket(const Endo& a, const Endo& b) { return a * b - b * a; }

// The skew part is formed as A - S so that S + C reassembles A bit-exactly.
inline void sym_skew_split(const Endo& a, Endo& sym, Endo& skew) {
  sym = Endo(a.n);
  skew = Endo(a.n);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) sym(i, j) = 0.5 * (a(i, j) + a(j, i));
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) skew(i, j) = a(i, j) - sym(i, j);
}

inline Endo sym_part(const Endo& a) {
  Endo s(a.n), c(a.n);
  sym_skew_split(a, s, c);
  return s;
}
inline Endo skew_part(const Endo& a) {
  Endo s(a.n), c(a.n);
  sym_skew_split(a, s, c);
  return c;
}

// so(n) basis element E_ab, a < b.
inline Endo so_basis(int n, int a, int b) {
  Endo e(n);
  e(a, b) = 1.0;
  e(b, a) = -1.0;
  return e;
}

inline int so_dim(int n) { return n * (n - 1) / 2; }

// Enumerates the (a,b) pairs, a < b, in the fixed basis order.
inline std::vector<std::pair<int, int>> so_basis_pairs(int n) {
  std::vector<std::pair<int, int>> out;
  out.reserve(std::size_t(so_dim(n)));
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) out.emplace_back(a, b);
  return out;
}

// exp(t*C) for skew C: scaling-and-squaring with a fixed Taylor order.
// Order 8 at threshold 0.1 keeps the relative error below 1e-13 for
// |tC| <= 10; skewness makes the result orthogonal with det +1.
inline Endo expm_skew(const Endo& c, double t, double skew_tol = 1e-12) {
  const double scale_rel = std::max(1.0, c.max_abs());
  if (c.skew_residual() > skew_tol * scale_rel)
    throw std::invalid_argument("expm_skew: input is not skew");
  Endo x = t * c;
  int s = 0;
  double a = x.norm1();
  while (a > 0.1 && s < 60) {
    x *= 0.5;
    a *= 0.5;
    ++s;
  }
  // Horner evaluation of the degree-8 Taylor polynomial
  const int order = 8;
  Endo r = Endo::identity(c.n);
  for (int k = order; k >= 1; --k) {
    r = (1.0 / k) * (x * r);
    for (int i = 0; i < c.n; ++i) r(i, i) += 1.0;
  }
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

// Gauss-Jordan inverse with partial pivoting; also reports the 1-norm
// condition estimate.  Throws on (numerically) singular input.
inline Endo inverse(const Endo& a, double* cond_out = nullptr) {
  const int n = a.n;
  double work[kMaxDim][2 * kMaxDim] = {};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) work[i][j] = a(i, j);
    work[i][n + i] = 1.0;
  }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(work[r][col]) > std::abs(work[piv][col])) piv = r;
    if (std::abs(work[piv][col]) < 1e-300)
      throw std::domain_error("inverse: singular matrix");
    if (piv != col)
      for (int j = 0; j < 2 * n; ++j) std::swap(work[piv][j], work[col][j]);
    const double d = 1.0 / work[col][col];
    for (int j = 0; j < 2 * n; ++j) work[col][j] *= d;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = work[r][col];
      if (f == 0.0) continue;
      for (int j = 0; j < 2 * n; ++j) work[r][j] -= f * work[col][j];
    }
  }
  Endo inv(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) inv(i, j) = work[i][n + j];
  if (cond_out) *cond_out = a.norm1() * inv.norm1();
  return inv;
}

// ---------------------------------------------------------------------------
// Cyclic Jacobi eigensolver for small symmetric matrices (m <= 64).
// Used by the rank/kernel oracles; robustness over speed.

struct SymEig {
  int m = 0;
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // column k = eigenvector of values[k], row-major
  double value(int k) const { return values[std::size_t(k)]; }
  double vec(int i, int k) const { return vectors[std::size_t(i * m + k)]; }
};

inline SymEig sym_eig(std::vector<double> a, int m) {
  SymEig out;
  out.m = m;
  std::vector<double> v(std::size_t(m * m), 0.0);
  for (int i = 0; i < m; ++i) v[std::size_t(i * m + i)] = 1.0;
  auto A = [&](int i, int j) -> double& { return a[std::size_t(i * m + j)]; };
  auto V = [&](int i, int j) -> double& { return v[std::size_t(i * m + j)]; };
  double scale = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) scale = std::max(scale, std::abs(A(i, j)));
  if (scale == 0.0) scale = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) off = std::max(off, std::abs(A(i, j)));
    if (off < 1e-15 * scale) break;
    for (int p = 0; p < m; ++p)
      for (int q = p + 1; q < m; ++q) {
        if (std::abs(A(p, q)) < 1e-18 * scale) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cth = 1.0 / std::sqrt(t * t + 1.0);
        const double sth = t * cth;
        for (int k = 0; k < m; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = cth * akp - sth * akq;
          A(k, q) = sth * akp + cth * akq;
        }
        for (int k = 0; k < m; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = cth * apk - sth * aqk;
          A(q, k) = sth * apk + cth * aqk;
        }
        for (int k = 0; k < m; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = cth * vkp - sth * vkq;
          V(k, q) = sth * vkp + cth * vkq;
        }
      }
  }
  // sort ascending
  std::vector<int> order(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i) order[std::size_t(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return A(x, x) < A(y, y); });
  out.values.resize(std::size_t(m));
  out.vectors.assign(std::size_t(m * m), 0.0);
  for (int k = 0; k < m; ++k) {
    out.values[std::size_t(k)] = A(order[std::size_t(k)], order[std::size_t(k)]);
    for (int i = 0; i < m; ++i)
      out.vectors[std::size_t(i * m + k)] = V(i, order[std::size_t(k)]);
  }
  return out;
}

}  // namespace hflow
