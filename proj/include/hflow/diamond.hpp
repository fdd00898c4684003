#pragma once

// Infinitesimal gl(n) action on tensors and its group-level counterpart.
//
// The group acts on the right: vectors by g^{-1}, covectors by composition
// with g -- i.e. (g.t)^{a..}_{b..} = t^{i..}_{j..} (g^{-1})^a_i ... g^j_b ...
// Differentiating along e^{tA} gives the coordinate rule
//   (A<>t)^{i1..ip}_{j1..jq} = - sum_r A^{ir}_m t^{..m..}_{..}
//                              + sum_s A^m_{js} t^{..}_{..m..}.

#include "hflow/endo.hpp"
#include "hflow/tensor.hpp"

namespace hflow {

namespace detail {

// out[... slot=a ...] += sum_m M(a,m) * t[... slot=m ...]
inline void accumulate_slot_apply(const DenseTensor& t, int slot, const Endo& mat,
                                  bool transpose, double coeff, DenseTensor& out) {
  const int n = t.shape.n;
  const int rank = t.shape.rank();
  const std::size_t inner_sz = ipow(std::size_t(n), rank - slot - 1);
  const std::size_t outer_sz = ipow(std::size_t(n), slot);
  const std::size_t block = std::size_t(n) * inner_sz;
  for (std::size_t o = 0; o < outer_sz; ++o) {
    const double* tin = t.data.data() + o * block;
    double* tout = out.data.data() + o * block;
    for (int a = 0; a < n; ++a)
      for (int m = 0; m < n; ++m) {
        const double w = coeff * (transpose ? mat(m, a) : mat(a, m));
        if (w == 0.0) continue;
        const double* src = tin + std::size_t(m) * inner_sz;
        double* dst = tout + std::size_t(a) * inner_sz;
        for (std::size_t i = 0; i < inner_sz; ++i) dst[i] += w * src[i];
      }
  }
}

}  // namespace detail

inline DenseTensor diamond(const Endo& a, const DenseTensor& t) {
  if (a.n != t.shape.n) throw std::invalid_argument("diamond: dimension mismatch");
  DenseTensor out(t.shape);
  for (int r = 0; r < t.shape.p; ++r)
    detail::accumulate_slot_apply(t, r, a, /*transpose=*/false, -1.0, out);
  for (int s = 0; s < t.shape.q; ++s)
    detail::accumulate_slot_apply(t, t.shape.p + s, a, /*transpose=*/true, +1.0, out);
  return out;
}

inline MultiTensor diamond(const Endo& a, const MultiTensor& xi) {
  MultiTensor out = xi;
  for (std::size_t k = 0; k < xi.parts.size(); ++k) out.parts[k] = diamond(a, xi.parts[k]);
  return out;
}

// Right action of an invertible g.  Throws when the 1-norm condition
// estimate exceeds cond_bound.
inline DenseTensor group_act(const Endo& g, const DenseTensor& t,
                             double cond_bound = 1e12) {
  if (g.n != t.shape.n) throw std::invalid_argument("group_act: dimension mismatch");
  double cond = 0.0;
  const Endo ginv = inverse(g, &cond);
  if (cond > cond_bound)
    throw std::domain_error("group_act: ill-conditioned g (cond_1 ~ " +
                            std::to_string(cond) + ")");
  DenseTensor cur = t;
  for (int r = 0; r < t.shape.p; ++r) {
    DenseTensor next(t.shape);
    detail::accumulate_slot_apply(cur, r, ginv, /*transpose=*/false, 1.0, next);
    cur = std::move(next);
  }
  for (int s = 0; s < t.shape.q; ++s) {
    DenseTensor next(t.shape);
    detail::accumulate_slot_apply(cur, t.shape.p + s, g, /*transpose=*/true, 1.0, next);
    cur = std::move(next);
  }
  return cur;
}

inline MultiTensor group_act(const Endo& g, const MultiTensor& xi,
                             double cond_bound = 1e12) {
  MultiTensor out = xi;
  for (std::size_t k = 0; k < xi.parts.size(); ++k)
    out.parts[k] = group_act(g, xi.parts[k], cond_bound);
  return out;
}

// Fast path for g in SO(n): inverse = transpose, no conditioning check.
inline DenseTensor group_act_so(const Endo& g, const DenseTensor& t) {
  const Endo ginv = g.transpose();
  DenseTensor cur = t;
  for (int r = 0; r < t.shape.p; ++r) {
    DenseTensor next(t.shape);
    detail::accumulate_slot_apply(cur, r, ginv, /*transpose=*/false, 1.0, next);
    cur = std::move(next);
  }
  for (int s = 0; s < t.shape.q; ++s) {
    DenseTensor next(t.shape);
    detail::accumulate_slot_apply(cur, t.shape.p + s, g, /*transpose=*/true, 1.0, next);
    cur = std::move(next);
  }
  return cur;
}

inline MultiTensor group_act_so(const Endo& g, const MultiTensor& xi) {
  MultiTensor out = xi;
  for (std::size_t k = 0; k < xi.parts.size(); ++k) out.parts[k] = group_act_so(g, xi.parts[k]);
  return out;
}

namespace detail {

// K(a,b) with inner(w, A<>xi) = sum_{a,b} A^a_b K(a,b) for arbitrary A.
// One cross-Gram pass per slot, so a single diamond-sized traversal.
inline void accumulate_moment(const DenseTensor& xi, const DenseTensor& w, Endo& k) {
  xi.require_same_shape(w);
  const int n = xi.shape.n;
  const int rank = xi.shape.rank();
  const double wt = xi.shape.inner_weight();
  for (int slot = 0; slot < rank; ++slot) {
    const bool contravariant = slot < xi.shape.p;
    const std::size_t inner_sz = ipow(std::size_t(n), rank - slot - 1);
    const std::size_t outer_sz = ipow(std::size_t(n), slot);
    const std::size_t block = std::size_t(n) * inner_sz;
    for (int a = 0; a < n; ++a)
      for (int m = 0; m < n; ++m) {
        double s = 0.0;
        for (std::size_t o = 0; o < outer_sz; ++o) {
          const double* wrow = w.data.data() + o * block + std::size_t(a) * inner_sz;
          const double* xrow = xi.data.data() + o * block + std::size_t(m) * inner_sz;
          for (std::size_t i = 0; i < inner_sz; ++i) s += wrow[i] * xrow[i];
        }
        if (contravariant)
          k(a, m) -= wt * s;  // A^a_m coefficient
        else
          k(m, a) += wt * s;  // A^m_a coefficient
      }
  }
}

}  // namespace detail

// Adjoint of L = (. <> xi) against the tensor inner product: returns the skew
// W with <W, A>_so = inner(w, A<>xi) for every skew A.  In the fixed basis,
// W = sum_{a<b} (inner(w, E_ab<>xi) / <E_ab,E_ab>) E_ab, i.e. the skew part
// of the moment matrix K.
inline Endo diamond_adjoint(const MultiTensor& xi, const MultiTensor& w) {
  xi.require_same_shape(w);
  Endo k(xi.dim());
  for (std::size_t part = 0; part < xi.parts.size(); ++part)
    detail::accumulate_moment(xi.parts[part], w.parts[part], k);
  return skew_part(k);
}

}  // namespace hflow
