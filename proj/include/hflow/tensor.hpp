#pragma once

// Dense small-tensor arithmetic over R^n (n <= 8) with the flat metric.
//
// Conventions used throughout:
//  * A (p,q)-tensor stores its components t^{i1..ip}_{j1..jq} in a dense
//    row-major array, first slot slowest.  With the flat metric delta,
//    raising/lowering is the identity on components, so mixed and covariant
//    tensors share one representation.
//  * Fully antisymmetric covariant tensors ("forms") carry an `alternating`
//    flag.  Their components follow the determinant convention
//    (e^1 ^ e^2)_{12} = 1, and the inner product weights them by 1/q!, i.e.
//    increasing-index components form an orthonormal family.  Every other
//    tensor uses the plain componentwise (Frobenius) inner product.

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace hflow {

inline constexpr int kMaxDim = 8;
// Index machinery supports rank up to 8 (the top form of R^8); dense storage
// is only sensible through rank 4, which is all the model tensors need.
inline constexpr int kMaxRank = 8;

inline std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

inline double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

// Sign of the permutation sorting `idx` ascending; 0 if entries repeat.
inline int perm_sign(const int* idx, int k) {
  int sign = 1;
  std::array<int, kMaxDim> a{};
  for (int i = 0; i < k; ++i) a[i] = idx[i];
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      if (a[i] == a[j]) return 0;
      if (a[i] > a[j]) {
        std::swap(a[i], a[j]);
        sign = -sign;
      }
    }
  return sign;
}

struct TensorShape {
  int p = 0;  // contravariant slots
  int q = 0;  // covariant slots
  int n = 0;  // ambient dimension
  bool alternating = false;  // fully antisymmetric covariant tensor (p == 0)

  TensorShape() = default;
  TensorShape(int p_, int q_, int n_, bool alt = false)
      : p(p_), q(q_), n(n_), alternating(alt) {
    if (n < 2 || n > kMaxDim || p < 0 || q < 0 || p + q > kMaxRank)
      throw std::invalid_argument("TensorShape: unsupported (p,q,n)");
    if (alternating && p != 0)
      throw std::invalid_argument("TensorShape: alternating requires p == 0");
    if (p == 0 && q == 1) alternating = true;  // 1-forms count as forms
  }

  int rank() const { return p + q; }
  std::size_t size() const { return ipow(std::size_t(n), p + q); }
  // 1/q! for forms, 1 otherwise; makes increasing-index components orthonormal.
  double inner_weight() const { return alternating ? 1.0 / factorial(q) : 1.0; }

  friend bool operator==(const TensorShape& a, const TensorShape& b) {
    return a.p == b.p && a.q == b.q && a.n == b.n &&
           a.alternating == b.alternating;
  }
  friend bool operator!=(const TensorShape& a, const TensorShape& b) {
    return !(a == b);
  }
};

class DenseTensor {
 public:
  TensorShape shape;
  std::vector<double> data;

  DenseTensor() = default;
  explicit DenseTensor(TensorShape s) : shape(s), data(s.size(), 0.0) {}

  static DenseTensor vector(int n, int i) {
    DenseTensor t(TensorShape(1, 0, n));
    t.data[std::size_t(i)] = 1.0;
    return t;
  }

  std::size_t ravel(const int* idx) const {
    std::size_t r = 0;
    for (int k = 0; k < shape.rank(); ++k) {
      assert(idx[k] >= 0 && idx[k] < shape.n);
      r = r * std::size_t(shape.n) + std::size_t(idx[k]);
    }
    return r;
  }

  double at(std::initializer_list<int> idx) const {
    assert(int(idx.size()) == shape.rank());
    return data[ravel(idx.begin())];
  }
  double& at(std::initializer_list<int> idx) {
    assert(int(idx.size()) == shape.rank());
    return data[ravel(idx.begin())];
  }

  // Writes value on every permutation of `idx` with the matching sign.
  void set_alternating(const int* idx, double value) {
    assert(shape.alternating);
    const int q = shape.q;
    const int sign = perm_sign(idx, q);
    if (sign == 0) throw std::invalid_argument("set_alternating: repeated index");
    std::array<int, kMaxRank> sorted{};
    for (int i = 0; i < q; ++i) sorted[i] = idx[i];
    for (int i = 0; i < q; ++i)
      for (int j = i + 1; j < q; ++j)
        if (sorted[i] > sorted[j]) std::swap(sorted[i], sorted[j]);
    emit_perms(sorted.data(), q, [&](const int* t, int s) {
      data[ravel(t)] = s * sign * value;
    });
  }

  // Calls fn(tuple, sign) for every permutation of the k sorted entries.
  template <class Fn>
  static void emit_perms(const int* sorted, int k, Fn&& fn) {
    std::array<int, kMaxRank> t{};
    for (int i = 0; i < k; ++i) t[i] = sorted[i];
    // Heap's algorithm
    std::array<int, kMaxRank> c{};
    int sign = 1;
    fn(t.data(), sign);
    int i = 0;
    while (i < k) {
      if (c[i] < i) {
        if (i % 2 == 0)
          std::swap(t[0], t[i]);
        else
          std::swap(t[c[i]], t[i]);
        sign = -sign;
        fn(t.data(), sign);
        ++c[i];
        i = 0;
      } else {
        c[i] = 0;
        ++i;
      }
    }
  }

  DenseTensor& operator+=(const DenseTensor& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
  }
  DenseTensor& operator-=(const DenseTensor& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
    return *this;
  }
  DenseTensor& operator*=(double s) {
    for (double& v : data) v *= s;
    return *this;
  }
  friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
  friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
  friend DenseTensor operator*(double s, DenseTensor a) { return a *= s; }

  void require_same_shape(const DenseTensor& o) const {
    if (!(shape == o.shape))
      throw std::invalid_argument("DenseTensor: shape mismatch");
  }

  bool finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline double inner(const DenseTensor& a, const DenseTensor& b) {
  a.require_same_shape(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s * a.shape.inner_weight();
}

inline double norm2(const DenseTensor& a) { return inner(a, a); }
inline double nrm(const DenseTensor& a) { return std::sqrt(norm2(a)); }

inline double max_abs(const DenseTensor& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::abs(v));
  return m;
}

// Deviation from full antisymmetry, as a max-norm.
inline double antisymmetry_residual(const DenseTensor& a) {
  const int q = a.shape.q;
  if (a.shape.p != 0 || q < 2) return 0.0;
  const int n = a.shape.n;
  double worst = 0.0;
  std::array<int, kMaxRank> idx{};
  const std::size_t total = a.shape.size();
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    for (int k = q - 1; k >= 0; --k) {
      idx[k] = int(rem % std::size_t(n));
      rem /= std::size_t(n);
    }
    for (int s = 0; s + 1 < q; ++s) {
      std::array<int, kMaxRank> sw = idx;
      std::swap(sw[s], sw[s + 1]);
      double v = a.data[lin] + a.data[a.ravel(sw.data())];
      worst = std::max(worst, std::abs(v));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Increasing-index component enumeration for forms (shared with field storage).

struct AltIndexTable {
  int n = 0, q = 0;
  std::vector<std::array<std::uint8_t, kMaxRank>> sets;  // increasing tuples
  std::array<int, 256> index_of_mask{};                  // bitmask -> position

  AltIndexTable(int n_, int q_) : n(n_), q(q_) {
    index_of_mask.fill(-1);
    std::array<int, kMaxRank> idx{};
    build(0, 0, idx);
  }

  int count() const { return int(sets.size()); }

  static const AltIndexTable& get(int n, int q) {
    static std::vector<std::unique_ptr<AltIndexTable>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    for (auto& t : cache)
      if (t->n == n && t->q == q) return *t;
    cache.push_back(std::make_unique<AltIndexTable>(n, q));
    return *cache.back();
  }

 private:
  void build(int start, int depth, std::array<int, kMaxRank>& idx) {
    if (depth == q) {
      std::array<std::uint8_t, kMaxRank> s{};
      int mask = 0;
      for (int i = 0; i < q; ++i) {
        s[i] = std::uint8_t(idx[i]);
        mask |= 1 << idx[i];
      }
      index_of_mask[mask] = int(sets.size());
      sets.push_back(s);
      return;
    }
    for (int v = start; v < n; ++v) {
      idx[depth] = v;
      build(v + 1, depth + 1, idx);
    }
  }
};

// Compressed (increasing-tuple) coefficients of a form, in table order.
inline std::vector<double> compress_form(const DenseTensor& a) {
  const auto& tab = AltIndexTable::get(a.shape.n, a.shape.q);
  std::vector<double> out(tab.sets.size());
  std::array<int, kMaxRank> idx{};
  for (std::size_t c = 0; c < tab.sets.size(); ++c) {
    for (int i = 0; i < a.shape.q; ++i) idx[i] = tab.sets[c][i];
    out[c] = a.data[a.ravel(idx.data())];
  }
  return out;
}

inline DenseTensor decompress_form(int n, int q, const double* comp) {
  DenseTensor t(TensorShape(0, q, n, true));
  const auto& tab = AltIndexTable::get(n, q);
  std::array<int, kMaxRank> idx{};
  for (std::size_t c = 0; c < tab.sets.size(); ++c) {
    for (int i = 0; i < q; ++i) idx[i] = tab.sets[c][i];
    DenseTensor::emit_perms(idx.data(), q, [&](const int* t2, int s) {
      t.data[t.ravel(t2)] = s * comp[c];
    });
  }
  return t;
}

// ---------------------------------------------------------------------------
// Exterior algebra helpers (determinant convention, flat metric).

// Wedge of two forms; degrees must satisfy qa + qb <= kMaxRank.
inline DenseTensor wedge(const DenseTensor& a, const DenseTensor& b) {
  if (!a.shape.alternating && a.shape.q != 1)
    throw std::invalid_argument("wedge: covariant antisymmetric inputs required");
  if (!b.shape.alternating && b.shape.q != 1)
    throw std::invalid_argument("wedge: covariant antisymmetric inputs required");
  if (a.shape.n != b.shape.n) throw std::invalid_argument("wedge: dimension mismatch");
  const int n = a.shape.n, qa = a.shape.q, qb = b.shape.q;
  DenseTensor out(TensorShape(0, qa + qb, n, true));
  const auto& tab = AltIndexTable::get(n, qa + qb);
  std::array<int, kMaxRank> sub{}, subc{}, full{};
  for (const auto& set : tab.sets) {
    // sum over qa-element subsets of `set`, with the shuffle sign
    double acc = 0.0;
    const int qt = qa + qb;
    for (int mask = 0; mask < (1 << qt); ++mask) {
      if (__builtin_popcount(unsigned(mask)) != qa) continue;
      int ia = 0, ib = 0;
      for (int pos = 0; pos < qt; ++pos) {
        if (mask & (1 << pos))
          sub[ia++] = set[pos];
        else
          subc[ib++] = set[pos];
      }
      // shuffle sign: inversions between complementary and chosen positions
      int inv = 0;
      for (int pos = 0; pos < qt; ++pos)
        if (!(mask & (1 << pos)))
          for (int pos2 = pos + 1; pos2 < qt; ++pos2)
            if (mask & (1 << pos2)) ++inv;
      const int sign = (inv % 2) ? -1 : 1;
      std::array<int, kMaxRank> ja{}, jb{};
      for (int i = 0; i < qa; ++i) ja[i] = sub[i];
      for (int i = 0; i < qb; ++i) jb[i] = subc[i];
      acc += sign * a.data[a.ravel(ja.data())] * b.data[b.ravel(jb.data())];
    }
    for (int i = 0; i < qt; ++i) full[i] = set[i];
    DenseTensor::emit_perms(full.data(), qt, [&](const int* t, int s) {
      out.data[out.ravel(t)] = s * acc;
    });
  }
  return out;
}

// Coefficient of the volume form in a ^ b, for deg a + deg b = n.
// Avoids materializing (0,n) tensors for n > 4.
inline double wedge_top(const DenseTensor& a, const DenseTensor& b) {
  const int n = a.shape.n, qa = a.shape.q, qb = b.shape.q;
  if (qa + qb != n || b.shape.n != n)
    throw std::invalid_argument("wedge_top: degrees must sum to n");
  const auto& tab = AltIndexTable::get(n, qa);
  double acc = 0.0;
  std::array<int, 2 * kMaxRank> cat{};
  for (const auto& set : tab.sets) {
    int mask = 0;
    for (int i = 0; i < qa; ++i) {
      cat[i] = set[i];
      mask |= 1 << set[i];
    }
    int k = qa;
    for (int v = 0; v < n; ++v)
      if (!(mask & (1 << v))) cat[k++] = v;
    int sign = 1;  // sign of (set, complement) as a permutation of (0..n-1)
    {
      int inv = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (cat[i] > cat[j]) ++inv;
      sign = (inv % 2) ? -1 : 1;
    }
    std::array<int, kMaxRank> ja{}, jb{};
    for (int i = 0; i < qa; ++i) ja[i] = cat[i];
    for (int i = 0; i < qb; ++i) jb[i] = cat[qa + i];
    acc += sign * a.data[a.ravel(ja.data())] * b.data[b.ravel(jb.data())];
  }
  return acc;
}

// Interior product v -| a on the first covariant slot.
inline DenseTensor interior(const std::vector<double>& v, const DenseTensor& a) {
  if (a.shape.p != 0 || a.shape.q < 1)
    throw std::invalid_argument("interior: covariant tensor required");
  if (int(v.size()) != a.shape.n)
    throw std::invalid_argument("interior: dimension mismatch");
  const int n = a.shape.n;
  DenseTensor out(TensorShape(0, a.shape.q - 1, n, a.shape.q >= 2));
  const std::size_t tail = out.shape.size();
  for (std::size_t r = 0; r < tail; ++r) {
    double s = 0.0;
    for (int m = 0; m < n; ++m) s += v[std::size_t(m)] * a.data[std::size_t(m) * tail + r];
    out.data[r] = s;
  }
  return out;
}

// Hodge star of a form, standard orientation e^1 ^ ... ^ e^n.
inline DenseTensor hodge(const DenseTensor& a) {
  if (!a.shape.alternating) throw std::invalid_argument("hodge: form required");
  const int n = a.shape.n, q = a.shape.q;
  DenseTensor out(TensorShape(0, n - q, n, true));
  const auto& stab = AltIndexTable::get(n, q);
  std::array<int, kMaxRank> jt{};
  std::array<int, 2 * kMaxRank> cat{};
  for (const auto& set : stab.sets) {
    int mask = 0;
    for (int i = 0; i < q; ++i) {
      cat[i] = set[i];
      mask |= 1 << set[i];
    }
    int k = q;
    for (int v = 0; v < n; ++v)
      if (!(mask & (1 << v))) cat[k++] = v;
    int inv = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (cat[i] > cat[j]) ++inv;
    const int sign = (inv % 2) ? -1 : 1;
    std::array<int, kMaxRank> js{};
    for (int i = 0; i < q; ++i) js[i] = cat[i];
    for (int i = 0; i < n - q; ++i) jt[i] = cat[q + i];
    const double val = sign * a.data[a.ravel(js.data())];
    if (n - q == 0) {
      out.data[0] += val;  // unreachable for our shapes; kept for completeness
    } else {
      DenseTensor::emit_perms(jt.data(), n - q, [&](const int* t, int s) {
        out.data[out.ravel(t)] = s * val;
      });
    }
  }
  return out;
}

// e^1 ^ ... ^ e^n as a dense (0,n) alternating tensor (n <= kMaxRank).
inline DenseTensor volume_form(int n) {
  DenseTensor t(TensorShape(0, n, n, true));
  std::array<int, kMaxRank> idx{};
  for (int i = 0; i < n; ++i) idx[i] = i;
  DenseTensor::emit_perms(idx.data(), n, [&](const int* tt, int s) {
    t.data[t.ravel(tt)] = double(s);
  });
  return t;
}

// ---------------------------------------------------------------------------

class MultiTensor {
 public:
  std::vector<DenseTensor> parts;

  MultiTensor() = default;
  explicit MultiTensor(std::vector<DenseTensor> p) : parts(std::move(p)) {
    if (parts.empty()) throw std::invalid_argument("MultiTensor: needs >= 1 part");
    for (const auto& t : parts)
      if (t.shape.n != parts[0].shape.n)
        throw std::invalid_argument("MultiTensor: mixed dimensions");
  }

  int dim() const { return parts[0].shape.n; }
  std::size_t part_count() const { return parts.size(); }

  bool same_shape(const MultiTensor& o) const {
    if (parts.size() != o.parts.size()) return false;
    for (std::size_t i = 0; i < parts.size(); ++i)
      if (!(parts[i].shape == o.parts[i].shape)) return false;
    return true;
  }
  void require_same_shape(const MultiTensor& o) const {
    if (!same_shape(o)) throw std::invalid_argument("MultiTensor: shape mismatch");
  }

  MultiTensor& operator+=(const MultiTensor& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < parts.size(); ++i) parts[i] += o.parts[i];
    return *this;
  }
  MultiTensor& operator-=(const MultiTensor& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < parts.size(); ++i) parts[i] -= o.parts[i];
    return *this;
  }
  MultiTensor& operator*=(double s) {
    for (auto& t : parts) t *= s;
    return *this;
  }
  friend MultiTensor operator+(MultiTensor a, const MultiTensor& b) { return a += b; }
  friend MultiTensor operator-(MultiTensor a, const MultiTensor& b) { return a -= b; }
  friend MultiTensor operator*(double s, MultiTensor a) { return a *= s; }
};

inline double inner(const MultiTensor& a, const MultiTensor& b) {
  a.require_same_shape(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.parts.size(); ++i) s += inner(a.parts[i], b.parts[i]);
  return s;
}

inline double norm2(const MultiTensor& a) { return inner(a, a); }
inline double nrm(const MultiTensor& a) { return std::sqrt(norm2(a)); }

inline double max_abs(const MultiTensor& a) {
  double m = 0.0;
  for (const auto& t : a.parts) m = std::max(m, max_abs(t));
  return m;
}

}  // namespace hflow
