#pragma once

// Seeded RNG with self-contained distributions, so identical seeds give
// identical streams across standard libraries.

#include <cstdint>
#include <random>

#include "hflow/endo.hpp"
#include "hflow/tensor.hpp"

namespace hflow {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // [0, 1)
    return double(gen_() >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  int index(int count) { return int(gen_() % std::uint64_t(count)); }

  Endo endo(int n) {
    Endo a(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = gauss();
    return a;
  }

  Endo skew(int n) {
    Endo a(n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double v = gauss();
        a(i, j) = v;
        a(j, i) = -v;
      }
    return a;
  }

  Endo symmetric(int n) {
    Endo a(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = gauss();
        a(i, j) = v;
        a(j, i) = v;
      }
    return a;
  }

  Endo special_orthogonal(int n) { return expm_skew(skew(n), 1.0); }

  DenseTensor tensor(TensorShape s) {
    DenseTensor t(s);
    if (s.alternating) {
      const auto& tab = AltIndexTable::get(s.n, s.q);
      for (const auto& set : tab.sets) {
        int idx[kMaxRank];
        for (int i = 0; i < s.q; ++i) idx[i] = set[i];
        t.set_alternating(idx, gauss());
      }
    } else {
      for (double& v : t.data) v = gauss();
    }
    return t;
  }

  std::vector<double> vec(int n) {
    std::vector<double> v(std::size_t(n), 0.0);
    for (double& x : v) x = gauss();
    return v;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hflow
