#pragma once

// Model tensors xi0 and group metadata for the supported stabilizer groups
// H in SO(n): the trivial group (frame fields), U(m), SU(m), G2, Spin(7).
//
// Normalization: on the skew side the pairing is <A,B> = -tr(AB); on the
// tensor side the form inner product (see tensor.hpp).  With these, the map
// L_A = A <> xi0 restricted to m = h^perp satisfies
//   inner(A<>xi0, B<>xi0) = c <A,B>          (single-constant groups)
//   inner(A<>xi0, B<>xi0) = l1 <A1,B1> + l2 <A2,B2>   (SU(m), m1 = span J).

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hflow/diamond.hpp"
#include "hflow/endo.hpp"
#include "hflow/tensor.hpp"

namespace hflow {

enum class HKind { Trivial, U, SU, G2, Spin7 };

inline const char* kind_name(HKind k) {
  switch (k) {
    case HKind::Trivial: return "trivial";
    case HKind::U: return "u";
    case HKind::SU: return "su";
    case HKind::G2: return "g2";
    case HKind::Spin7: return "spin7";
  }
  return "?";
}

// Stable numeric tags for the checkpoint header.
inline std::uint32_t kind_tag(HKind k) {
  switch (k) {
    case HKind::Trivial: return 0;
    case HKind::U: return 1;
    case HKind::SU: return 2;
    case HKind::G2: return 3;
    case HKind::Spin7: return 4;
  }
  return 0xffffffffu;
}

inline HKind kind_from_tag(std::uint32_t tag) {
  switch (tag) {
    case 0: return HKind::Trivial;
    case 1: return HKind::U;
    case 2: return HKind::SU;
    case 3: return HKind::G2;
    case 4: return HKind::Spin7;
  }
  throw std::invalid_argument("unknown kind tag");
}

// Standard complex structure on R^{2m} = R^m + R^m, block [[0,-1],[1,0]]
// in (x^1..x^m, y^1..y^m) coordinates.
inline Endo standard_complex_structure(int m) {
  Endo j(2 * m);
  for (int p = 0; p < m; ++p) {
    j(m + p, p) = 1.0;   // J dx^p-direction = dy^p-direction
    j(p, m + p) = -1.0;  // J dy^p-direction = -dx^p-direction
  }
  return j;
}

inline DenseTensor endo_as_tensor(const Endo& a) {
  DenseTensor t(TensorShape(1, 1, a.n));
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) t.data[std::size_t(i * a.n + j)] = a(i, j);
  return t;
}

inline Endo tensor_as_endo(const DenseTensor& t) {
  if (t.shape.p != 1 || t.shape.q != 1)
    throw std::invalid_argument("tensor_as_endo: (1,1) tensor required");
  Endo a(t.shape.n);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) a(i, j) = t.data[std::size_t(i * a.n + j)];
  return a;
}

// The standard 3-form: e123 + e1^(e45-e67) + e2^(e46-e75) + e3^(e47-e56).
inline DenseTensor g2_three_form() {
  DenseTensor phi(TensorShape(0, 3, 7, true));
  const int sets[7][3] = {{0, 1, 2}, {0, 3, 4}, {0, 5, 6}, {1, 3, 5},
                          {1, 4, 6}, {2, 3, 6}, {2, 4, 5}};
  const double sign[7] = {+1, +1, -1, +1, +1, +1, -1};
  for (int k = 0; k < 7; ++k) phi.set_alternating(sets[k], sign[k]);
  return phi;
}

// Dual 4-form, computed as the Hodge star of the 3-form.
inline DenseTensor g2_four_form() { return hodge(g2_three_form()); }

// Self-dual Cayley form e0 ^ phi + *7 phi on R^8 = R + R^7.
inline DenseTensor spin7_four_form() {
  const DenseTensor phi = g2_three_form();
  const DenseTensor psi = g2_four_form();
  DenseTensor big(TensorShape(0, 4, 8, true));
  const auto& tab3 = AltIndexTable::get(7, 3);
  std::array<int, kMaxRank> idx{};
  for (const auto& s : tab3.sets) {
    int j3[3] = {s[0], s[1], s[2]};
    const double v = phi.data[phi.ravel(j3)];
    if (v == 0.0) continue;
    idx[0] = 0;
    for (int i = 0; i < 3; ++i) idx[i + 1] = s[i] + 1;
    big.set_alternating(idx.data(), v);
  }
  const auto& tab4 = AltIndexTable::get(7, 4);
  for (const auto& s : tab4.sets) {
    int j4[4] = {s[0], s[1], s[2], s[3]};
    const double v = psi.data[psi.ravel(j4)];
    if (v == 0.0) continue;
    for (int i = 0; i < 4; ++i) idx[i] = s[i] + 1;
    big.set_alternating(idx.data(), v);
  }
  return big;
}

// Real and imaginary parts of dz^1 ^ ... ^ dz^m, z^p = x^p + i y^p.
inline std::pair<DenseTensor, DenseTensor> complex_volume_form(int m) {
  const int n = 2 * m;
  auto covector = [&](int i) {
    DenseTensor t(TensorShape(0, 1, n));
    t.data[std::size_t(i)] = 1.0;
    return t;
  };
  DenseTensor re = covector(0), im = covector(m);  // dz^1
  for (int p = 1; p < m; ++p) {
    const DenseTensor dx = covector(p), dy = covector(m + p);
    DenseTensor re2 = wedge(re, dx) - wedge(im, dy);
    DenseTensor im2 = wedge(re, dy) + wedge(im, dx);
    re = std::move(re2);
    im = std::move(im2);
  }
  return {re, im};
}

struct HModel {
  HKind kind = HKind::Trivial;
  int n = 0;
  int m = 0;  // complex dimension for U/SU, else 0
  MultiTensor xi0;
  bool reducible = false;  // two-block inner product (SU)
  double lambda1 = 1.0;    // single constant c when !reducible
  double lambda2 = 1.0;
  int dim_h = 0;
  int dim_m = 0;

  double c() const {
    if (reducible)
      throw std::logic_error("HModel::c: reducible module, use lambda1/lambda2");
    return lambda1;
  }
  // Upper bound used for norm equivalences regardless of reducibility.
  double c_max() const { return std::max(lambda1, lambda2); }

  std::string name() const {
    std::string s = kind_name(kind);
    if (kind == HKind::U || kind == HKind::SU) s += std::to_string(m);
    if (kind == HKind::Trivial) s += "(" + std::to_string(n) + ")";
    return s;
  }

  // Net degree q - p of each part; the weight exponent in parabolic rescaling.
  std::vector<int> net_degrees() const {
    std::vector<int> out;
    for (const auto& t : xi0.parts) out.push_back(t.shape.q - t.shape.p);
    return out;
  }
};

inline HModel make_model(HKind kind, int param = 0) {
  HModel mod;
  mod.kind = kind;
  switch (kind) {
    case HKind::Trivial: {
      const int n = param;
      if (n < 2 || n > kMaxDim) throw std::invalid_argument("trivial: bad n");
      mod.n = n;
      std::vector<DenseTensor> parts;
      for (int i = 0; i < n; ++i) parts.push_back(DenseTensor::vector(n, i));
      mod.xi0 = MultiTensor(std::move(parts));
      mod.lambda1 = mod.lambda2 = 1.0;
      mod.dim_h = 0;
      mod.dim_m = so_dim(n);
      break;
    }
    case HKind::U: {
      const int m = param;
      if (m < 2 || 2 * m > kMaxDim) throw std::invalid_argument("u(m): bad m");
      mod.n = 2 * m;
      mod.m = m;
      mod.xi0 = MultiTensor({endo_as_tensor(standard_complex_structure(m))});
      mod.lambda1 = mod.lambda2 = 4.0;
      mod.dim_h = m * m;
      mod.dim_m = m * m - m;
      break;
    }
    case HKind::SU: {
      const int m = param;
      if (m < 2 || 2 * m > kMaxDim) throw std::invalid_argument("su(m): bad m");
      mod.n = 2 * m;
      mod.m = m;
      auto [re, im] = complex_volume_form(m);
      mod.xi0 = MultiTensor(
          {endo_as_tensor(standard_complex_structure(m)), re, im});
      mod.reducible = true;
      mod.lambda1 = m * std::pow(2.0, m - 1);    // on span(J)
      mod.lambda2 = 4.0 + std::pow(2.0, m - 1);  // on u(m)^perp
      mod.dim_h = m * m - 1;
      mod.dim_m = m * m - m + 1;
      break;
    }
    case HKind::G2: {
      mod.n = 7;
      mod.xi0 = MultiTensor({g2_three_form()});
      mod.lambda1 = mod.lambda2 = 6.0;
      mod.dim_h = 14;
      mod.dim_m = 7;
      break;
    }
    case HKind::Spin7: {
      mod.n = 8;
      mod.xi0 = MultiTensor({spin7_four_form()});
      mod.lambda1 = mod.lambda2 = 16.0;
      mod.dim_h = 21;
      mod.dim_m = 7;
      break;
    }
  }
  return mod;
}

// Compatible 3-form with data (f, X), f^2 + |X|^2 = 1:
//   (f^2 - |X|^2) phi - 2 f X -| psi + 2 X^flat ^ (X -| phi).
// (f,X) and (-f,-X) give the same result.
inline DenseTensor g2_parametrize(double f, const std::vector<double>& x,
                                  const DenseTensor& phi, const DenseTensor& psi,
                                  double tol = 1e-12) {
  double x2 = 0.0;
  for (double v : x) x2 += v * v;
  if (std::abs(f * f + x2 - 1.0) > tol)
    throw std::invalid_argument("g2_parametrize: f^2+|X|^2 != 1");
  DenseTensor xflat(TensorShape(0, 1, 7));
  for (int i = 0; i < 7; ++i) xflat.data[std::size_t(i)] = x[std::size_t(i)];
  DenseTensor out = (f * f - x2) * phi;
  out -= 2.0 * f * interior(x, psi);
  out += 2.0 * wedge(xflat, interior(x, phi));
  return out;
}

// ---------------------------------------------------------------------------
// Identity suite.  Residuals vanish on the model orbit; used both as a
// constructor self-check and as a per-point drift monitor for fields.

struct ModelReport {
  std::vector<std::pair<std::string, double>> residuals;
  double max_residual = 0.0;
  void add(std::string name, double r) {
    max_residual = std::max(max_residual, std::abs(r));
    residuals.emplace_back(std::move(name), r);
  }
};

namespace detail {

inline void verify_g2_identities(const DenseTensor& phi, ModelReport& rep) {
  const DenseTensor psi = hodge(phi);
  const int n = 7;
  // psi_{aijk} psi_b^{ijk} = 24 g_ab
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            int ia[4] = {a, i, j, k}, ib[4] = {b, i, j, k};
            s += psi.data[psi.ravel(ia)] * psi.data[psi.ravel(ib)];
          }
      worst = std::max(worst, std::abs(s - (a == b ? 24.0 : 0.0)));
    }
  rep.add("psi.psi = 24 g", worst);
  // phi_{ijk} psi_{ab}^{jk} = -4 phi_{iab}
  worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = 0.0;
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            int ip[3] = {i, j, k}, is[4] = {a, b, j, k};
            s += phi.data[phi.ravel(ip)] * psi.data[psi.ravel(is)];
          }
        int it[3] = {i, a, b};
        worst = std::max(worst, std::abs(s - (-4.0) * phi.data[phi.ravel(it)]));
      }
  rep.add("phi.psi = -4 phi", worst);
  // phi_{ijk} psi_m^{ijk} = 0
  worst = 0.0;
  for (int mm = 0; mm < n; ++mm) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          int ip[3] = {i, j, k}, is[4] = {mm, i, j, k};
          s += phi.data[phi.ravel(ip)] * psi.data[psi.ravel(is)];
        }
    worst = std::max(worst, std::abs(s));
  }
  rep.add("phi : psi = 0", worst);
  // phi_{ipq} phi_{jpq} = 6 g_ij  (equivalently <X -| phi, X -| phi> = 6|X|^2)
  worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
          int ia[3] = {i, p, q}, ib[3] = {j, p, q};
          s += phi.data[phi.ravel(ia)] * phi.data[phi.ravel(ib)];
        }
      worst = std::max(worst, std::abs(s - (i == j ? 6.0 : 0.0)));
    }
  rep.add("phi.phi = 6 g", worst);
  // induced metric: (e_i -| phi)^(e_j -| phi)^phi = -6 g_ij vol
  worst = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> ei(n, 0.0);
    ei[std::size_t(i)] = 1.0;
    const DenseTensor iphi = interior(ei, phi);
    for (int j = i; j < n; ++j) {
      std::vector<double> ej(n, 0.0);
      ej[std::size_t(j)] = 1.0;
      const double top = wedge_top(wedge(iphi, interior(ej, phi)), phi);
      worst = std::max(worst, std::abs(top + 6.0 * (i == j ? 1.0 : 0.0)));
    }
  }
  rep.add("(X-|phi)^(Y-|phi)^phi = -6 g vol", worst);
}

}  // namespace detail

// Verifies the defining identities at an arbitrary point xi (defaults to the
// model tensor).  All residuals are ~1e-16-scale on the orbit.
inline ModelReport verify_model(const HModel& mod, const MultiTensor& xi) {
  ModelReport rep;
  switch (mod.kind) {
    case HKind::Trivial: {
      // frame orthonormality
      double worst = 0.0;
      for (std::size_t i = 0; i < xi.parts.size(); ++i)
        for (std::size_t j = i; j < xi.parts.size(); ++j) {
          const double g = inner(xi.parts[i], xi.parts[j]);
          worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
        }
      rep.add("frame gram = id", worst);
      break;
    }
    case HKind::U: {
      const Endo j = tensor_as_endo(xi.parts[0]);
      Endo jj = j * j;
      for (int i = 0; i < j.n; ++i) jj(i, i) += 1.0;
      rep.add("J^2 = -id", jj.max_abs());
      rep.add("omega antisymmetric", j.skew_residual());
      break;
    }
    case HKind::SU: {
      const Endo j = tensor_as_endo(xi.parts[0]);
      Endo jj = j * j;
      for (int i = 0; i < j.n; ++i) jj(i, i) += 1.0;
      rep.add("J^2 = -id", jj.max_abs());
      rep.add("omega antisymmetric", j.skew_residual());
      // J <> Upsilon = m i Upsilon, split into real and imaginary parts
      const DenseTensor jre = diamond(j, xi.parts[1]);
      const DenseTensor jim = diamond(j, xi.parts[2]);
      rep.add("J<>Re = -m Im", max_abs(jre + double(mod.m) * xi.parts[2]));
      rep.add("J<>Im = +m Re", max_abs(jim - double(mod.m) * xi.parts[1]));
      rep.add("|Upsilon|^2 = 2^m",
              norm2(xi.parts[1]) + norm2(xi.parts[2]) - std::pow(2.0, mod.m));
      break;
    }
    case HKind::G2: {
      detail::verify_g2_identities(xi.parts[0], rep);
      rep.add("|phi|^2 = 7", norm2(xi.parts[0]) - 7.0);
      break;
    }
    case HKind::Spin7: {
      const DenseTensor star = hodge(xi.parts[0]);
      rep.add("*Phi = Phi", max_abs(star - xi.parts[0]));
      rep.add("|Phi|^2 = 14", norm2(xi.parts[0]) - 14.0);
      break;
    }
  }
  return rep;
}

inline ModelReport verify_model(const HModel& mod) { return verify_model(mod, mod.xi0); }

}  // namespace hflow
