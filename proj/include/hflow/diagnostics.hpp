#pragma once

// Analytic diagnostics along the flow: localized backward-heat-kernel
// energies, the flat Bianchi identity defect, the torsion evolution defect,
// the energy convexity check, soliton residuals, and parabolic rescaling.

#include "hflow/flow.hpp"

namespace hflow {

// ---------------------------------------------------------------------------
// Backward heat kernel energies on the torus.
//
// The Euclidean kernel G_{(x0,t0)}(x,t) = (4 pi (t0-t))^{-n/2} exp(-|x-x0|^2
// / 4(t0-t)) is periodized by summing over the nearest (2K+1)^n lattice
// images; the Gaussian factorizes over axes, so the sum is a product of 1d
// image sums (tabulated per axis).

inline double theta_localized(const std::vector<double>& density, const PeriodicGrid& g,
                              const std::array<double, kMaxDim>& x0, double t0, double t,
                              int images = 1, int threads = 1) {
  if (!(t < t0)) throw std::invalid_argument("theta: requires t < t0");
  if (density.size() != g.npoints) throw std::invalid_argument("theta: density size mismatch");
  const double tau = t0 - t;
  // per-axis image sums
  std::array<std::vector<double>, kMaxDim> table;
  for (int i = 0; i < g.n; ++i) {
    table[std::size_t(i)].assign(std::size_t(g.res[std::size_t(i)]), 0.0);
    const double L = g.side[std::size_t(i)];
    for (int xi = 0; xi < g.res[std::size_t(i)]; ++xi) {
      const double dx = xi * g.spacing[std::size_t(i)] - x0[std::size_t(i)];
      double s = 0.0;
      for (int k = -images; k <= images; ++k) {
        const double d = dx + k * L;
        s += std::exp(-d * d / (4.0 * tau));
      }
      table[std::size_t(i)][std::size_t(xi)] = s;
    }
  }
  const double norm = std::pow(4.0 * M_PI * tau, -0.5 * g.n);
  const std::size_t nb = num_blocks(g.npoints);
  std::vector<double> partial(nb, 0.0);
  for_each_block(g.npoints, threads, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    std::array<int, kMaxDim> x{};
    double acc = 0.0;
    for (std::size_t pt = lo; pt < hi; ++pt) {
      g.decompose(pt, x);
      double w = 1.0;
      for (int i = 0; i < g.n; ++i) w *= table[std::size_t(i)][std::size_t(x[std::size_t(i)])];
      acc += density[pt] * w;
    }
    partial[b] = acc;
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return tau * norm * total * g.cell_volume();
}

// Time quadrature of Theta(t)/(t0-t) over [t0-4r^2, t0-r^2] from recorded
// samples (t, Theta(t)); trapezoid with linear interpolation at the cut ends.
inline double psi_from_theta_series(const std::vector<std::pair<double, double>>& series,
                                    double t0, double r) {
  const double lo = t0 - 4.0 * r * r, hi = t0 - r * r;
  if (series.size() < 2 || series.front().first > lo || series.back().first < hi)
    throw std::invalid_argument("psi: recorded history does not cover [t0-4r^2, t0-r^2]");
  auto value = [&](std::size_t i) {
    return series[i].second / (t0 - series[i].first);
  };
  auto interp = [&](double t) {
    std::size_t i = 1;
    while (i + 1 < series.size() && series[i].first < t) ++i;
    const double t1 = series[i - 1].first, t2 = series[i].first;
    const double w = (t - t1) / (t2 - t1);
    return (1.0 - w) * value(i - 1) + w * value(i);
  };
  double acc = 0.0;
  double prev_t = lo, prev_v = interp(lo);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = series[i].first;
    if (t <= lo) continue;
    if (t >= hi) break;
    acc += 0.5 * (prev_v + value(i)) * (t - prev_t);
    prev_t = t;
    prev_v = value(i);
  }
  acc += 0.5 * (prev_v + interp(hi)) * (hi - prev_t);
  return acc;
}

// Same quadrature from a recorded run (uses the theta column).
template <class Records>
double psi_localized(const Records& records, double t0, double r) {
  std::vector<std::pair<double, double>> series;
  for (const auto& rec : records)
    if (std::isfinite(rec.theta)) series.emplace_back(rec.t, rec.theta);
  return psi_from_theta_series(series, t0, r);
}

// ---------------------------------------------------------------------------
// Flat Bianchi identity defect:
//   d_a T_l - d_l T_a + 2 [T_a, T_l] - pi_m([T_a, T_l]) -> 0,
// reported as a per-point max over the axis pairs.

struct BianchiResult {
  std::vector<double> residual;  // per point
  double sup = 0.0;
};

inline BianchiResult bianchi_residual(const StructureField& f, const SkewField& torsion,
                                      int order = 2, int threads = 1) {
  const PeriodicGrid& g = f.grid;
  const HModel& mod = f.model;
  BianchiResult res{std::vector<double>(g.npoints, 0.0), 0.0};
  const int np = torsion.pair_count();
  const int nc = f.ncomp_total();
  std::vector<std::vector<double>> da_tl(std::size_t(np), std::vector<double>(g.npoints, 0.0));
  std::vector<std::vector<double>> dl_ta(std::size_t(np), std::vector<double>(g.npoints, 0.0));
  for (int a = 0; a < g.n; ++a)
    for (int l = a + 1; l < g.n; ++l) {
      for (int p = 0; p < np; ++p) {
        derivative_component(g, a, order,
                             torsion.comp[std::size_t(l) * std::size_t(np) + std::size_t(p)].data(),
                             da_tl[std::size_t(p)].data(), threads);
        derivative_component(g, l, order,
                             torsion.comp[std::size_t(a) * std::size_t(np) + std::size_t(p)].data(),
                             dl_ta[std::size_t(p)].data(), threads);
      }
      for_each_block(g.npoints, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
        std::vector<double> xi_loc(std::size_t(nc), 0.0), dloc(std::size_t(nc), 0.0);
        for (std::size_t pt = lo; pt < hi; ++pt) {
          Endo lhs(g.n);
          for (int p = 0; p < np; ++p) {
            const double v = da_tl[std::size_t(p)][pt] - dl_ta[std::size_t(p)][pt];
            lhs(torsion.pairs[std::size_t(p)].first, torsion.pairs[std::size_t(p)].second) = v;
            lhs(torsion.pairs[std::size_t(p)].second, torsion.pairs[std::size_t(p)].first) = -v;
          }
          const Endo ta = torsion.gather(a, pt), tl = torsion.gather(l, pt);
          const Endo br = bracket(ta, tl);
          // pi_m(br) through the compressed kernels
          for (int c = 0; c < nc; ++c) xi_loc[std::size_t(c)] = f.comp[std::size_t(c)][pt];
          for (const auto& lay : f.layout()) pointops::diamond_local(lay, br, xi_loc.data(), dloc.data());
          Endo k(g.n);
          for (const auto& lay : f.layout())
            pointops::accumulate_moment_local(lay, xi_loc.data(), dloc.data(), k);
          const Endo pbr = torsion_inverse_local(mod, f, xi_loc.data(), skew_part(k));
          const Endo defect = lhs + 2.0 * br - pbr;
          res.residual[pt] = std::max(res.residual[pt], nrm(defect));
        }
      });
    }
  res.sup = block_max(res.residual.data(), g.npoints, threads);
  return res;
}

// ---------------------------------------------------------------------------
// Laplacian split defect: | lap xi - DivT <> xi - sum_k T_k <> (T_k <> xi) |
// per point, converging to zero at stencil order on smooth fields.

struct LaplacianSplitResult {
  std::vector<double> residual;
  double sup = 0.0;
};

inline LaplacianSplitResult laplacian_split_residual(const StructureField& f,
                                                     const SkewField& torsion,
                                                     const SkewField& div, int order = 2,
                                                     int threads = 1) {
  const PeriodicGrid& g = f.grid;
  LaplacianSplitResult res{std::vector<double>(g.npoints, 0.0), 0.0};
  const int nc = f.ncomp_total();
  // componentwise Laplacian, as the square of the centered first derivative
  // so the principal part matches the divergence composition exactly
  std::vector<std::vector<double>> lap(std::size_t(nc), std::vector<double>(g.npoints, 0.0));
  {
    std::vector<double> scratch(g.npoints, 0.0), scratch2(g.npoints, 0.0);
    for (int c = 0; c < nc; ++c)
      for (int axis = 0; axis < g.n; ++axis) {
        derivative_component(g, axis, order, f.comp[std::size_t(c)].data(), scratch.data(),
                             threads);
        derivative_component(g, axis, order, scratch.data(), scratch2.data(), threads);
        auto& dst = lap[std::size_t(c)];
        for (std::size_t pt = 0; pt < g.npoints; ++pt) dst[pt] += scratch2[pt];
      }
  }
  for_each_block(g.npoints, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    std::vector<double> xi_loc(std::size_t(nc), 0.0), acc(std::size_t(nc), 0.0),
        tmp(std::size_t(nc), 0.0), tmp2(std::size_t(nc), 0.0);
    for (std::size_t pt = lo; pt < hi; ++pt) {
      for (int c = 0; c < nc; ++c) {
        xi_loc[std::size_t(c)] = f.comp[std::size_t(c)][pt];
        acc[std::size_t(c)] = lap[std::size_t(c)][pt];
      }
      const Endo cdiv = div.gather(0, pt);
      for (const auto& lay : f.layout()) pointops::diamond_local(lay, cdiv, xi_loc.data(), tmp.data());
      for (int c = 0; c < nc; ++c) acc[std::size_t(c)] -= tmp[std::size_t(c)];
      for (int k = 0; k < g.n; ++k) {
        const Endo tk = torsion.gather(k, pt);
        for (const auto& lay : f.layout()) pointops::diamond_local(lay, tk, xi_loc.data(), tmp.data());
        for (const auto& lay : f.layout()) pointops::diamond_local(lay, tk, tmp.data(), tmp2.data());
        for (int c = 0; c < nc; ++c) acc[std::size_t(c)] -= tmp2[std::size_t(c)];
      }
      res.residual[pt] = std::sqrt(pointops::norm2_local(nc, acc.data()));
    }
  });
  res.sup = block_max(res.residual.data(), g.npoints, threads);
  return res;
}

// ---------------------------------------------------------------------------
// Torsion evolution defect along an isometric run:
//   pi_m( (T_l(t+dt) - T_l(t-dt)) / 2dt - [T_l, C] - d_l C ) -> 0.

inline double torsion_evolution_residual(const StructureField& f_mid, const SkewField& t_prev,
                                         const SkewField& t_mid, const SkewField& t_next,
                                         const SkewField& c_mid, double dt, int order = 2,
                                         int threads = 1) {
  const PeriodicGrid& g = f_mid.grid;
  const HModel& mod = f_mid.model;
  const int np = c_mid.pair_count();
  const int nc = f_mid.ncomp_total();
  std::vector<std::vector<double>> dc(std::size_t(np), std::vector<double>(g.npoints, 0.0));
  double worst = 0.0;
  for (int l = 0; l < g.n; ++l) {
    for (int p = 0; p < np; ++p)
      derivative_component(g, l, order, c_mid.comp[std::size_t(p)].data(),
                           dc[std::size_t(p)].data(), threads);
    const std::size_t nb = num_blocks(g.npoints);
    std::vector<double> partial(nb, 0.0);
    for_each_block(g.npoints, threads, [&](std::size_t b, std::size_t lo, std::size_t hi) {
      std::vector<double> xi_loc(std::size_t(nc), 0.0), dloc(std::size_t(nc), 0.0);
      double w = 0.0;
      for (std::size_t pt = lo; pt < hi; ++pt) {
        const Endo tdot = (1.0 / (2.0 * dt)) * (t_next.gather(l, pt) - t_prev.gather(l, pt));
        const Endo tl = t_mid.gather(l, pt);
        const Endo c = c_mid.gather(0, pt);
        Endo dlc(g.n);
        for (int p = 0; p < np; ++p) {
          const double v = dc[std::size_t(p)][pt];
          dlc(c_mid.pairs[std::size_t(p)].first, c_mid.pairs[std::size_t(p)].second) = v;
          dlc(c_mid.pairs[std::size_t(p)].second, c_mid.pairs[std::size_t(p)].first) = -v;
        }
        const Endo defect_raw = tdot - bracket(tl, c) - dlc;
        for (int cc = 0; cc < nc; ++cc) xi_loc[std::size_t(cc)] = f_mid.comp[std::size_t(cc)][pt];
        for (const auto& lay : f_mid.layout())
          pointops::diamond_local(lay, defect_raw, xi_loc.data(), dloc.data());
        Endo k(g.n);
        for (const auto& lay : f_mid.layout())
          pointops::accumulate_moment_local(lay, xi_loc.data(), dloc.data(), k);
        const Endo defect = torsion_inverse_local(mod, f_mid, xi_loc.data(), skew_part(k));
        w = std::max(w, nrm(defect));
      }
      partial[b] = w;
    });
    for (double v : partial) worst = std::max(worst, v);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Scalar helpers for the Bochner monitor.

inline std::vector<double> scalar_laplacian(const std::vector<double>& v, const PeriodicGrid& g,
                                            int order = 2, int threads = 1) {
  std::vector<double> out(g.npoints, 0.0), scratch(g.npoints, 0.0);
  for (int axis = 0; axis < g.n; ++axis) {
    second_derivative_component(g, axis, order, v.data(), scratch.data(), threads);
    for (std::size_t pt = 0; pt < g.npoints; ++pt) out[pt] += scratch[pt];
  }
  return out;
}

// sup over points of [(de/dt - lap e)]_+ / max(e^2, floor).
inline double bochner_ratio(const std::vector<double>& e_prev, const std::vector<double>& e_mid,
                            const std::vector<double>& e_next, double dt_records,
                            const PeriodicGrid& g, int order, double floor, int threads = 1) {
  const std::vector<double> lap = scalar_laplacian(e_mid, g, order, threads);
  const std::size_t nb = num_blocks(g.npoints);
  std::vector<double> partial(nb, 0.0);
  for_each_block(g.npoints, threads, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    double w = 0.0;
    for (std::size_t pt = lo; pt < hi; ++pt) {
      const double dedt = (e_next[pt] - e_prev[pt]) / (2.0 * dt_records);
      const double num = dedt - lap[pt];
      if (num <= 0.0) continue;
      w = std::max(w, num / std::max(e_mid[pt] * e_mid[pt], floor));
    }
    partial[b] = w;
  });
  double r = 0.0;
  for (double v : partial) r = std::max(r, v);
  return r;
}

// ---------------------------------------------------------------------------
// Energy convexity along a recorded run.  With I(t) = integral |Div T|^2 and
// J(t) = integral (Lambda - 12 |T|^2) |Div T|^2, checks -dI/dt >= J - tol
// at every interior record inside the small-torsion regime sup|T|^2 < Lambda/24.

// First nonzero eigenvalue of the rough Laplacian on 2-forms of the torus.
inline double first_nonzero_laplacian_eigenvalue(const PeriodicGrid& g) {
  const double l = g.max_side();
  return (2.0 * M_PI / l) * (2.0 * M_PI / l);
}

struct ConvexityReport {
  int checked = 0;
  int violations = 0;
  double worst_violation = 0.0;  // positive = inequality broken by this much
  bool holds() const { return violations == 0; }
};

// records must carry div_l2 and convexity_rhs (see run.hpp).
struct ConvexitySample {
  double t = 0.0, div_l2 = 0.0, rhs = 0.0, sup_T = 0.0;
};

inline ConvexityReport convexity_check(const std::vector<ConvexitySample>& s, double lambda,
                                       double rel_tol = 1e-2) {
  ConvexityReport rep;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i].sup_T * s[i].sup_T >= lambda / 24.0) continue;
    const double left = -(s[i + 1].div_l2 - s[i - 1].div_l2) / (s[i + 1].t - s[i - 1].t);
    const double right = s[i].rhs;
    const double scale = std::max(std::abs(right), lambda * s[i].div_l2);
    ++rep.checked;
    const double violation = right - left - rel_tol * scale;
    if (violation > 0.0) {
      ++rep.violations;
      rep.worst_violation = std::max(rep.worst_violation, violation);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Soliton diagnostics.

// sup | Div T - X -| T - pi_m(skew part of grad X) | over the grid; zero
// exactly for a harmonic soliton (xi, X, c) with X Killing.
inline double soliton_residual(const StructureField& f, const SkewField& torsion,
                               const SkewField& div, const std::vector<std::vector<double>>& x_field,
                               int order = 2, int threads = 1) {
  const PeriodicGrid& g = f.grid;
  if (int(x_field.size()) != g.n) throw std::invalid_argument("soliton_residual: X needs n components");
  for (const auto& c : x_field)
    if (c.size() != g.npoints) throw std::invalid_argument("soliton_residual: X component size mismatch");
  const HModel& mod = f.model;
  const int nc = f.ncomp_total();
  // grad X: d_j X^i
  std::vector<std::vector<double>> dx(std::size_t(g.n) * std::size_t(g.n),
                                      std::vector<double>(g.npoints, 0.0));
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      derivative_component(g, j, order, x_field[std::size_t(i)].data(),
                           dx[std::size_t(i * g.n + j)].data(), threads);
  const std::size_t nb = num_blocks(g.npoints);
  std::vector<double> partial(nb, 0.0);
  for_each_block(g.npoints, threads, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    std::vector<double> xi_loc(std::size_t(nc), 0.0), dloc(std::size_t(nc), 0.0);
    double w = 0.0;
    for (std::size_t pt = lo; pt < hi; ++pt) {
      Endo xt(g.n);  // X -| T
      for (int a = 0; a < g.n; ++a) xt += x_field[std::size_t(a)][pt] * torsion.gather(a, pt);
      Endo gradx(g.n);
      for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) gradx(i, j) = dx[std::size_t(i * g.n + j)][pt];
      const Endo skew = skew_part(gradx);
      for (int cc = 0; cc < nc; ++cc) xi_loc[std::size_t(cc)] = f.comp[std::size_t(cc)][pt];
      for (const auto& lay : f.layout()) pointops::diamond_local(lay, skew, xi_loc.data(), dloc.data());
      Endo k(g.n);
      for (const auto& lay : f.layout())
        pointops::accumulate_moment_local(lay, xi_loc.data(), dloc.data(), k);
      const Endo nabla_m = torsion_inverse_local(mod, f, xi_loc.data(), skew_part(k));
      const Endo defect = div.gather(0, pt) - xt - nabla_m;
      w = std::max(w, nrm(defect));
    }
    partial[b] = w;
  });
  double r = 0.0;
  for (double v : partial) r = std::max(r, v);
  return r;
}

// Scaling factor of the self-similar solution induced by a soliton:
// rho(0) = 1 and (rho^l)' = -(c/2) l (rho^l)^alpha.
inline double soliton_scaling_factor(int ell, double alpha, double c, double t) {
  if (ell == 0) throw std::invalid_argument("soliton_scaling_factor: zero net degree");
  if (alpha == 1.0) return std::exp(-0.5 * c * t);
  const double k = ell * (alpha - 1.0);
  const double base = 1.0 + 0.5 * k * c * t;
  if (!(base > 0.0))
    throw std::domain_error("soliton_scaling_factor: t outside the maximal interval");
  return std::pow(base, -1.0 / k);
}

// ---------------------------------------------------------------------------
// Parabolic rescaling: each component carries the weight lambda^(net degree)
// in fixed coordinates while the metric scales by lambda^2.  Re-expressed in
// the orthonormal coordinates of the scaled torus -- which is how fields are
// stored here -- the weight cancels exactly against the coordinate change:
// the side lengths scale by lambda, the stored values are unchanged, time
// scales by lambda^2, and the per-point orbit (hence the model metadata) is
// untouched.  Derived quantities then scale with their slot counts, e.g. the
// stored torsion by 1/lambda and its divergence by 1/lambda^2, and for
// lambda a power of two these relations are exact in binary arithmetic.

inline FlowState parabolic_rescale(const FlowState& state, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("parabolic_rescale: lambda must be positive");
  const StructureField& f = state.field;
  std::vector<int> res(f.grid.res.begin(), f.grid.res.begin() + f.grid.n);
  std::vector<double> side;
  for (int i = 0; i < f.grid.n; ++i) side.push_back(lambda * f.grid.side[std::size_t(i)]);
  StructureField out(PeriodicGrid(f.grid.n, res, side), f.model);
  out.comp = f.comp;
  return FlowState{std::move(out), lambda * lambda * state.t, state.step};
}

}  // namespace hflow
