#pragma once

// Harmonic flow of H-structures on flat periodic tori:
//   d xi / dt = Div T <> xi,
// integrated pointwise by xi <- exp(dt C).xi with C = Div T, so every step
// acts by an isometry and the field stays on the model orbit to rounding.
//
// Field sweeps work on local per-point component buffers in the compressed
// layout; the kernels below specialize the diamond and its adjoint to the
// stored part shapes (vectors, endomorphisms, forms) to avoid densification.

#include <climits>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>

#include "hflow/grid.hpp"
#include "hflow/io.hpp"
#include "hflow/torsion.hpp"

namespace hflow {

// ---------------------------------------------------------------------------
// Compressed per-point kernels.

namespace pointops {

// For each (q-1)-subset of {0..n-1}: the ways to extend it by one element,
// with the compressed index of the extended set and the sorting sign; plus,
// for each q-set, the (q-1)-set left after removing each position.
struct FormTables {
  int n = 0, q = 0;
  const AltIndexTable* qsets = nullptr;
  const AltIndexTable* subsets = nullptr;
  struct Ext {
    std::uint8_t element;
    std::uint16_t set_index;
    std::int8_t sign;
  };
  std::vector<std::vector<Ext>> ext;                  // per (q-1)-set
  std::vector<std::array<std::uint16_t, kMaxDim>> removed;  // per q-set, per position

  FormTables(int n_, int q_) : n(n_), q(q_) {
    qsets = &AltIndexTable::get(n, q);
    subsets = &AltIndexTable::get(n, q - 1);
    ext.resize(subsets->sets.size());
    for (std::size_t sp = 0; sp < subsets->sets.size(); ++sp) {
      int mask = 0;
      for (int i = 0; i < q - 1; ++i) mask |= 1 << subsets->sets[sp][std::size_t(i)];
      for (int x = 0; x < n; ++x) {
        if (mask & (1 << x)) continue;
        int before = 0;
        for (int i = 0; i < q - 1; ++i)
          if (subsets->sets[sp][std::size_t(i)] < x) ++before;
        Ext e;
        e.element = std::uint8_t(x);
        e.set_index = std::uint16_t(qsets->index_of_mask[std::size_t(mask | (1 << x))]);
        e.sign = std::int8_t((before % 2) ? -1 : 1);
        ext[sp].push_back(e);
      }
    }
    removed.resize(qsets->sets.size());
    for (std::size_t si = 0; si < qsets->sets.size(); ++si) {
      int mask = 0;
      for (int i = 0; i < q; ++i) mask |= 1 << qsets->sets[si][std::size_t(i)];
      for (int t = 0; t < q; ++t) {
        const int sub = mask & ~(1 << qsets->sets[si][std::size_t(t)]);
        removed[si][std::size_t(t)] = std::uint16_t(subsets->index_of_mask[std::size_t(sub)]);
      }
    }
  }

  static const FormTables& get(int n, int q) {
    static std::vector<std::unique_ptr<FormTables>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    for (auto& t : cache)
      if (t->n == n && t->q == q) return *t;
    cache.push_back(std::make_unique<FormTables>(n, q));
    return *cache.back();
  }
};

// K accumulation: inner(w, A <> xi) = sum_{a,b} A^a_b K(a,b).  xi and w are
// per-point component buffers in the field layout.
inline void accumulate_moment_local(const PartLayout& lay, const double* xi, const double* w,
                                    Endo& k) {
  const TensorShape& s = lay.shape;
  const int n = s.n;
  const double* xp = xi + lay.comp_offset;
  const double* wp = w + lay.comp_offset;
  if (s.p == 1 && s.q == 0) {
    for (int a = 0; a < n; ++a) {
      const double wa = wp[a];
      if (wa == 0.0) continue;
      for (int m = 0; m < n; ++m) k(a, m) -= wa * xp[m];
    }
  } else if (s.p == 1 && s.q == 1) {
    for (int a = 0; a < n; ++a)
      for (int m = 0; m < n; ++m) {
        double s1 = 0.0, s2 = 0.0;
        for (int j = 0; j < n; ++j) {
          s1 += wp[a * n + j] * xp[m * n + j];  // contravariant slot
          s2 += wp[j * n + m] * xp[j * n + a];  // covariant slot
        }
        k(a, m) += s2 - s1;
      }
  } else if (s.alternating && s.q >= 2) {
    const FormTables& tab = FormTables::get(n, s.q);
    for (std::size_t sp = 0; sp < tab.ext.size(); ++sp) {
      const auto& exts = tab.ext[sp];
      for (const auto& eb : exts) {
        const double wv = eb.sign * wp[eb.set_index];
        if (wv == 0.0) continue;
        for (const auto& em : exts)
          k(em.element, eb.element) += wv * em.sign * xp[em.set_index];
      }
    }
  } else {
    throw std::logic_error("accumulate_moment_local: unsupported part shape");
  }
}

// out = stored components of (C <> xi) for one part, from local buffers.
inline void diamond_local(const PartLayout& lay, const Endo& c, const double* xi, double* out) {
  const TensorShape& s = lay.shape;
  const int n = s.n;
  const double* xp = xi + lay.comp_offset;
  double* op = out + lay.comp_offset;
  if (s.p == 1 && s.q == 0) {
    for (int a = 0; a < n; ++a) {
      double acc = 0.0;
      for (int m = 0; m < n; ++m) acc -= c(a, m) * xp[m];
      op[a] = acc;
    }
  } else if (s.p == 1 && s.q == 1) {
    // B -> BC - CB
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int m = 0; m < n; ++m) acc += xp[i * n + m] * c(m, j) - c(i, m) * xp[m * n + j];
        op[i * n + j] = acc;
      }
  } else if (s.alternating && s.q >= 2) {
    const FormTables& tab = FormTables::get(n, s.q);
    for (std::size_t si = 0; si < tab.qsets->sets.size(); ++si) {
      double acc = 0.0;
      for (int t = 0; t < s.q; ++t) {
        const int st = tab.qsets->sets[si][std::size_t(t)];
        const auto& exts = tab.ext[tab.removed[si][std::size_t(t)]];
        double inner_acc = 0.0;
        for (const auto& em : exts) inner_acc += c(em.element, st) * em.sign * xp[em.set_index];
        acc += (t % 2 ? -1.0 : 1.0) * inner_acc;
      }
      op[si] = acc;
    }
  } else {
    throw std::logic_error("diamond_local: unsupported part shape");
  }
}

inline double norm2_local(int ncomp_total, const double* v) {
  double s = 0.0;
  for (int c = 0; c < ncomp_total; ++c) s += v[c] * v[c];
  return s;
}

// J as an endomorphism from the local buffer (part 0 of U/SU layouts).
inline Endo j_from_local(const PartLayout& lay0, int n, const double* xi) {
  Endo j(n);
  for (int i = 0; i < n; ++i)
    for (int jj = 0; jj < n; ++jj) j(i, jj) = xi[lay0.comp_offset + i * n + jj];
  return j;
}

}  // namespace pointops

// Applies the block-weighted Gram inverse to V = L*(w); see torsion.hpp.
inline Endo torsion_inverse_local(const HModel& mod, const StructureField& f, const double* xi_loc,
                                  const Endo& v) {
  if (!mod.reducible) return (1.0 / mod.c()) * v;
  const Endo j = pointops::j_from_local(f.layout()[0], mod.n, xi_loc);
  const Endo v1 = detail::span_j_part(j, v);
  return (1.0 / mod.lambda1) * v1 + (1.0 / mod.lambda2) * (v - v1);
}

// ---------------------------------------------------------------------------
// Skew-matrix-valued fields (torsion columns, divergence of torsion).

struct SkewField {
  PeriodicGrid grid;
  int n = 0;     // matrix dimension
  int axes = 0;  // matrix slots per point (n for torsion, 1 for Div T)
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::vector<double>> comp;  // [(axis * D + pair)][point]

  SkewField() = default;
  SkewField(const PeriodicGrid& g, int axes_) : grid(g), n(g.n), axes(axes_) {
    pairs = so_basis_pairs(n);
    comp.assign(std::size_t(axes) * pairs.size(), std::vector<double>(g.npoints, 0.0));
  }

  int pair_count() const { return int(pairs.size()); }

  Endo gather(int axis, std::size_t pt) const {
    Endo a(n);
    const std::size_t base = std::size_t(axis) * pairs.size();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double v = comp[base + k][pt];
      a(pairs[k].first, pairs[k].second) = v;
      a(pairs[k].second, pairs[k].first) = -v;
    }
    return a;
  }

  void scatter(int axis, std::size_t pt, const Endo& a) {
    const std::size_t base = std::size_t(axis) * pairs.size();
    for (std::size_t k = 0; k < pairs.size(); ++k)
      comp[base + k][pt] = a(pairs[k].first, pairs[k].second);
  }

  // |.|^2 under <A,B> = -tr(AB): twice the sum of squared upper entries.
  double norm2_at(std::size_t pt) const {
    double s = 0.0;
    for (const auto& c : comp) {
      const double v = c[pt];
      s += v * v;
    }
    return 2.0 * s;
  }
};

// ---------------------------------------------------------------------------

struct FlowState {
  StructureField field;
  double t = 0.0;
  long step = 0;
};

struct DiagRecord {
  long step = 0;
  double t = 0.0;
  double E = 0.0;            // (1/2) integral |T|^2
  double D = 0.0;            // (1/2) integral |grad xi|^2
  double dDdt = std::numeric_limits<double>::quiet_NaN();  // centered, filled post-run
  double dissipation = 0.0;  // integral |Div T <> xi|^2
  double sup_T = 0.0;
  double sup_grad = 0.0;
  double theta = std::numeric_limits<double>::quiet_NaN();
  double bianchi_linf = std::numeric_limits<double>::quiet_NaN();
  double bochner_ratio = std::numeric_limits<double>::quiet_NaN();
  double orbit_residual = std::numeric_limits<double>::quiet_NaN();
  double proj_residual = 0.0;    // sup |Div T - pi_m(Div T)|
  double div_l2 = 0.0;           // integral |Div T|^2
  double convexity_rhs = 0.0;    // integral (Lambda - 12 |T|^2) |Div T|^2
};

enum class Outcome { Converged, BlewUp, TimedOut, Aborted };

inline const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Converged: return "converged";
    case Outcome::BlewUp: return "blew_up";
    case Outcome::TimedOut: return "timed_out";
    case Outcome::Aborted: return "aborted";
  }
  return "?";
}

struct FlowOptions {
  int stencil_order = 2;
  double dt_sigma = 0.1;        // dt = dt_sigma * min(h)^2
  double cfl_sigma_max = 0.25;  // hard bound for explicit stability
  double t_end = 1.0;
  long max_steps = LONG_MAX;
  double blowup_factor = 100.0;  // stop when sup|T| >= factor * sup|T|(0)
  double conv_threshold = 1e-6;  // stop when sup|T| <= threshold * sup|T|(0)
  int diag_cadence = 1;
  int checkpoint_cadence = 0;  // 0 = off
  std::string checkpoint_dir;
  int threads = 1;

  bool with_orbit_monitor = true;
  bool with_bochner = false;
  double bochner_floor = 1e-12;

  bool with_theta = false;
  std::array<double, kMaxDim> theta_x0{};
  double theta_t0 = 0.0;
  int theta_images = 1;
};

// ---------------------------------------------------------------------------
// Sweeps.

// Gradient component arrays along one axis (layout parallel to the field).
inline std::vector<std::vector<double>> gradient_axis_comps(const StructureField& f, int axis,
                                                            int order, int threads) {
  std::vector<std::vector<double>> out(std::size_t(f.ncomp_total()),
                                       std::vector<double>(f.grid.npoints, 0.0));
  for (int c = 0; c < f.ncomp_total(); ++c)
    derivative_component(f.grid, axis, order, f.comp[std::size_t(c)].data(),
                         out[std::size_t(c)].data(), threads);
  return out;
}

struct TorsionSweepResult {
  SkewField torsion;                 // T_l
  std::vector<double> density_T;     // |T|^2 per point
  std::vector<double> density_grad;  // |grad xi|^2 per point
  double sup_T = 0.0;
  double sup_grad = 0.0;
  double E = 0.0;
  double D = 0.0;
};

// One pass: derivatives per axis, pointwise adjoint inversion, energy densities.
inline TorsionSweepResult compute_torsion(const StructureField& f, int order, int threads) {
  const PeriodicGrid& g = f.grid;
  const HModel& mod = f.model;
  TorsionSweepResult res{SkewField(g, g.n), std::vector<double>(g.npoints, 0.0),
                         std::vector<double>(g.npoints, 0.0)};
  const int nc = f.ncomp_total();
  for (int axis = 0; axis < g.n; ++axis) {
    const auto grad = gradient_axis_comps(f, axis, order, threads);
    for_each_block(g.npoints, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
      std::vector<double> xi_loc(std::size_t(nc), 0.0), gr_loc(std::size_t(nc), 0.0);
      for (std::size_t pt = lo; pt < hi; ++pt) {
        for (int c = 0; c < nc; ++c) {
          xi_loc[std::size_t(c)] = f.comp[std::size_t(c)][pt];
          gr_loc[std::size_t(c)] = grad[std::size_t(c)][pt];
        }
        Endo k(g.n);
        for (const auto& lay : f.layout())
          pointops::accumulate_moment_local(lay, xi_loc.data(), gr_loc.data(), k);
        const Endo t = torsion_inverse_local(mod, f, xi_loc.data(), skew_part(k));
        res.torsion.scatter(axis, pt, t);
        res.density_grad[pt] += pointops::norm2_local(nc, gr_loc.data());
      }
    });
  }
  for_each_block(g.npoints, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t pt = lo; pt < hi; ++pt) res.density_T[pt] = res.torsion.norm2_at(pt);
  });
  res.E = 0.5 * integrate(res.density_T, g, threads);
  res.D = 0.5 * integrate(res.density_grad, g, threads);
  {
    std::vector<double> tmp(g.npoints, 0.0);
    for (std::size_t pt = 0; pt < g.npoints; ++pt) tmp[pt] = std::sqrt(res.density_T[pt]);
    res.sup_T = block_max(tmp.data(), g.npoints, threads);
    for (std::size_t pt = 0; pt < g.npoints; ++pt) tmp[pt] = std::sqrt(res.density_grad[pt]);
    res.sup_grad = block_max(tmp.data(), g.npoints, threads);
  }
  return res;
}

struct DivResult {
  SkewField div;  // one matrix per point, pi_m-projected
  double proj_residual = 0.0;
  std::vector<double> dissipation_density;  // |Div T <> xi|^2 per point
  double dissipation = 0.0;
};

// Div T = sum_k d_k T_k, then pointwise projection onto m (defect logged).
inline DivResult div_torsion(const StructureField& f, const SkewField& torsion, int order,
                             int threads) {
  const PeriodicGrid& g = f.grid;
  const HModel& mod = f.model;
  DivResult res{SkewField(g, 1), 0.0, std::vector<double>(g.npoints, 0.0)};
  {
    std::vector<double> scratch(g.npoints, 0.0);
    for (int axis = 0; axis < g.n; ++axis)
      for (int p = 0; p < res.div.pair_count(); ++p) {
        derivative_component(
            g, axis, order,
            torsion.comp[std::size_t(axis) * torsion.pairs.size() + std::size_t(p)].data(),
            scratch.data(), threads);
        auto& dst = res.div.comp[std::size_t(p)];
        for (std::size_t pt = 0; pt < g.npoints; ++pt) dst[pt] += scratch[pt];
      }
  }
  const int nc = f.ncomp_total();
  const std::size_t nb = num_blocks(g.npoints);
  std::vector<double> proj_partial(nb, 0.0);
  for_each_block(g.npoints, threads, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    std::vector<double> xi_loc(std::size_t(nc), 0.0), dloc(std::size_t(nc), 0.0);
    double worst = 0.0;
    for (std::size_t pt = lo; pt < hi; ++pt) {
      for (int c = 0; c < nc; ++c) xi_loc[std::size_t(c)] = f.comp[std::size_t(c)][pt];
      const Endo raw = res.div.gather(0, pt);
      // pi_m(raw) = weighted-inverse of L*L(raw)
      for (const auto& lay : f.layout()) pointops::diamond_local(lay, raw, xi_loc.data(), dloc.data());
      Endo k(g.n);
      for (const auto& lay : f.layout())
        pointops::accumulate_moment_local(lay, xi_loc.data(), dloc.data(), k);
      const Endo proj = torsion_inverse_local(mod, f, xi_loc.data(), skew_part(k));
      worst = std::max(worst, (proj - raw).max_abs());
      res.div.scatter(0, pt, proj);
      for (const auto& lay : f.layout()) pointops::diamond_local(lay, proj, xi_loc.data(), dloc.data());
      res.dissipation_density[pt] = pointops::norm2_local(nc, dloc.data());
    }
    proj_partial[b] = worst;
  });
  for (double v : proj_partial) res.proj_residual = std::max(res.proj_residual, v);
  res.dissipation = integrate(res.dissipation_density, g, threads);
  return res;
}

// One explicit step: xi <- exp(dt C).xi pointwise.
inline void flow_step_inplace(StructureField& f, const SkewField& div, double dt,
                              double cfl_bound, int threads) {
  if (!(dt > 0.0)) throw std::invalid_argument("flow_step: dt must be positive");
  if (dt > cfl_bound)
    throw std::invalid_argument("flow_step: dt=" + std::to_string(dt) +
                                " violates the CFL bound " + std::to_string(cfl_bound));
  const PeriodicGrid& g = f.grid;
  for_each_block(g.npoints, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    MultiTensor scratch = f.make_scratch();
    for (std::size_t pt = lo; pt < hi; ++pt) {
      const Endo c = div.gather(0, pt);
      const Endo rot = expm_skew(c, dt);
      f.gather_into(pt, scratch);
      f.scatter(pt, group_act_so(rot, scratch));
    }
  });
}

inline FlowState flow_step(const FlowState& state, double dt, int order = 2,
                           double cfl_sigma_max = 0.25, int threads = 1) {
  const double h = state.field.grid.min_spacing();
  FlowState next = state;
  const auto torsion = compute_torsion(state.field, order, threads);
  const auto div = div_torsion(state.field, torsion.torsion, order, threads);
  flow_step_inplace(next.field, div.div, dt, cfl_sigma_max * h * h, threads);
  next.step = state.step + 1;
  next.t = state.t + dt;
  return next;
}

// ---------------------------------------------------------------------------
// Per-point orbit drift monitor (kind-specific quick identities).

inline double orbit_residual_at(const HModel& mod, const MultiTensor& xi) {
  switch (mod.kind) {
    case HKind::Trivial: {
      double worst = 0.0;
      for (std::size_t i = 0; i < xi.parts.size(); ++i)
        for (std::size_t j = i; j < xi.parts.size(); ++j)
          worst = std::max(worst, std::abs(inner(xi.parts[i], xi.parts[j]) - (i == j ? 1.0 : 0.0)));
      return worst;
    }
    case HKind::U: {
      const Endo j = tensor_as_endo(xi.parts[0]);
      Endo jj = j * j;
      for (int i = 0; i < j.n; ++i) jj(i, i) += 1.0;
      return std::max(jj.max_abs(), j.skew_residual());
    }
    case HKind::SU: {
      const Endo j = tensor_as_endo(xi.parts[0]);
      Endo jj = j * j;
      for (int i = 0; i < j.n; ++i) jj(i, i) += 1.0;
      double r = std::max(jj.max_abs(), j.skew_residual());
      r = std::max(r, max_abs(diamond(j, xi.parts[1]) + double(mod.m) * xi.parts[2]));
      r = std::max(r, std::abs(norm2(xi.parts[1]) + norm2(xi.parts[2]) - std::pow(2.0, mod.m)));
      return r;
    }
    case HKind::G2: {
      // phi_{ipq} phi_{jpq} = 6 g_{ij}
      const DenseTensor& phi = xi.parts[0];
      double worst = 0.0;
      for (int i = 0; i < 7; ++i)
        for (int j = i; j < 7; ++j) {
          double s = 0.0;
          for (int p = 0; p < 7; ++p)
            for (int q = 0; q < 7; ++q) {
              int ia[3] = {i, p, q}, ib[3] = {j, p, q};
              s += phi.data[phi.ravel(ia)] * phi.data[phi.ravel(ib)];
            }
          worst = std::max(worst, std::abs(s - (i == j ? 6.0 : 0.0)));
        }
      return worst;
    }
    case HKind::Spin7: {
      const DenseTensor star = hodge(xi.parts[0]);
      return std::max(max_abs(star - xi.parts[0]), std::abs(norm2(xi.parts[0]) - 14.0));
    }
  }
  return 0.0;
}

inline double orbit_residual_field(const StructureField& f, int threads) {
  const std::size_t nb = num_blocks(f.grid.npoints);
  std::vector<double> partial(nb, 0.0);
  for_each_block(f.grid.npoints, threads, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    MultiTensor scratch = f.make_scratch();
    double worst = 0.0;
    for (std::size_t pt = lo; pt < hi; ++pt) {
      f.gather_into(pt, scratch);
      worst = std::max(worst, orbit_residual_at(f.model, scratch));
    }
    partial[b] = worst;
  });
  double r = 0.0;
  for (double v : partial) r = std::max(r, v);
  return r;
}

// Energies (E, D, dissipation) of a state, one sweep.
struct Energies {
  double E = 0.0, D = 0.0, dissipation = 0.0;
};

inline Energies energies(const StructureField& f, int order = 2, int threads = 1) {
  const auto tor = compute_torsion(f, order, threads);
  const auto div = div_torsion(f, tor.torsion, order, threads);
  return {tor.E, tor.D, div.dissipation};
}

}  // namespace hflow
