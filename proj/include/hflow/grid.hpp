#pragma once

// Flat periodic torus grids and structure fields.
//
// Storage is component-major: one contiguous array per stored component,
// so stencil sweeps stream a single component across all points.  Forms are
// stored compressed (increasing index tuples); everything else dense.
//
// Parallel sweeps partition the points into fixed-size blocks independent of
// the worker count, and reductions fold per-block partials in block order,
// so results are bitwise identical for any number of threads.

#include <atomic>
#include <cstring>
#include <functional>
#include <thread>

#include "hflow/models.hpp"

namespace hflow {

struct PeriodicGrid {
  int n = 0;
  std::array<int, kMaxDim> res{};
  std::array<double, kMaxDim> side{};
  std::array<double, kMaxDim> spacing{};
  std::array<std::size_t, kMaxDim> stride{};
  std::size_t npoints = 0;

  PeriodicGrid() = default;
  PeriodicGrid(int n_, const std::vector<int>& res_, const std::vector<double>& side_) : n(n_) {
    if (n < 1 || n > kMaxDim) throw std::invalid_argument("PeriodicGrid: bad dimension");
    if (int(res_.size()) != n || int(side_.size()) != n)
      throw std::invalid_argument("PeriodicGrid: res/side size mismatch");
    npoints = 1;
    for (int i = 0; i < n; ++i) {
      if (res_[std::size_t(i)] < 4) throw std::invalid_argument("PeriodicGrid: need >= 4 points per axis");
      if (!(side_[std::size_t(i)] > 0)) throw std::invalid_argument("PeriodicGrid: side lengths must be positive");
      res[std::size_t(i)] = res_[std::size_t(i)];
      side[std::size_t(i)] = side_[std::size_t(i)];
      spacing[std::size_t(i)] = side_[std::size_t(i)] / res_[std::size_t(i)];
      stride[std::size_t(i)] = npoints;  // axis 0 fastest
      npoints *= std::size_t(res_[std::size_t(i)]);
    }
  }

  static PeriodicGrid cubic(int n, int points_per_axis, double length) {
    return PeriodicGrid(n, std::vector<int>(std::size_t(n), points_per_axis),
                        std::vector<double>(std::size_t(n), length));
  }

  double cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= spacing[std::size_t(i)];
    return v;
  }
  double volume() const {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= side[std::size_t(i)];
    return v;
  }
  double min_spacing() const {
    double h = spacing[0];
    for (int i = 1; i < n; ++i) h = std::min(h, spacing[std::size_t(i)]);
    return h;
  }
  double max_side() const {
    double l = side[0];
    for (int i = 1; i < n; ++i) l = std::max(l, side[std::size_t(i)]);
    return l;
  }
  double min_side() const {
    double l = side[0];
    for (int i = 1; i < n; ++i) l = std::min(l, side[std::size_t(i)]);
    return l;
  }

  void decompose(std::size_t idx, std::array<int, kMaxDim>& x) const {
    for (int i = 0; i < n; ++i) {
      x[std::size_t(i)] = int(idx % std::size_t(res[std::size_t(i)]));
      idx /= std::size_t(res[std::size_t(i)]);
    }
  }
  std::size_t index(const std::array<int, kMaxDim>& x) const {
    std::size_t idx = 0;
    for (int i = n - 1; i >= 0; --i) idx = idx * std::size_t(res[std::size_t(i)]) + std::size_t(x[std::size_t(i)]);
    return idx;
  }
  void coords(std::size_t idx, std::array<double, kMaxDim>& xyz) const {
    std::array<int, kMaxDim> x{};
    decompose(idx, x);
    for (int i = 0; i < n; ++i) xyz[std::size_t(i)] = x[std::size_t(i)] * spacing[std::size_t(i)];
  }

  bool operator==(const PeriodicGrid& o) const {
    if (n != o.n) return false;
    for (int i = 0; i < n; ++i)
      if (res[std::size_t(i)] != o.res[std::size_t(i)] || side[std::size_t(i)] != o.side[std::size_t(i)]) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Fixed-block scheduler.  Blocks are a property of the problem size only.

inline constexpr std::size_t kSweepBlock = 8192;

inline std::size_t num_blocks(std::size_t total) {
  return (total + kSweepBlock - 1) / kSweepBlock;
}

// per_block(block_index, begin, end); blocks may run on any worker.
template <class F>
void for_each_block(std::size_t total, int threads, F&& per_block) {
  const std::size_t nb = num_blocks(total);
  if (threads <= 1 || nb <= 1) {
    for (std::size_t b = 0; b < nb; ++b)
      per_block(b, b * kSweepBlock, std::min(total, (b + 1) * kSweepBlock));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= nb) return;
      per_block(b, b * kSweepBlock, std::min(total, (b + 1) * kSweepBlock));
    }
  };
  std::vector<std::thread> pool;
  const int nt = std::min<int>(threads, int(nb));
  pool.reserve(std::size_t(nt - 1));
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

// Deterministic sum over an array: per-block partials folded in block order.
inline double block_sum(const double* values, std::size_t total, int threads) {
  const std::size_t nb = num_blocks(total);
  std::vector<double> partial(nb, 0.0);
  for_each_block(total, threads, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += values[i];
    partial[b] = s;
  });
  double s = 0.0;
  for (double v : partial) s += v;
  return s;
}

inline double block_max(const double* values, std::size_t total, int threads) {
  const std::size_t nb = num_blocks(total);
  std::vector<double> partial(nb, 0.0);
  for_each_block(total, threads, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s = std::max(s, values[i]);
    partial[b] = s;
  });
  double s = 0.0;
  for (double v : partial) s = std::max(s, v);
  return s;
}

// ---------------------------------------------------------------------------

struct PartLayout {
  TensorShape shape;
  int ncomp = 0;        // stored components of this part
  int comp_offset = 0;  // index of the first component array
};

class StructureField {
 public:
  PeriodicGrid grid;
  HModel model;
  std::vector<std::vector<double>> comp;  // [component][point]

  StructureField() = default;

  StructureField(const PeriodicGrid& g, const HModel& mod) : grid(g), model(mod) {
    if (g.n != mod.n) throw std::invalid_argument("StructureField: grid/model dimension mismatch");
    int offset = 0;
    for (const auto& part : mod.xi0.parts) {
      PartLayout lay;
      lay.shape = part.shape;
      lay.ncomp = part.shape.alternating ? AltIndexTable::get(part.shape.n, part.shape.q).count()
                                         : int(part.shape.size());
      lay.comp_offset = offset;
      offset += lay.ncomp;
      layout_.push_back(lay);
    }
    comp.assign(std::size_t(offset), std::vector<double>(g.npoints, 0.0));
  }

  // Constant field with value xi (defaults to the model tensor).
  static StructureField constant(const PeriodicGrid& g, const HModel& mod) {
    return constant(g, mod, mod.xi0);
  }
  static StructureField constant(const PeriodicGrid& g, const HModel& mod, const MultiTensor& xi) {
    StructureField f(g, mod);
    for (std::size_t pt = 0; pt < g.npoints; ++pt) f.scatter(pt, xi);
    return f;
  }

  const std::vector<PartLayout>& layout() const { return layout_; }
  int ncomp_total() const { return int(comp.size()); }

  // Scratch tensor with the right shapes for gather_into.
  MultiTensor make_scratch() const { return model.xi0; }

  void gather_into(std::size_t pt, MultiTensor& out) const {
    for (std::size_t k = 0; k < layout_.size(); ++k) {
      const PartLayout& lay = layout_[k];
      DenseTensor& dst = out.parts[k];
      if (lay.shape.alternating) {
        const auto& tab = AltIndexTable::get(lay.shape.n, lay.shape.q);
        std::array<int, kMaxRank> idx{};
        for (int c = 0; c < lay.ncomp; ++c) {
          const double v = comp[std::size_t(lay.comp_offset + c)][pt];
          for (int i = 0; i < lay.shape.q; ++i) idx[std::size_t(i)] = tab.sets[std::size_t(c)][std::size_t(i)];
          DenseTensor::emit_perms(idx.data(), lay.shape.q, [&](const int* tt, int s) {
            dst.data[dst.ravel(tt)] = s * v;
          });
        }
      } else {
        for (int c = 0; c < lay.ncomp; ++c) dst.data[std::size_t(c)] = comp[std::size_t(lay.comp_offset + c)][pt];
      }
    }
  }

  MultiTensor gather(std::size_t pt) const {
    MultiTensor out = make_scratch();
    gather_into(pt, out);
    return out;
  }

  void scatter(std::size_t pt, const MultiTensor& xi) {
    for (std::size_t k = 0; k < layout_.size(); ++k) {
      const PartLayout& lay = layout_[k];
      const DenseTensor& src = xi.parts[k];
      if (lay.shape.alternating) {
        const auto& tab = AltIndexTable::get(lay.shape.n, lay.shape.q);
        std::array<int, kMaxRank> idx{};
        for (int c = 0; c < lay.ncomp; ++c) {
          for (int i = 0; i < lay.shape.q; ++i) idx[std::size_t(i)] = tab.sets[std::size_t(c)][std::size_t(i)];
          comp[std::size_t(lay.comp_offset + c)][pt] = src.data[src.ravel(idx.data())];
        }
      } else {
        for (int c = 0; c < lay.ncomp; ++c) comp[std::size_t(lay.comp_offset + c)][pt] = src.data[std::size_t(c)];
      }
    }
  }

 private:
  std::vector<PartLayout> layout_;
};

// ---------------------------------------------------------------------------
// Centered periodic stencils.  Order 2 and 4 first derivatives, plus the
// matching second-derivative stencils used by scalar diagnostics.

namespace detail {

// Centered periodic stencils in paired form: first derivatives combine the
// antisymmetric differences f[+k]-f[-k] and second derivatives the centered
// ones (f[+k]-f) + (f[-k]-f), so constants map to exactly zero.
// w2 == 0 selects the 3-point / 2-point variants.
template <bool kSecond>
void axis_stencil_pairs(const PeriodicGrid& g, int axis, double w1, double w2, const double* in,
                        double* out, int threads) {
  const int nn = g.res[std::size_t(axis)];
  const std::size_t stride = g.stride[std::size_t(axis)];
  const std::size_t nlines = g.npoints / std::size_t(nn);
  for_each_block(nlines, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t line = lo; line < hi; ++line) {
      // decompose the line index over the remaining axes
      std::size_t rem = line;
      std::size_t base = 0;
      for (int i = 0; i < g.n; ++i) {
        if (i == axis) continue;
        const int xi = int(rem % std::size_t(g.res[std::size_t(i)]));
        rem /= std::size_t(g.res[std::size_t(i)]);
        base += std::size_t(xi) * g.stride[std::size_t(i)];
      }
      auto wrap = [&](int j) {
        if (j < 0) j += nn;
        if (j >= nn) j -= nn;
        return base + std::size_t(j) * stride;
      };
      for (int j = 0; j < nn; ++j) {
        const double f0 = in[wrap(j)];
        double acc;
        if constexpr (kSecond) {
          acc = w1 * ((in[wrap(j + 1)] - f0) + (in[wrap(j - 1)] - f0));
          if (w2 != 0.0) acc += w2 * ((in[wrap(j + 2)] - f0) + (in[wrap(j - 2)] - f0));
        } else {
          acc = w1 * (in[wrap(j + 1)] - in[wrap(j - 1)]);
          if (w2 != 0.0) acc += w2 * (in[wrap(j + 2)] - in[wrap(j - 2)]);
        }
        out[base + std::size_t(j) * stride] = acc;
      }
    }
  });
}

}  // namespace detail

// First derivative of one component array along an axis.
inline void derivative_component(const PeriodicGrid& g, int axis, int order, const double* in,
                                 double* out, int threads = 1) {
  if (axis < 0 || axis >= g.n) throw std::invalid_argument("derivative: bad axis");
  const double h = g.spacing[std::size_t(axis)];
  if (order == 2)
    detail::axis_stencil_pairs<false>(g, axis, 0.5 / h, 0.0, in, out, threads);
  else if (order == 4)
    detail::axis_stencil_pairs<false>(g, axis, 8.0 / (12 * h), -1.0 / (12 * h), in, out, threads);
  else
    throw std::invalid_argument("derivative: order must be 2 or 4");
}

// Second derivative along an axis (matching interior orders).
inline void second_derivative_component(const PeriodicGrid& g, int axis, int order,
                                        const double* in, double* out, int threads = 1) {
  if (axis < 0 || axis >= g.n) throw std::invalid_argument("derivative: bad axis");
  const double h2 = g.spacing[std::size_t(axis)] * g.spacing[std::size_t(axis)];
  if (order == 2)
    detail::axis_stencil_pairs<true>(g, axis, 1.0 / h2, 0.0, in, out, threads);
  else if (order == 4)
    detail::axis_stencil_pairs<true>(g, axis, 16.0 / (12 * h2), -1.0 / (12 * h2), in, out, threads);
  else
    throw std::invalid_argument("derivative: order must be 2 or 4");
}

// Componentwise derivative of a whole structure field along one axis.
inline StructureField partial_derivative(const StructureField& f, int axis, int order = 2,
                                         int threads = 1) {
  StructureField out(f.grid, f.model);
  for (int c = 0; c < f.ncomp_total(); ++c)
    derivative_component(f.grid, axis, order, f.comp[std::size_t(c)].data(),
                         out.comp[std::size_t(c)].data(), threads);
  return out;
}

// Trapezoid rule; on a uniform periodic grid this is the plain sum times the
// cell volume and is spectrally accurate for smooth integrands.
inline double integrate(const std::vector<double>& values, const PeriodicGrid& g,
                        int threads = 1) {
  if (values.size() != g.npoints) throw std::invalid_argument("integrate: size mismatch");
  return block_sum(values.data(), g.npoints, threads) * g.cell_volume();
}

// Maps a pure per-point function over the grid; out may alias in.
// fn(point_index, xi_at_point) -> MultiTensor
template <class Fn>
StructureField apply_pointwise(const StructureField& f, Fn&& fn, int threads = 1) {
  StructureField out(f.grid, f.model);
  for_each_block(f.grid.npoints, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    MultiTensor scratch = f.make_scratch();
    for (std::size_t pt = lo; pt < hi; ++pt) {
      f.gather_into(pt, scratch);
      out.scatter(pt, fn(pt, scratch));
    }
  });
  return out;
}

}  // namespace hflow
