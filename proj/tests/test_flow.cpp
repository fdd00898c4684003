#include <doctest.h>

#include "hflow/rng.hpp"
#include "hflow/run.hpp"

using namespace hflow;

namespace {

// Smooth periodic orbit field xi(x) = exp(sin(2pi x1/L) B + cos(2pi x2/L) C).xi0.
StructureField smooth_orbit_field(const HModel& mod, const PeriodicGrid& g, double amp,
                                  std::uint64_t seed) {
  Rng rng(seed);
  const Endo b = rng.skew(mod.n), c = rng.skew(mod.n);
  StructureField f(g, mod);
  std::array<double, kMaxDim> x{};
  for (std::size_t pt = 0; pt < g.npoints; ++pt) {
    g.coords(pt, x);
    const double s = amp * std::sin(2 * M_PI * x[0] / g.side[0]);
    const double t = amp * std::cos(2 * M_PI * x[1] / g.side[1]);
    f.scatter(pt, group_act_so(expm_skew(Endo(s * b + t * c), 1.0), mod.xi0));
  }
  return f;
}

// xi(x) = exp(x1 A).xi0 along the first axis; A in m, period-matched.
StructureField axis_exp_field(const HModel& mod, const PeriodicGrid& g, const Endo& a) {
  StructureField f(g, mod);
  std::array<double, kMaxDim> x{};
  for (std::size_t pt = 0; pt < g.npoints; ++pt) {
    g.coords(pt, x);
    f.scatter(pt, group_act_so(expm_skew(a, x[0]), mod.xi0));
  }
  return f;
}

// An m-element whose one-parameter group has period L (so the field closes up).
Endo periodic_m_element(const HModel& mod, double l) {
  // for U(2): the hyperkaehler partner C2 has C2^2 = -1, so exp(x C2) has period 2 pi
  Endo c2(4);
  c2(0, 3) = 1, c2(1, 2) = -1, c2(2, 1) = 1, c2(3, 0) = -1;
  (void)mod;
  return (2.0 * M_PI / l) * c2;
}

}  // namespace

TEST_SUITE_BEGIN("flow");

TEST_CASE("compressed point kernels match the dense operators") {
  Rng rng(49);
  for (const auto& mod : {make_model(HKind::Trivial, 5), make_model(HKind::U, 2),
                          make_model(HKind::SU, 2), make_model(HKind::G2),
                          make_model(HKind::Spin7)}) {
    CAPTURE(mod.name());
    PeriodicGrid g = PeriodicGrid::cubic(mod.n, 4, 1.0);
    StructureField f(g, mod);
    const MultiTensor xi = group_act(rng.special_orthogonal(mod.n), mod.xi0);
    f.scatter(3, xi);
    const MultiTensor xi_snapped = f.gather(3);  // antisymmetrized representative
    const int nc = f.ncomp_total();
    std::vector<double> xi_loc(std::size_t(nc), 0.0), out_loc(std::size_t(nc), 0.0);
    for (int c = 0; c < nc; ++c) xi_loc[std::size_t(c)] = f.comp[std::size_t(c)][3];

    const Endo w = rng.skew(mod.n);
    // diamond
    for (const auto& lay : f.layout())
      pointops::diamond_local(lay, w, xi_loc.data(), out_loc.data());
    StructureField ref(g, mod);
    ref.scatter(0, diamond(w, xi_snapped));
    for (int c = 0; c < nc; ++c)
      CHECK(out_loc[std::size_t(c)] ==
            doctest::Approx(ref.comp[std::size_t(c)][0]).epsilon(1e-12));

    // moment/adjoint
    const MultiTensor wt = diamond(rng.skew(mod.n), xi_snapped);
    StructureField wf(g, mod);
    wf.scatter(3, wt);
    std::vector<double> w_loc(std::size_t(nc), 0.0);
    for (int c = 0; c < nc; ++c) w_loc[std::size_t(c)] = wf.comp[std::size_t(c)][3];
    Endo k(mod.n);
    for (const auto& lay : f.layout())
      pointops::accumulate_moment_local(lay, xi_loc.data(), w_loc.data(), k);
    const Endo dense_adj = diamond_adjoint(xi_snapped, wf.gather(3));
    CHECK((skew_part(k) - dense_adj).max_abs() < 1e-12 * (1.0 + dense_adj.max_abs()));
  }
}


TEST_CASE("constant fields are exact fixed points") {
  const HModel mod = make_model(HKind::U, 2);
  PeriodicGrid g = PeriodicGrid::cubic(4, 6, 2 * M_PI);
  FlowState st{StructureField::constant(g, mod), 0.0, 0};
  const auto tor = compute_torsion(st.field, 2, 1);
  CHECK(tor.sup_T == 0.0);
  CHECK(tor.E == 0.0);
  const auto div = div_torsion(st.field, tor.torsion, 2, 1);
  CHECK(div.dissipation == 0.0);
  const FlowState next = flow_step(st, 1e-3, 2);
  for (int c = 0; c < st.field.ncomp_total(); ++c)
    for (std::size_t pt = 0; pt < g.npoints; ++pt)
      CHECK(next.field.comp[std::size_t(c)][pt] == st.field.comp[std::size_t(c)][pt]);
}

TEST_CASE("torsion of the periodic one-parameter field") {
  const HModel mod = make_model(HKind::U, 2);
  const double l = 2 * M_PI;
  const Endo a = periodic_m_element(mod, l);

  for (int npts : {8, 16}) {
    PeriodicGrid g = PeriodicGrid::cubic(4, npts, l);
    const StructureField f = axis_exp_field(mod, g, a);
    const auto tor = compute_torsion(f, 2, 1);
    // columns along the other axes vanish exactly (no dependence)
    for (int axis = 1; axis < 4; ++axis)
      for (std::size_t pt = 0; pt < g.npoints; pt += 37)
        CHECK(tor.torsion.gather(axis, pt).max_abs() < 1e-13);
    // the recovered T1 is axis-independent, so Div T vanishes to rounding
    const auto div = div_torsion(f, tor.torsion, 2, 1);
    std::vector<double> dn(g.npoints, 0.0);
    for (std::size_t pt = 0; pt < g.npoints; ++pt) dn[pt] = std::sqrt(div.div.norm2_at(pt));
    CHECK(block_max(dn.data(), g.npoints, 1) < 1e-11);
  }
}

TEST_CASE("gradient energy identity D = c E on the orbit field") {
  const HModel mod = make_model(HKind::U, 2);
  // discrete gradients sit O(h^2) off the orbit tangent, so the gap between
  // D and cE closes at fourth order
  double gap8 = 0.0;
  for (int npts : {8, 16}) {
    PeriodicGrid g = PeriodicGrid::cubic(4, npts, 2 * M_PI);
    const StructureField f = smooth_orbit_field(mod, g, 0.3, 50);
    const auto tor = compute_torsion(f, 2, 1);
    const double gap = std::abs(tor.D - mod.c() * tor.E) / tor.D;
    if (npts == 8)
      gap8 = gap;
    else
      CHECK(std::log2(gap8 / gap) >= 3.5);
  }
}

TEST_CASE("discrete divergence theorem for the raw divergence") {
  const HModel mod = make_model(HKind::U, 2);
  PeriodicGrid g = PeriodicGrid::cubic(4, 6, 1.0);
  const StructureField f = smooth_orbit_field(mod, g, 0.2, 51);
  const auto tor = compute_torsion(f, 2, 1);
  // raw divergence (no projection)
  SkewField raw(g, 1);
  {
    std::vector<double> scratch(g.npoints, 0.0);
    for (int axis = 0; axis < 4; ++axis)
      for (int p = 0; p < raw.pair_count(); ++p) {
        derivative_component(g, axis, 2,
                             tor.torsion.comp[std::size_t(axis) * tor.torsion.pairs.size() + std::size_t(p)].data(),
                             scratch.data(), 1);
        for (std::size_t pt = 0; pt < g.npoints; ++pt) raw.comp[std::size_t(p)][pt] += scratch[pt];
      }
  }
  // random periodic skew test field W
  Rng rng(52);
  SkewField w(g, 1);
  for (auto& c : w.comp)
    for (auto& v : c) v = rng.gauss();
  // lhs = integral <Div T, W>, rhs = -integral sum_k <T_k, d_k W>
  std::vector<double> lhs(g.npoints, 0.0), rhs(g.npoints, 0.0);
  {
    std::vector<double> dwk(g.npoints, 0.0);
    for (int p = 0; p < raw.pair_count(); ++p)
      for (std::size_t pt = 0; pt < g.npoints; ++pt)
        lhs[pt] += 2.0 * raw.comp[std::size_t(p)][pt] * w.comp[std::size_t(p)][pt];
    for (int axis = 0; axis < 4; ++axis)
      for (int p = 0; p < raw.pair_count(); ++p) {
        derivative_component(g, axis, 2, w.comp[std::size_t(p)].data(), dwk.data(), 1);
        for (std::size_t pt = 0; pt < g.npoints; ++pt)
          rhs[pt] -= 2.0 * tor.torsion.comp[std::size_t(axis) * tor.torsion.pairs.size() + std::size_t(p)][pt] * dwk[pt];
      }
  }
  const double vl = integrate(lhs, g, 1), vr = integrate(rhs, g, 1);
  CHECK(vl == doctest::Approx(vr).epsilon(1e-12));
}

TEST_CASE("one step is first-order consistent with the flow vector") {
  const HModel mod = make_model(HKind::U, 2);
  PeriodicGrid g = PeriodicGrid::cubic(4, 8, 2 * M_PI);
  const StructureField f = smooth_orbit_field(mod, g, 0.4, 53);
  const auto tor = compute_torsion(f, 2, 1);
  const auto div = div_torsion(f, tor.torsion, 2, 1);
  double prev_err = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double dt = (k == 0) ? 2e-3 : 1e-3;
    StructureField stepped = f;
    flow_step_inplace(stepped, div.div, dt, 1.0, 1);
    double worst = 0.0;
    MultiTensor scratch = f.make_scratch(), scratch2 = f.make_scratch();
    std::vector<double> dloc(std::size_t(f.ncomp_total()), 0.0), xi_loc(dloc);
    for (std::size_t pt = 0; pt < g.npoints; pt += 11) {
      f.gather_into(pt, scratch);
      stepped.gather_into(pt, scratch2);
      const MultiTensor lin = scratch + dt * diamond(div.div.gather(0, pt), scratch);
      worst = std::max(worst, max_abs(scratch2 - lin));
    }
    if (k == 0)
      prev_err = worst;
    else
      CHECK(prev_err / worst >= 3.5);  // O(dt^2) remainder
  }
}

TEST_CASE("orbit preservation over many steps vs naive Euler") {
  const HModel mod = make_model(HKind::U, 2);
  PeriodicGrid g = PeriodicGrid::cubic(4, 4, 2 * M_PI);
  const StructureField f0 = smooth_orbit_field(mod, g, 0.5, 54);
  const double h = g.min_spacing();
  const double dt = 0.1 * h * h;
  const int nsteps = 10000;

  StructureField expf = f0;
  for (int s = 0; s < nsteps; ++s) {
    const auto tor = compute_torsion(expf, 2, 1);
    const auto div = div_torsion(expf, tor.torsion, 2, 1);
    flow_step_inplace(expf, div.div, dt, 0.25 * h * h, 1);
  }
  const double exp_residual = orbit_residual_field(expf, 1);
  CHECK(exp_residual <= 1e-10);

  // naive forward Euler on raw components drifts off the orbit
  StructureField naive = f0;
  MultiTensor scratch = naive.make_scratch();
  for (int s = 0; s < nsteps; ++s) {
    const auto tor = compute_torsion(naive, 2, 1);
    const auto div = div_torsion(naive, tor.torsion, 2, 1);
    for (std::size_t pt = 0; pt < g.npoints; ++pt) {
      naive.gather_into(pt, scratch);
      naive.scatter(pt, scratch + dt * diamond(div.div.gather(0, pt), scratch));
    }
  }
  const double naive_residual = orbit_residual_field(naive, 1);
  CHECK(naive_residual > 100.0 * std::max(exp_residual, 1e-14));
}

TEST_CASE("flow_step rejects CFL violations naming the bound") {
  const HModel mod = make_model(HKind::U, 2);
  PeriodicGrid g = PeriodicGrid::cubic(4, 6, 2 * M_PI);
  FlowState st{StructureField::constant(g, mod), 0.0, 0};
  const double h = g.min_spacing();
  CHECK_THROWS_WITH_AS(flow_step(st, 10.0 * h * h, 2, 0.25, 1),
                       doctest::Contains("CFL"), std::invalid_argument);
}

TEST_CASE("run_flow stops immediately on a torsion-free start") {
  const HModel mod = make_model(HKind::U, 2);
  PeriodicGrid g = PeriodicGrid::cubic(4, 6, 2 * M_PI);
  FlowOptions opt;
  opt.t_end = 1.0;
  const RunResult rr = run_flow({StructureField::constant(g, mod), 0.0, 0}, opt);
  CHECK(rr.outcome == Outcome::Converged);
  CHECK(rr.tau_observed == 0.0);
  CHECK(rr.records.size() == 1);
  CHECK(rr.records[0].E == 0.0);
}

TEST_CASE("monotone energy decay along a smooth run") {
  const HModel mod = make_model(HKind::U, 2);
  PeriodicGrid g = PeriodicGrid::cubic(4, 12, 2 * M_PI);
  FlowOptions opt;
  opt.t_end = 0.25;
  opt.dt_sigma = 0.05;
  opt.with_orbit_monitor = true;
  const RunResult rr = run_flow({smooth_orbit_field(mod, g, 0.4, 55), 0.0, 0}, opt);
  REQUIRE(rr.records.size() > 10);
  const double d0 = rr.records.front().D;
  for (std::size_t i = 1; i < rr.records.size(); ++i)
    CHECK(rr.records[i].D <= rr.records[i - 1].D + 1e-10 * d0);
  // centered dD/dt tracks the dissipation
  for (std::size_t i = 1; i + 1 < rr.records.size(); ++i) {
    CAPTURE(i);
    CHECK(rr.records[i].dDdt ==
          doctest::Approx(-rr.records[i].dissipation).epsilon(0.08));
  }
  // D = c E to discretization accuracy, orbit held to rounding
  for (const auto& r : rr.records) {
    CHECK(r.D == doctest::Approx(mod.c() * r.E).epsilon(1e-2));
    CHECK(r.orbit_residual < 1e-12);
  }
}

TEST_CASE("resume from checkpoint reproduces the run bitwise") {
  const HModel mod = make_model(HKind::U, 2);
  PeriodicGrid g = PeriodicGrid::cubic(4, 6, 2 * M_PI);
  const StructureField f0 = smooth_orbit_field(mod, g, 0.4, 56);
  FlowOptions opt;
  opt.t_end = 1e9;
  opt.max_steps = 20;
  opt.checkpoint_cadence = 10;
  opt.checkpoint_dir = ".";
  const RunResult full = run_flow({f0, 0.0, 0}, opt);
  REQUIRE(full.state.step == 20);

  const StructureField mid = read_checkpoint(checkpoint_name(".", 10));
  FlowOptions opt2 = opt;
  opt2.checkpoint_cadence = 0;
  const RunResult resumed = run_flow({mid, 0.0, 10}, opt2);
  CHECK(resumed.state.step == 20);
  CHECK(resumed.state.t == full.state.t);
  for (int c = 0; c < f0.ncomp_total(); ++c)
    for (std::size_t pt = 0; pt < g.npoints; ++pt)
      CHECK(resumed.state.field.comp[std::size_t(c)][pt] ==
            full.state.field.comp[std::size_t(c)][pt]);
  std::remove(checkpoint_name(".", 0).c_str());
  std::remove(checkpoint_name(".", 10).c_str());
  std::remove(checkpoint_name(".", 20).c_str());
}

TEST_CASE("runs are bitwise identical across worker counts") {
  const HModel mod = make_model(HKind::U, 2);
  PeriodicGrid g = PeriodicGrid::cubic(4, 6, 2 * M_PI);
  const StructureField f0 = smooth_orbit_field(mod, g, 0.4, 57);
  FlowOptions opt;
  opt.t_end = 1e9;
  opt.max_steps = 8;
  RunResult a, b;
  {
    FlowOptions o1 = opt;
    o1.threads = 1;
    a = run_flow({f0, 0.0, 0}, o1);
  }
  {
    FlowOptions o3 = opt;
    o3.threads = 3;
    b = run_flow({f0, 0.0, 0}, o3);
  }
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].E == b.records[i].E);
    CHECK(a.records[i].D == b.records[i].D);
    CHECK(a.records[i].dissipation == b.records[i].dissipation);
    CHECK(a.records[i].sup_T == b.records[i].sup_T);
  }
  for (int c = 0; c < f0.ncomp_total(); ++c)
    for (std::size_t pt = 0; pt < g.npoints; ++pt)
      CHECK(a.state.field.comp[std::size_t(c)][pt] == b.state.field.comp[std::size_t(c)][pt]);
}

TEST_SUITE_END();
