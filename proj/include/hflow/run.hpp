#pragma once

// Flow driver: explicit time stepping with diagnostics cadence, stop
// conditions (convergence / blow-up / horizon / NaN abort), checkpoints and
// the diagnostics CSV.
//
// Time is always parameterized as t = step * dt, so a run resumed from a
// checkpoint at step k reproduces the uninterrupted trajectory bitwise.

#include "hflow/diagnostics.hpp"

namespace hflow {

struct RunResult {
  FlowState state;
  std::vector<DiagRecord> records;
  Outcome outcome = Outcome::TimedOut;
  double tau_observed = 0.0;  // t at the stop
  double sup_T0 = 0.0;
  double dt = 0.0;
  std::string note;
  std::string last_checkpoint;
};

// Called on every computed step with the freshly evaluated fields.
using StepCallback =
    std::function<void(const FlowState&, const TorsionSweepResult&, const DivResult&)>;

inline std::string checkpoint_name(const std::string& dir, long step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "ckpt_%08ld.hstf", step);
  return dir.empty() ? std::string(buf) : dir + "/" + buf;
}

inline RunResult run_flow(FlowState initial, const FlowOptions& opt,
                          const StepCallback& callback = {}) {
  if (opt.dt_sigma > opt.cfl_sigma_max)
    throw std::invalid_argument("run_flow: dt_sigma exceeds the CFL bound cfl_sigma_max = " +
                                std::to_string(opt.cfl_sigma_max));
  RunResult out;
  out.state = std::move(initial);
  const PeriodicGrid& g = out.state.field.grid;
  const double h = g.min_spacing();
  const double dt = opt.dt_sigma * h * h;
  out.dt = dt;
  out.state.t = double(out.state.step) * dt;
  const double lambda = first_nonzero_laplacian_eigenvalue(g);

  bool have_sup0 = false;
  double conv_abs = 0.0, blowup_abs = std::numeric_limits<double>::infinity();

  // Bochner bookkeeping: energy density at the last two records.
  std::vector<double> e_prev, e_mid;
  double t_eprev = 0.0, t_emid = 0.0;
  std::ptrdiff_t bochner_slot = -1;  // record index awaiting its ratio

  for (;;) {
    const auto tor = compute_torsion(out.state.field, opt.stencil_order, opt.threads);
    const auto div = div_torsion(out.state.field, tor.torsion, opt.stencil_order, opt.threads);
    if (callback) callback(out.state, tor, div);

    if (!have_sup0) {
      out.sup_T0 = tor.sup_T;
      conv_abs = opt.conv_threshold * out.sup_T0;
      blowup_abs = opt.blowup_factor * out.sup_T0;
      have_sup0 = true;
    }

    const bool nan_hit = !std::isfinite(tor.sup_T) || !std::isfinite(tor.D) ||
                         !std::isfinite(div.dissipation);
    const bool blew_up = !nan_hit && out.sup_T0 > 0.0 && tor.sup_T >= blowup_abs &&
                         out.state.step > 0;
    const bool converged = !nan_hit && tor.sup_T <= conv_abs;
    const bool horizon = out.state.t >= opt.t_end - 0.5 * dt || out.state.step >= opt.max_steps;
    const bool stopping = nan_hit || blew_up || converged || horizon;

    const long rel_step = out.state.step;
    const bool record_now = (rel_step % opt.diag_cadence == 0) || stopping;

    if (record_now) {
      DiagRecord rec;
      rec.step = out.state.step;
      rec.t = out.state.t;
      rec.E = tor.E;
      rec.D = tor.D;
      rec.dissipation = div.dissipation;
      rec.sup_T = tor.sup_T;
      rec.sup_grad = tor.sup_grad;
      rec.proj_residual = div.proj_residual;
      // integral |Div T|^2 and the convexity right-hand side
      {
        std::vector<double> dens(g.npoints, 0.0), rhs(g.npoints, 0.0);
        for (std::size_t pt = 0; pt < g.npoints; ++pt) {
          dens[pt] = div.div.norm2_at(pt);
          rhs[pt] = (lambda - 12.0 * tor.density_T[pt]) * dens[pt];
        }
        rec.div_l2 = integrate(dens, g, opt.threads);
        rec.convexity_rhs = integrate(rhs, g, opt.threads);
      }
      if (opt.with_orbit_monitor)
        rec.orbit_residual = orbit_residual_field(out.state.field, opt.threads);
      if (opt.with_theta && out.state.t < opt.theta_t0)
        rec.theta = theta_localized(tor.density_T, g, opt.theta_x0, opt.theta_t0, out.state.t,
                                    opt.theta_images, opt.threads);
      if (opt.with_bochner) {
        if (!e_mid.empty() && bochner_slot >= 0) {
          out.records[std::size_t(bochner_slot)].bochner_ratio =
              bochner_ratio(e_prev, e_mid, tor.density_grad, 0.5 * (out.state.t - t_eprev), g,
                            opt.stencil_order, opt.bochner_floor, opt.threads);
        }
        e_prev = std::move(e_mid);
        t_eprev = t_emid;
        e_mid = tor.density_grad;
        t_emid = out.state.t;
        bochner_slot = std::ptrdiff_t(out.records.size());
      }
      out.records.push_back(std::move(rec));
    }

    // never checkpoint a non-finite state: on abort the last good one stands
    if (opt.checkpoint_cadence > 0 && !nan_hit &&
        (rel_step % opt.checkpoint_cadence == 0 || stopping)) {
      out.last_checkpoint = checkpoint_name(opt.checkpoint_dir, out.state.step);
      write_checkpoint(out.last_checkpoint, out.state.field);
    }

    if (stopping) {
      out.tau_observed = out.state.t;
      if (nan_hit) {
        out.outcome = Outcome::Aborted;
        out.note = "non-finite diagnostics at step " + std::to_string(out.state.step) +
                   (out.last_checkpoint.empty() ? "" : "; last checkpoint " + out.last_checkpoint);
      } else if (blew_up) {
        out.outcome = Outcome::BlewUp;
      } else if (converged) {
        out.outcome = Outcome::Converged;
      } else {
        out.outcome = Outcome::TimedOut;
      }
      break;
    }

    flow_step_inplace(out.state.field, div.div, dt, opt.cfl_sigma_max * h * h, opt.threads);
    out.state.step += 1;
    out.state.t = double(out.state.step) * dt;
  }

  // centered dD/dt over the recorded times
  for (std::size_t i = 1; i + 1 < out.records.size(); ++i)
    out.records[i].dDdt = (out.records[i + 1].D - out.records[i - 1].D) /
                          (out.records[i + 1].t - out.records[i - 1].t);
  return out;
}

// ---------------------------------------------------------------------------

inline void write_csv(const std::vector<DiagRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("csv: cannot open " + path);
  out << "t,E,D,dDdt,dissipation,sup_T,sup_grad,theta,bianchi_linf,bochner_ratio,orbit_residual\n";
  for (const auto& r : records) {
    out << format_g17(r.t) << ',' << format_g17(r.E) << ',' << format_g17(r.D) << ','
        << format_g17(r.dDdt) << ',' << format_g17(r.dissipation) << ',' << format_g17(r.sup_T)
        << ',' << format_g17(r.sup_grad) << ',' << format_g17(r.theta) << ','
        << format_g17(r.bianchi_linf) << ',' << format_g17(r.bochner_ratio) << ','
        << format_g17(r.orbit_residual) << '\n';
  }
  if (!out) throw std::runtime_error("csv: write failed for " + path);
}

}  // namespace hflow
