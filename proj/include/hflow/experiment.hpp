#pragma once

// run_experiment and the JSON summary; split out so the core headers stay
// free of the json dependency.

#include <json.hpp>

#include "hflow/harness.hpp"

namespace hflow {

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const HModel mod = ExperimentConfig::model_for(cfg.kind);
  PeriodicGrid grid = PeriodicGrid::cubic(mod.n, cfg.grid_n, cfg.side);

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + cfg.out_dir);

  FlowState state;
  if (!cfg.resume.empty()) {
    state.field = read_checkpoint(cfg.resume);
    state.step = checkpoint_step_from_name(cfg.resume);
    if (!(state.field.grid == grid) || state.field.model.kind != mod.kind)
      throw std::invalid_argument("resume checkpoint does not match the configured run");
  } else {
    state.field = cfg.build_initial(mod, grid);
  }

  FlowOptions opt = cfg.flow_options();
  opt.checkpoint_dir = cfg.out_dir;

  ExperimentReport rep;
  rep.run = run_flow(std::move(state), opt);
  rep.E0 = rep.run.records.front().E;
  rep.D0 = rep.run.records.front().D;
  rep.sup_T0 = rep.run.sup_T0;

  rep.csv_path = cfg.out_dir + "/diagnostics.csv";
  write_csv(rep.run.records, rep.csv_path);

  nlohmann::json summary;
  summary["schema"] = 1;
  summary["kind"] = cfg.kind;
  summary["grid_n"] = cfg.grid_n;
  summary["side"] = cfg.side;
  summary["initial"] = cfg.initial;
  summary["r"] = cfg.r;
  summary["dt"] = rep.run.dt;
  summary["outcome"] = outcome_name(rep.run.outcome);
  summary["tau_observed"] = rep.run.tau_observed;
  summary["steps"] = rep.run.state.step;
  summary["E0"] = rep.E0;
  summary["D0"] = rep.D0;
  summary["sup_T0"] = rep.sup_T0;
  summary["E_final"] = rep.run.records.back().E;
  summary["D_final"] = rep.run.records.back().D;
  summary["sup_T_final"] = rep.run.records.back().sup_T;
  summary["orbit_residual_final"] = rep.run.records.back().orbit_residual;
  if (!rep.run.note.empty()) summary["note"] = rep.run.note;
  if (!rep.run.last_checkpoint.empty()) summary["last_checkpoint"] = rep.run.last_checkpoint;

  rep.summary_path = cfg.out_dir + "/summary.json";
  std::ofstream out(rep.summary_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + rep.summary_path);
  out << summary.dump(2) << "\n";
  return rep;
}

}  // namespace hflow
