#pragma once

// Command-line front end.  Subcommands:
//   verify-algebra   exact identity suite for the diamond operator
//   verify-model     model tensors: identities, constants, module ranks
//   flow             one experiment from a config file (+ overrides)
//   blowup-sweep     the same initial-data family at several radii
//   theta            localized energy from a directory of checkpoints
//   report           summarize a diagnostics CSV (optionally plot to SVG)
// Exit codes: 0 ok, 1 assertion failure, 2 bad input, 3 runtime abort.

#include <CLI11.hpp>
#include <algorithm>
#include <iostream>

#include "hflow/harness.hpp"
#include "hflow/rng.hpp"

namespace hflow {

namespace cli_detail {

struct AlgebraOptions {
  std::vector<int> dims = {4, 7, 8};
  int trials = 100;
  std::uint64_t seed = 7;
  double tol = 1e-10;
};

inline int run_verify_algebra(const AlgebraOptions& o) {
  double worst = 0.0;
  auto track = [&](const char* name, double r) {
    worst = std::max(worst, r);
    std::printf("  %-34s max residual %.3e\n", name, r);
  };
  for (int n : o.dims) {
    Rng rng(o.seed + std::uint64_t(n));
    std::printf("n = %d, %d trials per identity\n", n, o.trials);
    double r_bracket = 0, r_jacobi = 0, r_alt = 0, r_degree = 0, r_metric = 0, r_vol = 0,
           r_orth = 0, r_adj = 0;
    for (int trial = 0; trial < o.trials; ++trial) {
      const Endo a = rng.endo(n), b = rng.endo(n);
      const Endo d = rng.skew(n);
      const DenseTensor xi = rng.tensor(TensorShape(0, std::min(3, n - 1), n, true));
      // (i) action on endomorphisms is minus the bracket
      r_bracket = std::max(r_bracket, max_abs(diamond(a, endo_as_tensor(b)) -
                                              endo_as_tensor(Endo(-1.0 * bracket(a, b)))));
      // (ii) mixed-argument commutator
      r_jacobi = std::max(
          r_jacobi, max_abs(diamond(a, diamond(b, xi)) - diamond(b, diamond(a, xi)) -
                            diamond(Endo(-1.0 * bracket(a, b)), xi)) /
                        (1.0 + max_abs(xi)));
      // (iii) alternating stays alternating
      r_alt = std::max(r_alt, antisymmetry_residual(diamond(a, xi)) / (1.0 + max_abs(xi)));
      // (iv) identity acts by the net degree
      r_degree = std::max(r_degree, max_abs(diamond(Endo::identity(n), xi) -
                                            double(xi.shape.q - xi.shape.p) * xi));
      // (v) metric variation is twice the symmetric part
      {
        DenseTensor delta(TensorShape(0, 2, n, false));
        for (int i = 0; i < n; ++i) delta.at({i, i}) = 1.0;
        const DenseTensor dd = diamond(a, delta);
        Endo s(n), c(n);
        sym_skew_split(a, s, c);
        double r = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            r = std::max(r, std::abs(dd.at({i, j}) - 2.0 * s(i, j)));
        r_metric = std::max(r_metric, r);
      }
      // (vi) volume form picks up the trace (n <= 4 storage: test on R^4 forms)
      if (n == 4) {
        const DenseTensor vol = volume_form(4);
        r_vol = std::max(r_vol, max_abs(diamond(a, vol) - a.trace() * vol) /
                                    (1.0 + std::abs(a.trace())));
      }
      // (vii) skew actions are orthogonal to the argument
      r_orth = std::max(r_orth, std::abs(inner(diamond(d, xi), xi)) /
                                    (norm2(xi) * nrm(d) + 1e-300));
      // (viii) adjoint transfer
      r_adj = std::max(r_adj,
                       std::abs(inner(diamond(a, xi), diamond(d, xi)) +
                                inner(diamond(d, diamond(a, xi)), xi)) /
                           (1.0 + norm2(xi)));
    }
    track("A<>B = -[A,B]", r_bracket);
    track("A<>(B<>xi) - B<>(A<>xi)", r_jacobi);
    track("alternating preserved", r_alt);
    track("id<>xi = (q-p) xi", r_degree);
    track("A<>g = 2S", r_metric);
    if (n == 4) track("A<>vol = tr(A) vol", r_vol);
    track("<D<>xi, xi> = 0", r_orth);
    track("adjoint transfer", r_adj);
  }
  std::printf("overall max residual %.3e (tolerance %.1e)\n", worst, o.tol);
  return worst < o.tol ? 0 : 1;
}

inline std::vector<HModel> models_for(const std::string& kind) {
  if (kind == "all")
    return {make_model(HKind::Trivial, 5), make_model(HKind::U, 2), make_model(HKind::U, 3),
            make_model(HKind::SU, 2),      make_model(HKind::SU, 3), make_model(HKind::SU, 4),
            make_model(HKind::G2),         make_model(HKind::Spin7)};
  return {ExperimentConfig::model_for(kind)};
}

inline int run_verify_model(const std::string& kind, int trials, std::uint64_t seed) {
  bool ok = true;
  for (const HModel& mod : models_for(kind)) {
    const ModelReport rep = verify_model(mod);
    const SymEig eig = diamond_spectrum(mod.xi0);
    const int rank = numeric_rank(eig);
    double cworst = 0.0;
    Rng rng(seed);
    for (int t = 0; t < trials; ++t) {
      const Endo a = pi_m(mod, mod.xi0, rng.skew(mod.n));
      if (nrm(a) < 1e-8) continue;
      const MultiTensor img = diamond(a, mod.xi0);
      const double measured = inner(img, img) / so_inner(a, a);
      if (!mod.reducible) cworst = std::max(cworst, std::abs(measured - mod.c()));
    }
    const bool good =
        rep.max_residual < 1e-12 && rank == mod.dim_m && (mod.reducible || cworst < 1e-10);
    ok = ok && good;
    std::printf("%-10s identities %.2e  rank %d/%d  c-dev %.2e  %s\n", mod.name().c_str(),
                rep.max_residual, rank, mod.dim_m, cworst, good ? "ok" : "FAIL");
    for (const auto& [nm, r] : rep.residuals)
      if (std::abs(r) > 1e-12) std::printf("    %-38s %.3e\n", nm.c_str(), r);
  }
  return ok ? 0 : 1;
}

inline void apply_cli_overrides(ExperimentConfig& cfg, const ConfigMap& overrides) {
  cfg.apply(overrides);
}

inline int run_flow_command(const ExperimentConfig& cfg) {
  const ExperimentReport rep = run_experiment(cfg);
  std::printf("outcome: %s after %ld steps (t = %.6g)\n", outcome_name(rep.run.outcome),
              rep.run.state.step, rep.run.state.t);
  std::printf("E0 = %.6g  D0 = %.6g  sup|T|0 = %.6g\n", rep.E0, rep.D0, rep.sup_T0);
  std::printf("E  = %.6g  D  = %.6g  sup|T|  = %.6g\n", rep.run.records.back().E,
              rep.run.records.back().D, rep.run.records.back().sup_T);
  std::printf("csv: %s\nsummary: %s\n", rep.csv_path.c_str(), rep.summary_path.c_str());
  if (rep.run.outcome == Outcome::Aborted) {
    std::fprintf(stderr, "aborted: %s\n", rep.run.note.c_str());
    return 3;
  }
  return 0;
}

inline int run_blowup_sweep(ExperimentConfig cfg, const std::vector<double>& radii) {
  if (radii.size() < 2) throw std::invalid_argument("blowup-sweep: need at least two radii");
  std::vector<double> taus;
  const std::string base = cfg.out_dir;
  for (double r : radii) {
    ExperimentConfig c = cfg;
    c.r = r;
    char sub[64];
    std::snprintf(sub, sizeof sub, "%s/r_%g", base.c_str(), r);
    c.out_dir = sub;
    const ExperimentReport rep = run_experiment(c);
    std::printf("r = %-8g outcome = %-9s tau = %.6g  D0 = %.6g\n", r,
                outcome_name(rep.run.outcome), rep.run.tau_observed, rep.D0);
    if (rep.run.outcome == Outcome::Aborted) return 3;
    taus.push_back(rep.run.outcome == Outcome::BlewUp ? rep.run.tau_observed
                                                      : std::numeric_limits<double>::infinity());
  }
  bool ordered = true;
  for (std::size_t i = 0; i + 1 < taus.size(); ++i)
    ordered = ordered && std::isfinite(taus[i]) && std::isfinite(taus[i + 1]) &&
              taus[i] > taus[i + 1];
  std::printf("singularity times %s with decreasing radius\n",
              ordered ? "decrease strictly" : "are NOT strictly decreasing");
  return ordered ? 0 : 1;
}

inline int run_theta_command(const ExperimentConfig& cfg, const std::string& ckpt_dir,
                             const std::vector<double>& x0, double t0, int images) {
  std::vector<std::pair<long, std::string>> files;
  for (const auto& entry : std::filesystem::directory_iterator(ckpt_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("ckpt_", 0) == 0 && name.size() > 5 && entry.path().extension() == ".hstf")
      files.emplace_back(checkpoint_step_from_name(name), entry.path().string());
  }
  if (files.empty()) throw std::invalid_argument("theta: no checkpoints in " + ckpt_dir);
  std::sort(files.begin(), files.end());
  std::array<double, kMaxDim> center{};
  for (std::size_t i = 0; i < x0.size() && i < kMaxDim; ++i) center[i] = x0[i];
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  std::printf("%12s %12s %16s\n", "step", "t", "theta");
  for (const auto& [step, path] : files) {
    const StructureField f = read_checkpoint(path);
    const double h = f.grid.min_spacing();
    const double dt = cfg.dt_sigma * h * h;
    const double t = double(step) * dt;
    if (!(t < t0)) continue;
    const auto tor = compute_torsion(f, cfg.stencil_order, cfg.threads);
    const double th = theta_localized(tor.density_T, f.grid, center, t0, t, images, cfg.threads);
    std::printf("%12ld %12.6g %16.9g\n", step, t, th);
    if (th > prev * (1.0 + 1e-3)) monotone = false;
    prev = th;
  }
  std::printf("theta is %s along the recorded flow\n",
              monotone ? "non-increasing (within 1e-3)" : "NOT non-increasing");
  return monotone ? 0 : 1;
}

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvData read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("report: cannot open " + path);
  CsvData data;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("report: empty csv");
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) data.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    data.rows.push_back(std::move(row));
  }
  return data;
}

inline void write_svg_plot(const CsvData& data, const std::string& path) {
  // normalized line chart of E, D, sup_T against t
  const int w = 900, hpx = 540, margin = 60;
  auto col = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < data.header.size(); ++i)
      if (data.header[i] == name) return int(i);
    return -1;
  };
  const int ct = col("t");
  const int series[3] = {col("E"), col("D"), col("sup_T")};
  const char* names[3] = {"E", "D", "sup_T"};
  const char* colors[3] = {"#1f77b4", "#d62728", "#2ca02c"};
  double tmin = 1e300, tmax = -1e300, vmax = 0.0;
  for (const auto& r : data.rows) {
    tmin = std::min(tmin, r[std::size_t(ct)]);
    tmax = std::max(tmax, r[std::size_t(ct)]);
    for (int s = 0; s < 3; ++s)
      if (series[s] >= 0) vmax = std::max(vmax, r[std::size_t(series[s])]);
  }
  if (!(tmax > tmin)) tmax = tmin + 1.0;
  if (vmax == 0.0) vmax = 1.0;
  std::ofstream out(path, std::ios::trunc);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << hpx << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<line x1='" << margin << "' y1='" << hpx - margin << "' x2='" << w - margin
      << "' y2='" << hpx - margin << "' stroke='black'/>\n";
  out << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
      << hpx - margin << "' stroke='black'/>\n";
  for (int s = 0; s < 3; ++s) {
    if (series[s] < 0) continue;
    out << "<polyline fill='none' stroke='" << colors[s] << "' stroke-width='1.5' points='";
    for (const auto& r : data.rows) {
      const double px = margin + (r[std::size_t(ct)] - tmin) / (tmax - tmin) * (w - 2 * margin);
      const double py = hpx - margin - r[std::size_t(series[s])] / vmax * (hpx - 2 * margin);
      out << px << ',' << py << ' ';
    }
    out << "'/>\n";
    out << "<text x='" << w - margin + 5 << "' y='" << margin + 20 * s << "' fill='" << colors[s]
        << "' font-size='14'>" << names[s] << "</text>\n";
  }
  out << "<text x='" << w / 2 << "' y='" << hpx - margin / 3 << "' font-size='14'>t</text>\n";
  out << "</svg>\n";
}

inline int run_report(const std::string& csv, const std::string& plot) {
  const CsvData data = read_csv(csv);
  if (data.rows.empty()) throw std::invalid_argument("report: no data rows");
  auto col = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < data.header.size(); ++i)
      if (data.header[i] == name) return int(i);
    throw std::invalid_argument("report: missing column " + name);
  };
  const int ct = col("t"), cE = col("E"), cD = col("D"), cdd = col("dDdt"),
            cdis = col("dissipation"), csup = col("sup_T");
  const auto& first = data.rows.front();
  const auto& last = data.rows.back();
  std::printf("records: %zu   t: %.6g .. %.6g\n", data.rows.size(), first[std::size_t(ct)],
              last[std::size_t(ct)]);
  std::printf("E: %.6g -> %.6g   D: %.6g -> %.6g   sup|T|: %.6g -> %.6g\n",
              first[std::size_t(cE)], last[std::size_t(cE)], first[std::size_t(cD)],
              last[std::size_t(cD)], first[std::size_t(csup)], last[std::size_t(csup)]);
  int violations = 0;
  double worst_balance = 0.0;
  for (std::size_t i = 1; i < data.rows.size(); ++i) {
    if (data.rows[i][std::size_t(cD)] >
        data.rows[i - 1][std::size_t(cD)] + 1e-10 * first[std::size_t(cD)])
      ++violations;
    const double dd = data.rows[i][std::size_t(cdd)], ds = data.rows[i][std::size_t(cdis)];
    if (std::isfinite(dd) && ds > 0) worst_balance = std::max(worst_balance, std::abs(dd + ds) / ds);
  }
  std::printf("energy monotonicity violations: %d\n", violations);
  std::printf("worst |dD/dt + dissipation| / dissipation: %.3e\n", worst_balance);
  if (!plot.empty()) {
    write_svg_plot(data, plot);
    std::printf("plot: %s\n", plot.c_str());
  }
  return violations == 0 ? 0 : 1;
}

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"harmonic flows of geometric structures on flat tori"};
  app.require_subcommand(1);

  // verify-algebra
  auto* va = app.add_subcommand("verify-algebra", "exact identity suite for the diamond operator");
  cli_detail::AlgebraOptions ao;
  std::string va_kind;
  va->add_option("--n", ao.dims, "ambient dimensions to test");
  va->add_option("--trials", ao.trials, "random instances per identity");
  va->add_option("--seed", ao.seed, "rng seed");
  va->add_option("--tol", ao.tol, "acceptance tolerance");
  va->add_option("--kind", va_kind, "restrict to the dimension of one model (u2, g2, ...)");

  // verify-model
  auto* vm = app.add_subcommand("verify-model", "model identities, constants and module ranks");
  std::string vm_kind = "all";
  int vm_trials = 50;
  std::uint64_t vm_seed = 7;
  vm->add_option("--kind", vm_kind, "model (u2, su3, g2, spin7, trivial5, ... or all)");
  vm->add_option("--trials", vm_trials, "random m-elements per model");
  vm->add_option("--seed", vm_seed, "rng seed");

  // shared config options for flow-like commands
  ExperimentConfig cfg;
  std::string config_path, resume_path;
  ConfigMap overrides;
  auto add_config_options = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat TOML config file")->required();
    sub->add_option("--set", [&overrides](const std::vector<std::string>& kvs) {
      for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) return false;
        overrides[kv.substr(0, eq)] = parse_config_value(kv.substr(eq + 1));
      }
      return true;
    }, "override config keys as key=value (repeatable)");
  };

  auto* fl = app.add_subcommand("flow", "run one experiment");
  add_config_options(fl);
  fl->add_option("--resume", resume_path, "checkpoint to resume from");

  auto* bs = app.add_subcommand("blowup-sweep", "run the bump family at several radii");
  std::vector<double> radii;
  add_config_options(bs);
  bs->add_option("--radii", radii, "bump radii, largest first")->required()->delimiter(',');

  auto* th = app.add_subcommand("theta", "localized energy from recorded checkpoints");
  std::string ckpt_dir;
  std::vector<double> x0;
  double t0 = 0.0;
  int images = 1;
  add_config_options(th);
  th->add_option("--ckpt-dir", ckpt_dir, "checkpoint directory")->required();
  th->add_option("--x0", x0, "kernel center")->required()->delimiter(',');
  th->add_option("--t0", t0, "kernel singular time")->required();
  th->add_option("--images", images, "lattice image truncation");

  auto* rp = app.add_subcommand("report", "summarize a diagnostics CSV");
  std::string csv_path, plot_path;
  rp->add_option("--csv", csv_path, "diagnostics CSV")->required();
  rp->add_option("--plot", plot_path, "write an SVG line chart");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (va->parsed()) {
      if (!va_kind.empty())
        ao.dims = {ExperimentConfig::model_for(va_kind).n};
      return cli_detail::run_verify_algebra(ao);
    }
    if (vm->parsed()) return cli_detail::run_verify_model(vm_kind, vm_trials, vm_seed);
    if (fl->parsed() || bs->parsed() || th->parsed()) {
      cfg.apply(parse_config_file(config_path));
      cli_detail::apply_cli_overrides(cfg, overrides);
      if (fl->parsed()) {
        cfg.resume = resume_path.empty() ? cfg.resume : resume_path;
        return cli_detail::run_flow_command(cfg);
      }
      if (bs->parsed()) return cli_detail::run_blowup_sweep(cfg, radii);
      return cli_detail::run_theta_command(cfg, ckpt_dir, x0, t0, images);
    }
    if (rp->parsed()) return cli_detail::run_report(csv_path, plot_path);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 3;
  }
  return 2;
}

}  // namespace hflow
