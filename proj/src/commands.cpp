#include "seldyn/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seldyn/adjoint.hpp"
#include "seldyn/control.hpp"
#include "seldyn/dynamics.hpp"
#include "seldyn/errors.hpp"
#include "seldyn/experiment.hpp"
#include "seldyn/io.hpp"
#include "seldyn/objective.hpp"
#include "seldyn/stability.hpp"

namespace seldyn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitPrecondition = 4;

// Reports avoid wall-clock data on purpose: rerunning a command with
// the same config must reproduce every output byte for byte.
void write_json_file(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw ConfigError("failed while writing " + path.string());
}

json report_skeleton(const char* command, const Experiment& exp) {
  json report;
  report["command"] = command;
  report["config"] = exp.echo;
  report["artifacts"] = json::array();
  return report;
}

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

int cmd_forward(const Experiment& exp, const fs::path& out, bool verbose) {
  json report = report_skeleton("forward", exp);

  if (verbose)
    std::cerr << "forward: " << exp.time.steps << " steps of dt = " << exp.time.dt() << '\n';

  int diverged_at = -1;
  double bad_norm = 0.0;
  const Trajectory traj = forward_solve_partial(exp.controls, exp.f_I, exp.act, exp.grid,
                                                exp.time, &diverged_at, &bad_norm);
  io::write_trajectory_csv(out / "trajectory.csv", traj);
  report["artifacts"].push_back("trajectory.csv");

  if (diverged_at >= 0) {
    report["diverged"] = true;
    report["diverged_at_step"] = diverged_at;
    report["diverged_norm"] = bad_norm;
    write_json_file(out / "report.json", report);
    std::cout << "forward: diverged at step " << diverged_at << " (sup-norm "
              << io::format_g17(bad_norm) << "), partial trajectory saved\n";
    return kExitNotConverged;
  }
  report["diverged"] = false;
  report["terminal_norm_l2"] = norm_l2(traj.terminal(), exp.grid);

  if (exp.controls.time_constant) {
    LyapunovTrace trace;
    bool with_energy = true;
    try {
      trace = lyapunov_trace(traj, exp.controls, exp.act, exp.grid, /*energy_series=*/true);
    } catch (const std::invalid_argument& e) {
      with_energy = false;
      trace = lyapunov_trace(traj, exp.controls, exp.act, exp.grid, /*energy_series=*/false);
      report["lyapunov_energy_skipped"] = e.what();
    }
    std::string header = "t,sigma_antideriv,dissipation";
    std::vector<const std::vector<double>*> cols = {&trace.times, &trace.sigma_antideriv,
                                                    &trace.dissipation};
    if (with_energy) {
      header += ",energy";
      cols.push_back(&trace.energy);
    }
    io::write_columns_csv(out / "lyapunov.csv", header, cols);
    report["artifacts"].push_back("lyapunov.csv");
  } else {
    report["lyapunov_skipped"] = "controls are time-varying";
  }

  if (exp.time.steps >= 8) {
    const GrowthFit fit = growth_fit(traj, exp.grid);
    report["growth"] = {
        {"model", to_string(fit.model)},
        {"rate", fit.rate},
        {"prefactor", fit.prefactor},
        {"residual", fit.residual},
        {"linear_residual", fit.linear_residual},
        {"exponential_residual", fit.exponential_residual},
    };
  }

  // Separable ReLU runs carry their own exact solution; report how far
  // the march drifted from it.
  if (exp.rank_one && exp.act.kind() == ActivationKind::relu && exp.controls.time_constant) {
    double max_gap = 0.0;
    for (int l = 0; l <= traj.steps(); ++l) {
      const Field exact = rank_one_relu_solution(*exp.rank_one, exp.time.time_at(l), exp.grid);
      const Field diff(traj.states[l].values - exact.values);
      max_gap = std::max(max_gap, norm_l2(diff, exp.grid));
    }
    report["rank_one_max_gap_l2"] = max_gap;
  }

  write_json_file(out / "report.json", report);
  std::cout << "forward: " << exp.time.steps << " steps, terminal L2 norm "
            << io::format_g17(norm_l2(traj.terminal(), exp.grid)) << '\n';
  return kExitOk;
}

int cmd_train(const Experiment& exp, const fs::path& out, bool verbose) {
  if (!exp.loss) throw ConfigError("train: configuration has no loss section");
  if (!exp.train) throw ConfigError("train: configuration has no train section");

  const TrainConfig& cfg = *exp.train;
  if (verbose)
    std::cerr << "train: " << to_string(cfg.algo) << ", at most " << cfg.max_iters
              << " outer iterations\n";

  const Problem problem{exp.grid, exp.time, exp.act, exp.f_I, *exp.loss, exp.controls};
  const TrainResult result =
      cfg.algo == TrainAlgo::ppa ? train_ppa(problem, cfg) : train_pmp(problem, cfg);

  io::write_control_bias_csv(out / "controls_a.csv", result.params.a, exp.grid, exp.time);
  io::write_control_kernel_csv(out / "controls_b.csv", result.params.b, exp.grid, exp.time);
  io::write_history_csv(out / "loss_history.csv", result.loss_history);

  json report = report_skeleton("train", exp);
  report["artifacts"] = {"controls_a.csv", "controls_b.csv", "loss_history.csv"};
  if (cfg.algo == TrainAlgo::ppa) {
    io::write_history_csv(out / "grad_norm_history.csv", result.grad_norm_history);
    report["artifacts"].push_back("grad_norm_history.csv");
  } else {
    io::write_history_csv(out / "hamiltonian_history.csv", result.hamiltonian_history);
    report["artifacts"].push_back("hamiltonian_history.csv");
  }
  report["algo"] = to_string(cfg.algo);
  report["converged"] = result.converged;
  report["iterations"] = result.iterations;
  report["final_loss"] = result.loss_history.back();
  if (!result.note.empty()) report["note"] = result.note;
  write_json_file(out / "report.json", report);

  std::cout << "train (" << to_string(cfg.algo) << "): "
            << (result.converged ? "converged" : "stopped") << " after " << result.iterations
            << " iterations, final loss " << io::format_g17(result.loss_history.back()) << '\n';
  return result.converged ? kExitOk : kExitNotConverged;
}

int cmd_analyze(const Experiment& exp, const fs::path& out, bool verbose) {
  detail::require(exp.controls.time_constant,
                  "analyze: diagnostics need autonomous controls (a single a, b slice)");
  const Field& a0 = exp.controls.a.front();
  const KernelSlice& b0 = exp.controls.b.front();

  json report = report_skeleton("analyze", exp);

  // Diagnostics with activation preconditions degrade to a skipped
  // section instead of aborting the whole command; the purely linear
  // ones below always run.
  try {
    const SpectralReport rep = spectral_report(b0, exp.act, exp.grid, exp.analyze_triples);
    json sj;
    sj["verdict"] = to_string(rep.verdict);
    sj["kernel_symmetric"] = rep.kernel_symmetric;
    sj["tn_invertible"] = rep.tn_invertible;
    sj["dn_tn_posdef"] = rep.dn_tn_posdef;
    sj["sigma_prime0"] = rep.sigma_prime0;
    sj["n_requested"] = rep.n_requested;
    sj["n_used"] = rep.n_used;
    if (!rep.warning.empty()) sj["warning"] = rep.warning;
    sj["symmetric_part_eigs"] = rep.symmetric_part_eigs;
    sj["singular_values"] = rep.singular_values;
    sj["spectrum_real"] = rep.spectrum_real;
    sj["spectrum_imag"] = rep.spectrum_imag;
    sj["top_mu"] = rep.top_mu;
    sj["gram"] = matrix_rows(rep.gram);
    report["spectral"] = sj;
    std::cout << "analyze: spectral verdict " << to_string(rep.verdict) << '\n';
  } catch (const std::invalid_argument& e) {
    report["spectral"] = {{"skipped", e.what()}};
    std::cout << "analyze: spectral diagnostics skipped (" << e.what() << ")\n";
  }

  const SteadyStateReport ss = find_steady_state(a0, b0, exp.grid);
  io::write_field_csv(out / "steady_state.csv", ss.candidate, exp.grid);
  report["artifacts"].push_back("steady_state.csv");
  report["steady_state"] = {
      {"residual", ss.residual},
      {"in_range", ss.in_range},
      {"nullspace_dim", ss.nullspace_dim},
      {"non_unique", ss.non_unique},
  };
  if (verbose)
    std::cerr << "analyze: steady-state residual " << io::format_g17(ss.residual) << '\n';

  report["conditioning_bound"] = conditioning_bound(exp.controls, exp.act, exp.grid).front();

  if (exp.rank_one) {
    // The stored factorization has psi carrying the y-dependence and
    // phi the z-dependence, which is the argument order the classifier
    // expects.
    try {
      const RankOneVerdict v =
          classify_rank_one(exp.rank_one->psi, exp.rank_one->phi, exp.act, exp.grid);
      report["rank_one"] = {
          {"case", to_string(v.tag)},
          {"i_phi_psi", v.i_phi_psi},
          {"i_phi2_psi", v.i_phi2_psi},
          {"i_phi3_psi", v.i_phi3_psi},
          {"first_order", v.first_order},
          {"second_order", v.second_order},
          {"third_order", v.third_order},
      };
      std::cout << "analyze: rank-one case " << to_string(v.tag) << '\n';
    } catch (const std::invalid_argument& e) {
      report["rank_one"] = {{"skipped", e.what()}};
    }
  }

  write_json_file(out / "report.json", report);
  return kExitOk;
}

int cmd_gradcheck(const Experiment& exp, const fs::path& out, bool verbose) {
  if (!exp.loss) throw ConfigError("gradcheck: configuration has no loss section");
  const double h = 1e-5;
  const double tolerance = 1e-5;

  const Trajectory traj = forward_solve(exp.controls, exp.f_I, exp.act, exp.grid, exp.time);
  const Field r_T = terminal_condition(*exp.loss, traj.terminal(), exp.grid);
  const CostateTrajectory costate = adjoint_solve(exp.controls, traj, exp.act, r_T);
  const ParamGradient grad = gradient(traj, costate, exp.controls, *exp.loss, exp.act, exp.grid);

  if (verbose) std::cerr << "gradcheck: running central finite differences, h = " << h << '\n';
  const ParamGradient ref =
      finite_diff_gradient(exp.controls, *exp.loss, exp.f_I, exp.act, exp.grid, exp.time, h);

  // Difference quotients that straddle an activation kink in the
  // pre-activation are meaningless, so those entries are skipped for
  // the piecewise kinds.
  const ActivationKind kind = exp.act.kind();
  const bool kinked = kind == ActivationKind::relu || kind == ActivationKind::leaky_relu ||
                      kind == ActivationKind::elu;
  const double kink_margin = 10.0 * h;

  const int steps = exp.time.steps;
  std::vector<Field> u(steps);
  for (int l = 0; l < steps; ++l) u[l] = residual(exp.controls, traj, l);

  double ref_scale = 0.0;
  for (const Field& fld : ref.a) ref_scale = std::max(ref_scale, fld.values.cwiseAbs().maxCoeff());
  for (const KernelSlice& k : ref.b)
    ref_scale = std::max(ref_scale, k.values.cwiseAbs().maxCoeff());
  if (ref.has_classifier_blocks()) {
    ref_scale = std::max(ref_scale, ref.W.values.cwiseAbs().maxCoeff());
    ref_scale = std::max(ref_scale, ref.mu.values.cwiseAbs().maxCoeff());
  }
  const double floor_abs = std::max(1e-9 * ref_scale, 1e-300);
  const auto gap = [&](double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), floor_abs);
  };

  struct BlockStats {
    double max = 0.0;
    double sum = 0.0;
    long count = 0;
    void add(double g) {
      max = std::max(max, g);
      sum += g;
      ++count;
    }
    double mean() const { return count > 0 ? sum / count : 0.0; }
  };
  BlockStats stats_a, stats_b, stats_w, stats_mu;
  long masked = 0;
  const int n = exp.grid.size();
  for (int l = 0; l < steps; ++l) {
    for (int i = 0; i < n; ++i) {
      if (kinked && std::abs(u[l].values[i]) <= kink_margin) {
        masked += 1 + n;  // the bias entry plus the kernel row it gates
        continue;
      }
      stats_a.add(gap(grad.a[l].values[i], ref.a[l].values[i]));
      for (int j = 0; j < n; ++j)
        stats_b.add(gap(grad.b[l].values(i, j), ref.b[l].values(i, j)));
    }
  }
  if (grad.has_classifier_blocks()) {
    for (int i = 0; i < n; ++i) {
      stats_mu.add(gap(grad.mu.values[i], ref.mu.values[i]));
      for (int j = 0; j < n; ++j) stats_w.add(gap(grad.W.values(i, j), ref.W.values(i, j)));
    }
  }

  // a stationary instance leaves nothing to compare: both gradients sit
  // at roundoff level, where relative gaps are meaningless
  double grad_scale = 0.0;
  for (const Field& fld : grad.a)
    grad_scale = std::max(grad_scale, fld.values.cwiseAbs().maxCoeff());
  for (const KernelSlice& k : grad.b)
    grad_scale = std::max(grad_scale, k.values.cwiseAbs().maxCoeff());
  if (grad.has_classifier_blocks()) {
    grad_scale = std::max(grad_scale, grad.W.values.cwiseAbs().maxCoeff());
    grad_scale = std::max(grad_scale, grad.mu.values.cwiseAbs().maxCoeff());
  }
  const bool vanishing = grad_scale <= 1e-10 && ref_scale <= 1e-10;

  const double overall = std::max({stats_a.max, stats_b.max, stats_w.max, stats_mu.max});
  const bool pass = vanishing || overall <= tolerance;

  json report = report_skeleton("gradcheck", exp);
  report["h"] = h;
  report["tolerance"] = tolerance;
  if (vanishing) {
    report["note"] = "both gradients vanish (stationary instance); comparison skipped";
  } else {
    report["max_gap"] = overall;
    report["max_gap_a"] = stats_a.max;
    report["mean_gap_a"] = stats_a.mean();
    report["max_gap_b"] = stats_b.max;
    report["mean_gap_b"] = stats_b.mean();
    if (grad.has_classifier_blocks()) {
      report["max_gap_W"] = stats_w.max;
      report["mean_gap_W"] = stats_w.mean();
      report["max_gap_mu"] = stats_mu.max;
      report["mean_gap_mu"] = stats_mu.mean();
    }
  }
  if (kinked) {
    report["masked_entries"] = masked;
    report["kink_note"] =
        "entries whose pre-activation lies within 10 h of the kink are excluded";
  }
  report["pass"] = pass;
  write_json_file(out / "report.json", report);

  if (vanishing) {
    std::cout << "gradcheck: both gradients vanish, comparison skipped: PASS\n";
  } else {
    std::cout << "gradcheck: max relative gap " << io::format_g17(overall)
              << " against tolerance " << io::format_g17(tolerance) << ": "
              << (pass ? "PASS" : "FAIL") << '\n';
  }
  return pass ? kExitOk : kExitNotConverged;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"quadrature-discretized continuum network toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  bool verbose = false;

  CLI::App* forward =
      app.add_subcommand("forward", "integrate the dynamics and store the trajectory");
  CLI::App* train = app.add_subcommand("train", "fit the controls with the configured algorithm");
  CLI::App* analyze =
      app.add_subcommand("analyze", "stability diagnostics for autonomous controls");
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "compare the adjoint gradient against finite differences");
  for (CLI::App* sub : {forward, train, analyze, gradcheck}) {
    sub->add_option("--config", config_path, "experiment configuration (JSON)")->required();
    sub->add_option("--out", out_override, "output directory (overrides the config)");
    sub->add_flag("--verbose", verbose, "progress notes on stderr");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    Experiment exp = load_experiment(config_path);
    if (!out_override.empty()) exp.output_dir = out_override;
    const fs::path out_dir(exp.output_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
      throw ConfigError("cannot create output directory " + out_dir.string() + ": " +
                        ec.message());

    if (forward->parsed()) return cmd_forward(exp, out_dir, verbose);
    if (train->parsed()) return cmd_train(exp, out_dir, verbose);
    if (analyze->parsed()) return cmd_analyze(exp, out_dir, verbose);
    return cmd_gradcheck(exp, out_dir, verbose);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace seldyn
