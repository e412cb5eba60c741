#include "seldyn/control.hpp"

#include <algorithm>
#include <cmath>

#include "seldyn/util.hpp"

namespace seldyn {

void ControlBox::validate() const {
  detail::require(a_lo <= a_hi && b_lo <= b_hi, "ControlBox: lower bounds must not exceed upper");
}

void TrainConfig::validate() const {
  detail::require(tau > 0.0, "TrainConfig: tau must be positive");
  detail::require(inner_iters >= 1, "TrainConfig: need at least one inner iteration");
  detail::require(max_iters >= 1, "TrainConfig: need at least one outer iteration");
  detail::require(tol >= 0.0, "TrainConfig: tol must be nonnegative");
  detail::require(damping >= 0.0 && damping <= 1.0, "TrainConfig: damping must lie in [0, 1]");
  box.validate();
}

double hamiltonian(const Field& f, const Field& r, const Field& a, const KernelSlice& b,
                   const Activation& act, const Grid& grid) {
  const Eigen::VectorXd u = a.values - b.values * grid.weights().cwiseProduct(f.values);
  return (grid.weights().array() * act.eval(u).array() * r.values.array()).sum();
}

void maximize_hamiltonian_box(const Field& f, const Field& r, const ControlBox& box,
                              const Activation& act, const Grid& grid, Field* a_out,
                              KernelSlice* b_out) {
  box.validate();
  const int n = grid.size();
  detail::require(f.size() == n && r.size() == n,
                  "maximize_hamiltonian_box: field lengths must match grid");
  detail::require(a_out != nullptr && b_out != nullptr,
                  "maximize_hamiltonian_box: output slots required");
  (void)act;  // any monotone nonlinearity yields the same corner solution

  a_out->values.resize(n);
  b_out->values.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const bool r_nonneg = r.values[i] >= 0.0;
    a_out->values[i] = r_nonneg ? box.a_hi : box.a_lo;
    for (int j = 0; j < n; ++j) {
      const bool f_nonneg = f.values[j] >= 0.0;
      // Maximize (minimize) the pre-activation when r >= 0 (r < 0).
      b_out->values(i, j) = (r_nonneg == f_nonneg) ? box.b_lo : box.b_hi;
    }
  }
}

std::vector<double> hamiltonian_trace(const ControlParams& params, const Trajectory& traj,
                                      const CostateTrajectory& costate, const Activation& act) {
  detail::require(costate.steps() == traj.steps(),
                  "hamiltonian_trace: trajectory and costate lengths differ");
  std::vector<double> h(traj.steps());
  for (int l = 0; l < traj.steps(); ++l)
    h[l] = hamiltonian(traj.states[l], costate.states[l], params.a_at(l), params.b_at(l), act,
                       traj.grid);
  return h;
}

namespace {

double sup_control_change(const ControlParams& x, const ControlParams& y) {
  double m = 0.0;
  for (size_t l = 0; l < x.a.size(); ++l) {
    m = std::max(m, (x.a[l].values - y.a[l].values).cwiseAbs().maxCoeff());
    m = std::max(m, (x.b[l].values - y.b[l].values).cwiseAbs().maxCoeff());
  }
  return m;
}

struct Objective {
  const Problem& problem;

  double value(const ControlParams& params) const {
    Trajectory traj = forward_solve(params, problem.f_I, problem.act, problem.grid, problem.time);
    return loss(traj, params, problem.loss, problem.grid);
  }

  ParamGradient grad(const ControlParams& params, double* value_out = nullptr) const {
    Trajectory traj = forward_solve(params, problem.f_I, problem.act, problem.grid, problem.time);
    if (value_out) *value_out = loss(traj, params, problem.loss, problem.grid);
    Field r_T = terminal_condition(problem.loss, traj.terminal(), problem.grid);
    CostateTrajectory costate = adjoint_solve(params, traj, problem.act, r_T);
    return gradient(traj, costate, params, problem.loss, problem.act, problem.grid);
  }
};

enum class Block { bias, kernel };

// Approximate proximal map for one control block: cfg.inner_iters
// backtracked gradient steps on J(x) + ||x - x_k||^2 / (2 tau), warm
// started at x_k.  Steps are accepted only on strict decrease of the
// prox objective, so the result never exceeds J(x_k).
ControlParams prox_block_step(const Objective& objective, const ControlParams& anchor,
                              ControlParams current, Block block, const TrainConfig& cfg,
                              const Grid& grid, const TimeGrid& time) {
  const double tau = cfg.tau;

  auto prox_value = [&](const ControlParams& x, double j_value) {
    double dist = 0.0;
    for (int l = 0; l < time.steps; ++l) {
      if (block == Block::bias) {
        Field d(x.a[l].values - anchor.a[l].values);
        dist += time.dt() * inner_product(d, d, grid);
      } else {
        KernelSlice d(x.b[l].values - anchor.b[l].values);
        dist += time.dt() * kernel_inner_product(d, d, grid);
      }
    }
    return j_value + dist / (2.0 * tau);
  };

  double j_current = objective.value(current);
  double best = prox_value(current, j_current);
  double step = tau;

  for (int it = 0; it < cfg.inner_iters; ++it) {
    ParamGradient g = objective.grad(current);

    // Prox gradient = objective gradient + (x - anchor)/tau, per block.
    double gnorm_sq = 0.0;
    std::vector<Eigen::VectorXd> dir_a;
    std::vector<Eigen::MatrixXd> dir_b;
    if (block == Block::bias) {
      dir_a.resize(time.steps);
      for (int l = 0; l < time.steps; ++l) {
        dir_a[l] = g.a[l].values + (current.a[l].values - anchor.a[l].values) / tau;
        Field d(dir_a[l]);
        gnorm_sq += time.dt() * inner_product(d, d, grid);
      }
    } else {
      dir_b.resize(time.steps);
      for (int l = 0; l < time.steps; ++l) {
        dir_b[l] = g.b[l].values + (current.b[l].values - anchor.b[l].values) / tau;
        KernelSlice d(dir_b[l]);
        gnorm_sq += time.dt() * kernel_inner_product(d, d, grid);
      }
    }
    if (gnorm_sq == 0.0) break;

    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      ControlParams trial = current;
      if (block == Block::bias) {
        for (int l = 0; l < time.steps; ++l) trial.a[l].values -= step * dir_a[l];
      } else {
        for (int l = 0; l < time.steps; ++l) trial.b[l].values -= step * dir_b[l];
      }
      const double j_trial = objective.value(trial);
      const double pv = prox_value(trial, j_trial);
      if (pv < best - 1e-4 * step * gnorm_sq) {
        current = std::move(trial);
        j_current = j_trial;
        best = pv;
        step *= 2.0;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return current;
}

}  // namespace

TrainResult train_ppa(const Problem& problem, const TrainConfig& cfg) {
  cfg.validate();
  problem.loss.validate(problem.grid);
  problem.init.validate(problem.grid, problem.time.steps);

  const Objective objective{problem};

  TrainResult result;
  result.params = problem.init;
  result.params.time_constant = false;

  double j0 = 0.0;
  ParamGradient g0 = objective.grad(result.params, &j0);
  result.loss_history.push_back(j0);
  result.grad_norm_history.push_back(gradient_norm(g0, problem.grid, problem.time));

  if (result.grad_norm_history.back() <= cfg.tol) {
    result.converged = true;
    return result;
  }

  for (int k = 0; k < cfg.max_iters; ++k) {
    const ControlParams anchor = result.params;
    ControlParams next = prox_block_step(objective, anchor, anchor, Block::bias, cfg,
                                         problem.grid, problem.time);
    next = prox_block_step(objective, anchor, std::move(next), Block::kernel, cfg, problem.grid,
                           problem.time);

    result.params = std::move(next);
    result.iterations = k + 1;

    double j = 0.0;
    ParamGradient g = objective.grad(result.params, &j);
    result.loss_history.push_back(j);
    result.grad_norm_history.push_back(gradient_norm(g, problem.grid, problem.time));

    if (result.grad_norm_history.back() <= cfg.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

TrainResult train_pmp(const Problem& problem, const TrainConfig& cfg) {
  cfg.validate();
  problem.loss.validate(problem.grid);
  problem.init.validate(problem.grid, problem.time.steps);

  const Grid& grid = problem.grid;
  const TimeGrid& time = problem.time;
  const double dt = time.dt();

  TrainResult result;
  result.params = problem.init;
  result.params.time_constant = false;

  bool costate_vanished = false;

  for (int k = 0; k < cfg.max_iters; ++k) {
    Trajectory traj = forward_solve(result.params, problem.f_I, problem.act, grid, time);
    result.loss_history.push_back(loss(traj, result.params, problem.loss, grid));

    // The maximum principle pairs the dynamics with the negated
    // terminal misfit, so flip the tracking/classification condition.
    Field r_T(-terminal_condition(problem.loss, traj.terminal(), grid).values);
    CostateTrajectory costate = adjoint_solve(result.params, traj, problem.act, r_T);

    for (const Field& r : costate.states) {
      if (r.values.cwiseAbs().maxCoeff() < 1e-12) {
        costate_vanished = true;
        break;
      }
    }

    ControlParams updated = result.params;
    updated.time_constant = false;
    std::vector<Field> best_a(time.steps, Field::zeros(grid.size()));
    std::vector<KernelSlice> best_b(time.steps, KernelSlice::zeros(grid.size()));
    parallel_for(time.steps, [&](int l) {
      maximize_hamiltonian_box(traj.states[l], costate.states[l], cfg.box, problem.act, grid,
                               &best_a[l], &best_b[l]);
    });

    double h_avg = 0.0;
    for (int l = 0; l < time.steps; ++l)
      h_avg += dt * hamiltonian(traj.states[l], costate.states[l], best_a[l], best_b[l],
                                problem.act, grid);
    result.hamiltonian_history.push_back(h_avg / time.T);

    for (int l = 0; l < time.steps; ++l) {
      updated.a[l].values =
          (1.0 - cfg.damping) * best_a[l].values + cfg.damping * result.params.a[l].values;
      updated.b[l].values =
          (1.0 - cfg.damping) * best_b[l].values + cfg.damping * result.params.b[l].values;
    }

    const double change = sup_control_change(updated, result.params);
    result.params = std::move(updated);
    result.iterations = k + 1;
    if (change <= cfg.tol) {
      result.converged = true;
      break;
    }
  }

  if (costate_vanished)
    result.note = "costate sup-norm fell below 1e-12 at some iterate; "
                  "the maximizer is unconstrained by the principle there";
  return result;
}

}  // namespace seldyn
