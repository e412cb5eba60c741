#ifndef SELDYN_CONTROL_HPP
#define SELDYN_CONTROL_HPP

#include <string>
#include <vector>

#include "seldyn/objective.hpp"

namespace seldyn {

/// Pointwise box constraints for the bang-bang update.
struct ControlBox {
  double a_lo = -1.0;
  double a_hi = 1.0;
  double b_lo = -1.0;
  double b_hi = 1.0;

  void validate() const;
};

enum class TrainAlgo { ppa, pmp };

struct TrainConfig {
  TrainAlgo algo = TrainAlgo::ppa;
  double tau = 0.1;       // proximal weight (ppa)
  int inner_iters = 5;    // gradient steps per proximal block (ppa)
  int max_iters = 100;
  double tol = 1e-6;
  double damping = 0.5;   // 0 reproduces the undamped successive scheme (pmp)
  ControlBox box;
  unsigned seed = 0;      // reserved for randomized variants; echoed in reports

  void validate() const;
};

struct TrainResult {
  ControlParams params;
  std::vector<double> loss_history;        // one entry per visited iterate
  std::vector<double> grad_norm_history;   // ppa
  std::vector<double> hamiltonian_history; // pmp: time-averaged maximized H
  bool converged = false;
  int iterations = 0;
  std::string note;  // diagnostics, e.g. a vanishing-costate flag
};

/// Training instance: dynamics data plus the objective.
struct Problem {
  Grid grid;
  TimeGrid time;
  Activation act;
  Field f_I;
  LossSpec loss;
  ControlParams init;
};

/// H(f, r, a, b) = sum_i w_i sigma(a_i - (B_b f)_i) r_i.
double hamiltonian(const Field& f, const Field& r, const Field& a, const KernelSlice& b,
                   const Activation& act, const Grid& grid);

/// Pointwise maximizer of the Hamiltonian over the box.  At node y the
/// summand w sigma(a - B_b f) r is monotone in the pre-activation, so
/// the maximizer saturates: r(y) >= 0 picks a = a_hi and the kernel row
/// b(y, z) = b_lo where f(z) >= 0, b_hi where f(z) < 0; the mirrored
/// corners apply for r(y) < 0.  Ties r(y) == 0 take the r >= 0 branch.
void maximize_hamiltonian_box(const Field& f, const Field& r, const ControlBox& box,
                              const Activation& act, const Grid& grid, Field* a_out,
                              KernelSlice* b_out);

/// H evaluated per control slice along matched state/costate
/// trajectories: H_l = H(f^l, r^l, a^l, b^l) for l = 0..steps-1.
std::vector<double> hamiltonian_trace(const ControlParams& params, const Trajectory& traj,
                                      const CostateTrajectory& costate, const Activation& act);

/// Alternating proximal-point descent: per iteration, the bias block is
/// updated by approximately minimizing J(a, b^k) + ||a - a^k||^2 / (2 tau)
/// with cfg.inner_iters backtracked gradient steps warm-started at a^k,
/// then the kernel block likewise against J(a^{k+1}, b).  Inner steps
/// only ever accept prox-objective decreases, so the outer loss
/// sequence is non-increasing.  Terminates when the objective gradient
/// norm drops to cfg.tol.
TrainResult train_ppa(const Problem& problem, const TrainConfig& cfg);

/// Successive approximation of the maximum-principle conditions: solve
/// forward, solve the costate backward from the sign-flipped terminal
/// condition, replace each control slice by the box maximizer of the
/// Hamiltonian, and blend with the previous iterate by cfg.damping.
/// Terminates when the sup-norm control change drops to cfg.tol;
/// non-convergence is reported, not thrown.
TrainResult train_pmp(const Problem& problem, const TrainConfig& cfg);

}  // namespace seldyn

#endif
