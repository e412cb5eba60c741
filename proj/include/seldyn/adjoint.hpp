#ifndef SELDYN_ADJOINT_HPP
#define SELDYN_ADJOINT_HPP

#include <vector>

#include "seldyn/dynamics.hpp"

namespace seldyn {

/// Costates r^0 ... r^steps, aligned with the forward trajectory.
struct CostateTrajectory {
  std::vector<Field> states;
  Grid grid;
  TimeGrid time;

  const Field& initial() const { return states.front(); }
  const Field& terminal() const { return states.back(); }
  int steps() const { return static_cast<int>(states.size()) - 1; }
};

/// Backward march that is the exact transpose of the Euler forward
/// step under the quadrature inner product:
///
///   r^l = r^{l+1} - dt * B_{(b^l)^T}( sigma'(u^l) .* r^{l+1} ),   r^steps = r_T.
///
/// One forward step maps g to (I - dt D_l K_l W) g with D_l the
/// diagonal of sigma'(u^l) and W the weight diagonal; its adjoint in
/// the weighted inner product is I - dt K_l^T D_l W, which is the
/// recursion above.  Pairing r^{l+1} with step-l control perturbations
/// therefore reproduces the exact discrete gradient.
CostateTrajectory adjoint_solve(const ControlParams& params, const Trajectory& traj,
                                const Activation& act, const Field& r_T);

/// Terminal costate for the tracking loss: r_T = f(T) - target.
Field terminal_tracking(const Field& f_T, const Field& target);

/// Terminal costate for the squared-loss classifier
///   O_T = B_W f(T) + mu,  C_pre = h(O_T):
///
///   r_T(z) = sum_i w_i (C_pre - C)(y_i) h'(O_T(y_i)) W(y_i, z),
///
/// the adjoint of the classifier map; the quadrature runs over the
/// first kernel argument.
Field terminal_classification(const Field& f_T, const KernelSlice& W, const Field& mu,
                              const Activation& link, const Field& label, const Grid& grid);

/// Operator norm of the backward one-step map I - dt K_l^T D_l W in
/// the weighted L2 geometry, one value per step.  Each is bounded by
/// 1 + dt * sup|sigma'| * ||b^l||_{L2(YxY)}.
std::vector<double> backward_step_operator_norms(const ControlParams& params,
                                                 const Trajectory& traj,
                                                 const Activation& act);

}  // namespace seldyn

#endif
