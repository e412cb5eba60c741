#ifndef SELDYN_DYNAMICS_HPP
#define SELDYN_DYNAMICS_HPP

#include <vector>

#include "seldyn/activation.hpp"
#include "seldyn/grid.hpp"

namespace seldyn {

/// Piecewise-constant-in-time controls: a bias field a^l and a kernel
/// slice b^l per Euler step, sampled at the left endpoint t_l of
/// [t_l, t_{l+1}).  Index access clamps at the final slice so that the
/// residual at the terminal time reuses the last control.
struct ControlParams {
  std::vector<Field> a;
  std::vector<KernelSlice> b;
  bool time_constant = false;

  /// Autonomous controls: one (a, b) pair replicated across all steps.
  static ControlParams constant(const Field& a0, const KernelSlice& b0, int steps);
  static ControlParams time_varying(std::vector<Field> a, std::vector<KernelSlice> b);

  int steps() const { return static_cast<int>(a.size()); }

  const Field& a_at(int l) const {
    return a[static_cast<size_t>(l) < a.size() ? l : a.size() - 1];
  }
  const KernelSlice& b_at(int l) const {
    return b[static_cast<size_t>(l) < b.size() ? l : b.size() - 1];
  }

  void validate(const Grid& grid, int steps) const;
};

/// Perturbation direction shaped like controls.  Empty a (or b) means
/// the zero direction in that block.
struct ControlDirection {
  std::vector<Field> a;
  std::vector<KernelSlice> b;

  bool has_a() const { return !a.empty(); }
  bool has_b() const { return !b.empty(); }
};

/// States f^0 ... f^steps produced by the explicit Euler march.
struct Trajectory {
  std::vector<Field> states;
  Grid grid;
  TimeGrid time;

  const Field& initial() const { return states.front(); }
  const Field& terminal() const { return states.back(); }
  int steps() const { return static_cast<int>(states.size()) - 1; }
};

/// Separable data for the closed-form ReLU solution: kernel
/// b(y,z) = psi(y) phi(z) and bias a = a0 psi, so the operator acts as
/// (B_b v)(y) = (integral of v phi) psi(y).  phi and psi must be
/// normalized to unit L2 norm under the grid quadrature.
struct RankOneSpec {
  Field phi;
  Field psi;
  double a0 = 0.0;
  Field f_I;

  void validate(const Grid& grid) const;
};

/// Sup-norm guard: states beyond this are treated as divergence.
inline constexpr double kDivergenceGuard = 1e12;

/// Explicit Euler march of  f_t = sigma(a - B_b f),  f(0) = f_I:
///
///   f^{l+1} = f^l + dt * sigma(a^l - B_{b^l} f^l)
///
/// Throws DivergenceError naming the first bad step if a state exceeds
/// the sup-norm guard or turns non-finite.
Trajectory forward_solve(const ControlParams& params, const Field& f_I,
                         const Activation& act, const Grid& grid, const TimeGrid& time);

/// As forward_solve, but on divergence returns the partial trajectory
/// (states up to the last finite one) instead of throwing.  diverged_at
/// receives the failing step, or -1 on success.
Trajectory forward_solve_partial(const ControlParams& params, const Field& f_I,
                                 const Activation& act, const Grid& grid,
                                 const TimeGrid& time, int* diverged_at,
                                 double* bad_norm);

/// Pre-activation residual u^l = a^l - B_{b^l} f^l for 0 <= l <= steps;
/// at l == steps the last control slice is reused.
Field residual(const ControlParams& params, const Trajectory& traj, int l);

/// Directional (Gateaux) derivative of the Euler march along a control
/// direction (alpha, beta), marched with the stored trajectory:
///
///   g^{l+1} = g^l + dt * sigma'(u^l) .* (alpha^l - B_{b^l} g^l - B_{beta^l} f^l),
///   g^0 = 0.
Trajectory tangent_solve(const ControlParams& params, const Trajectory& traj,
                         const Activation& act, const ControlDirection& dir);

/// Closed-form ReLU state at time t for separable data.  Writing
/// lambda_I = a0 - (f_I, phi), alpha = (psi^+, phi), beta = (psi^-, phi):
///
///   lambda_I >= 0:  f = f_I + (lambda_I / alpha) psi^+ (1 - e^{-alpha t}),
///   lambda_I <  0:  f = f_I + (|lambda_I| / beta) psi^- (e^{beta t} - 1),
///
/// and when the shrinking coefficient (alpha resp. beta) vanishes the
/// limit branch f_I + t * relu(lambda_I psi) applies.
Field rank_one_relu_solution(const RankOneSpec& spec, double t, const Grid& grid);

}  // namespace seldyn

#endif
