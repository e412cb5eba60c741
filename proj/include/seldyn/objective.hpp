#ifndef SELDYN_OBJECTIVE_HPP
#define SELDYN_OBJECTIVE_HPP

#include <optional>
#include <vector>

#include "seldyn/adjoint.hpp"
#include "seldyn/dynamics.hpp"

namespace seldyn {

/// Affine-plus-link readout applied to the terminal state.
struct ClassifierParams {
  KernelSlice W;
  Field mu;
  Activation link = Activation::logistic();

  void validate(const Grid& grid) const;
};

/// Loss selection: terminal L2 tracking or squared-loss classification,
/// optionally Tikhonov-regularized with weight lambda.
struct LossSpec {
  enum class Kind { tracking, classification };

  Kind kind = Kind::tracking;
  Field target;  // tracking
  Field label;   // classification
  std::optional<ClassifierParams> classifier;
  double lambda = 0.0;

  static LossSpec tracking_loss(Field target, double lambda = 0.0);
  static LossSpec classification_loss(Field label, ClassifierParams cls, double lambda = 0.0);

  void validate(const Grid& grid) const;
};

/// Gradient blocks in the quadrature metric: pairing grad_a with a bias
/// perturbation via sum_l dt <grad_a^l, alpha^l>_w (and the kernel
/// blocks via the doubly weighted sum) reproduces the derivative of the
/// discrete objective.  grad_W and grad_mu are empty for tracking runs.
struct ParamGradient {
  std::vector<Field> a;
  std::vector<KernelSlice> b;
  KernelSlice W;
  Field mu;

  bool has_classifier_blocks() const { return mu.size() > 0; }
};

/// Classifier forward pass: h(B_W f_T + mu).
Field classify(const Field& f_T, const ClassifierParams& cls, const Grid& grid);

/// Pre-link readout B_W f_T + mu.
Field classifier_preactivation(const Field& f_T, const ClassifierParams& cls, const Grid& grid);

/// Data misfit (squared L2, factor 1/2) plus lambda times the Tikhonov
/// energy 1/2( sum_l dt(||a^l||^2 + ||b^l||^2) [+ ||mu||^2 + ||W||^2] ).
double loss(const Trajectory& traj, const ControlParams& params, const LossSpec& spec,
            const Grid& grid);

/// Terminal costate matching the loss kind (tracking difference or the
/// classifier adjoint).
Field terminal_condition(const LossSpec& spec, const Field& f_T, const Grid& grid);

/// Exact gradient of the discrete objective assembled from a forward
/// trajectory and its adjoint solution:
///
///   grad_a^l = sigma'(u^l) .* r^{l+1}            (+ lambda a^l)
///   grad_b^l(y,z) = -f^l(z) sigma'(u^l(y)) r^{l+1}(y)   (+ lambda b^l)
///
/// plus, for classification, the readout blocks
///
///   grad_W(y,z) = (C_pre - C)(y) h'(O_T(y)) f_T(z)      (+ lambda W)
///   grad_mu    = (C_pre - C) .* h'(O_T)                 (+ lambda mu).
ParamGradient gradient(const Trajectory& traj, const CostateTrajectory& costate,
                       const ControlParams& params, const LossSpec& spec,
                       const Activation& act, const Grid& grid);

/// Central finite differences of the full objective, entry by entry,
/// rescaled into the same quadrature metric as gradient().  Oracle for
/// gradient checks; cost grows with steps * n^2.
ParamGradient finite_diff_gradient(const ControlParams& params, const LossSpec& spec,
                                   const Field& f_I, const Activation& act, const Grid& grid,
                                   const TimeGrid& time, double h = 1e-5);

/// Norm of a gradient in the quadrature metric:
/// sqrt( sum_l dt(||a||^2 + ||b||^2) + ||W||^2 + ||mu||^2 ).
double gradient_norm(const ParamGradient& g, const Grid& grid, const TimeGrid& time);

/// Largest entrywise relative gap between two gradients; entries whose
/// reference magnitude sits below floor_rel * max|reference| are
/// compared absolutely against that floor.
double max_relative_gap(const ParamGradient& g, const ParamGradient& ref, double floor_rel = 1e-9);

}  // namespace seldyn

#endif
