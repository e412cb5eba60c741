#include "seldyn/adjoint.hpp"

#include <Eigen/SVD>

namespace seldyn {

CostateTrajectory adjoint_solve(const ControlParams& params, const Trajectory& traj,
                                const Activation& act, const Field& r_T) {
  const Grid& grid = traj.grid;
  const int steps = traj.steps();
  params.validate(grid, steps);
  detail::require(r_T.size() == grid.size(), "adjoint_solve: r_T length must match grid");

  const double dt = traj.time.dt();
  const Eigen::VectorXd& w = grid.weights();

  CostateTrajectory costate{{}, grid, traj.time};
  costate.states.assign(steps + 1, Field::zeros(grid.size()));
  costate.states[steps] = r_T;

  Eigen::VectorXd r = r_T.values;
  for (int l = steps - 1; l >= 0; --l) {
    const Eigen::VectorXd u =
        params.a_at(l).values - params.b_at(l).values * w.cwiseProduct(traj.states[l].values);
    const Eigen::VectorXd scaled = act.deriv(u).cwiseProduct(r);
    r -= dt * (params.b_at(l).values.transpose() * w.cwiseProduct(scaled));
    costate.states[l] = Field(r);
  }
  return costate;
}

Field terminal_tracking(const Field& f_T, const Field& target) {
  detail::require(f_T.size() == target.size(),
                  "terminal_tracking: state and target lengths differ");
  return Field(f_T.values - target.values);
}

Field terminal_classification(const Field& f_T, const KernelSlice& W, const Field& mu,
                              const Activation& link, const Field& label, const Grid& grid) {
  const int n = grid.size();
  detail::require(f_T.size() == n && mu.size() == n && label.size() == n,
                  "terminal_classification: field lengths must match grid");
  detail::require(W.size() == n && W.values.cols() == n,
                  "terminal_classification: classifier kernel must be n-by-n");

  const Eigen::VectorXd o = apply_kernel(W, f_T, grid).values + mu.values;
  const Eigen::VectorXd pre = link.eval(o);
  const Eigen::VectorXd d = (pre - label.values).cwiseProduct(link.deriv(o));
  // Quadrature over the first kernel argument: the adjoint of f -> B_W f.
  return apply_kernel(W.transposed(), Field(d), grid);
}

std::vector<double> backward_step_operator_norms(const ControlParams& params,
                                                 const Trajectory& traj,
                                                 const Activation& act) {
  const Grid& grid = traj.grid;
  const int steps = traj.steps();
  const int n = grid.size();
  const double dt = traj.time.dt();
  const Eigen::VectorXd& w = grid.weights();
  const Eigen::VectorXd s = w.cwiseSqrt();

  std::vector<double> norms(steps);
  for (int l = 0; l < steps; ++l) {
    const Eigen::VectorXd u =
        params.a_at(l).values - params.b_at(l).values * w.cwiseProduct(traj.states[l].values);
    const Eigen::VectorXd d = act.deriv(u);
    // Similarity transform by diag(sqrt(w)) turns the weighted-geometry
    // operator into a plain matrix whose spectral norm we can take.
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) -
                        dt * (s.asDiagonal() * params.b_at(l).values.transpose() *
                              d.asDiagonal() * w.asDiagonal() *
                              s.cwiseInverse().asDiagonal());
    norms[l] = m.jacobiSvd().singularValues()[0];
  }
  return norms;
}

}  // namespace seldyn
