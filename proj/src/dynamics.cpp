#include "seldyn/dynamics.hpp"

#include <cmath>
#include <string>

namespace seldyn {

ControlParams ControlParams::constant(const Field& a0, const KernelSlice& b0, int steps) {
  detail::require(steps >= 1, "ControlParams: need at least one step");
  ControlParams p;
  p.a.assign(steps, a0);
  p.b.assign(steps, b0);
  p.time_constant = true;
  return p;
}

ControlParams ControlParams::time_varying(std::vector<Field> a, std::vector<KernelSlice> b) {
  detail::require(!a.empty() && a.size() == b.size(),
                  "ControlParams: need matching nonempty a and b slice lists");
  ControlParams p;
  p.a = std::move(a);
  p.b = std::move(b);
  p.time_constant = false;
  return p;
}

void ControlParams::validate(const Grid& grid, int steps) const {
  detail::require(static_cast<int>(a.size()) == steps && static_cast<int>(b.size()) == steps,
                  "ControlParams: control slice count must equal the step count");
  for (const Field& ai : a)
    detail::require(ai.size() == grid.size(), "ControlParams: bias length must match grid");
  for (const KernelSlice& bi : b)
    detail::require(bi.size() == grid.size() && bi.values.cols() == grid.size(),
                    "ControlParams: kernel slice must be n-by-n for the grid");
}

void RankOneSpec::validate(const Grid& grid) const {
  detail::require(phi.size() == grid.size() && psi.size() == grid.size() &&
                      f_I.size() == grid.size(),
                  "RankOneSpec: fields must match grid");
  const double nphi = norm_l2(phi, grid);
  const double npsi = norm_l2(psi, grid);
  detail::require(std::abs(nphi - 1.0) <= 1e-9 && std::abs(npsi - 1.0) <= 1e-9,
                  "RankOneSpec: phi and psi must have unit L2 norm under the quadrature");
}

namespace {

Trajectory march(const ControlParams& params, const Field& f_I, const Activation& act,
                 const Grid& grid, const TimeGrid& time, bool throw_on_divergence,
                 int* diverged_at, double* bad_norm) {
  params.validate(grid, time.steps);
  detail::require(f_I.size() == grid.size(), "forward_solve: f_I length must match grid");

  const double dt = time.dt();
  const Eigen::VectorXd& w = grid.weights();

  Trajectory traj{{}, grid, time};
  traj.states.reserve(time.steps + 1);
  traj.states.push_back(f_I);

  if (diverged_at) *diverged_at = -1;
  if (bad_norm) *bad_norm = 0.0;

  Eigen::VectorXd f = f_I.values;
  for (int l = 0; l < time.steps; ++l) {
    const Eigen::VectorXd u =
        params.a_at(l).values - params.b_at(l).values * w.cwiseProduct(f);
    f += dt * act.eval(u);

    const double sup = f.cwiseAbs().maxCoeff();
    if (!f.allFinite() || sup > kDivergenceGuard) {
      if (throw_on_divergence)
        throw DivergenceError(l + 1, sup,
                              "forward_solve: state diverged at step " + std::to_string(l + 1) +
                                  " (sup-norm " + std::to_string(sup) + ")");
      if (diverged_at) *diverged_at = l + 1;
      if (bad_norm) *bad_norm = sup;
      return traj;
    }
    traj.states.push_back(Field(f));
  }
  return traj;
}

}  // namespace

Trajectory forward_solve(const ControlParams& params, const Field& f_I, const Activation& act,
                         const Grid& grid, const TimeGrid& time) {
  return march(params, f_I, act, grid, time, true, nullptr, nullptr);
}

Trajectory forward_solve_partial(const ControlParams& params, const Field& f_I,
                                 const Activation& act, const Grid& grid, const TimeGrid& time,
                                 int* diverged_at, double* bad_norm) {
  return march(params, f_I, act, grid, time, false, diverged_at, bad_norm);
}

Field residual(const ControlParams& params, const Trajectory& traj, int l) {
  detail::require(l >= 0 && l <= traj.steps(), "residual: step index out of range");
  const Field& f = traj.states[l];
  Field bf = apply_kernel(params.b_at(l), f, traj.grid);
  return Field(params.a_at(l).values - bf.values);
}

Trajectory tangent_solve(const ControlParams& params, const Trajectory& traj,
                         const Activation& act, const ControlDirection& dir) {
  const Grid& grid = traj.grid;
  const TimeGrid& time = traj.time;
  const int steps = traj.steps();
  params.validate(grid, steps);
  if (dir.has_a())
    detail::require(static_cast<int>(dir.a.size()) == steps,
                    "tangent_solve: bias direction slice count must equal step count");
  if (dir.has_b())
    detail::require(static_cast<int>(dir.b.size()) == steps,
                    "tangent_solve: kernel direction slice count must equal step count");

  const double dt = time.dt();
  const Eigen::VectorXd& w = grid.weights();

  Trajectory tan{{}, grid, time};
  tan.states.reserve(steps + 1);
  tan.states.push_back(Field::zeros(grid.size()));

  Eigen::VectorXd g = Eigen::VectorXd::Zero(grid.size());
  for (int l = 0; l < steps; ++l) {
    const Eigen::VectorXd u =
        params.a_at(l).values - params.b_at(l).values * w.cwiseProduct(traj.states[l].values);
    Eigen::VectorXd rhs = -(params.b_at(l).values * w.cwiseProduct(g));
    if (dir.has_a()) rhs += dir.a[l].values;
    if (dir.has_b()) rhs -= dir.b[l].values * w.cwiseProduct(traj.states[l].values);
    g += dt * act.deriv(u).cwiseProduct(rhs);
    tan.states.push_back(Field(g));
  }
  return tan;
}

Field rank_one_relu_solution(const RankOneSpec& spec, double t, const Grid& grid) {
  spec.validate(grid);
  detail::require(t >= 0.0, "rank_one_relu_solution: time must be nonnegative");

  const Field psi_plus(spec.psi.values.cwiseMax(0.0));
  const Field psi_minus((-spec.psi.values).cwiseMax(0.0));

  const double lambda_I = spec.a0 - inner_product(spec.f_I, spec.phi, grid);
  const double alpha = inner_product(psi_plus, spec.phi, grid);
  const double beta = inner_product(psi_minus, spec.phi, grid);

  // Degenerate coefficient: the driving scalar never shrinks and the
  // state moves linearly along relu(lambda_I psi).
  const auto linear_branch = [&]() {
    Eigen::VectorXd rate = (lambda_I * spec.psi.values).cwiseMax(0.0);
    return Field(spec.f_I.values + t * rate);
  };

  if (lambda_I >= 0.0) {
    if (alpha == 0.0) return linear_branch();
    const double scale = (lambda_I / alpha) * (1.0 - std::exp(-alpha * t));
    return Field(spec.f_I.values + scale * psi_plus.values);
  }
  if (beta == 0.0) return linear_branch();
  const double scale = (std::abs(lambda_I) / beta) * (std::exp(beta * t) - 1.0);
  return Field(spec.f_I.values + scale * psi_minus.values);
}

}  // namespace seldyn
