#include "seldyn/objective.hpp"

#include <cmath>

namespace seldyn {

void ClassifierParams::validate(const Grid& grid) const {
  const int n = grid.size();
  detail::require(W.size() == n && W.values.cols() == n,
                  "ClassifierParams: W must be n-by-n for the grid");
  detail::require(mu.size() == n, "ClassifierParams: mu length must match grid");
}

LossSpec LossSpec::tracking_loss(Field target, double lambda) {
  detail::require(lambda >= 0.0, "LossSpec: lambda must be nonnegative");
  LossSpec s;
  s.kind = Kind::tracking;
  s.target = std::move(target);
  s.lambda = lambda;
  return s;
}

LossSpec LossSpec::classification_loss(Field label, ClassifierParams cls, double lambda) {
  detail::require(lambda >= 0.0, "LossSpec: lambda must be nonnegative");
  LossSpec s;
  s.kind = Kind::classification;
  s.label = std::move(label);
  s.classifier = std::move(cls);
  s.lambda = lambda;
  return s;
}

void LossSpec::validate(const Grid& grid) const {
  if (kind == Kind::tracking) {
    detail::require(target.size() == grid.size(), "LossSpec: target length must match grid");
  } else {
    detail::require(label.size() == grid.size(), "LossSpec: label length must match grid");
    detail::require(classifier.has_value(), "LossSpec: classification needs classifier params");
    classifier->validate(grid);
  }
}

Field classifier_preactivation(const Field& f_T, const ClassifierParams& cls, const Grid& grid) {
  cls.validate(grid);
  return Field(apply_kernel(cls.W, f_T, grid).values + cls.mu.values);
}

Field classify(const Field& f_T, const ClassifierParams& cls, const Grid& grid) {
  return Field(cls.link.eval(classifier_preactivation(f_T, cls, grid).values));
}

namespace {

double tikhonov_energy(const ControlParams& params, const LossSpec& spec, const Grid& grid,
                       const TimeGrid& time) {
  double acc = 0.0;
  for (int l = 0; l < time.steps; ++l) {
    acc += time.dt() * inner_product(params.a[l], params.a[l], grid);
    acc += time.dt() * kernel_inner_product(params.b[l], params.b[l], grid);
  }
  if (spec.kind == LossSpec::Kind::classification) {
    acc += inner_product(spec.classifier->mu, spec.classifier->mu, grid);
    acc += kernel_inner_product(spec.classifier->W, spec.classifier->W, grid);
  }
  return 0.5 * acc;
}

}  // namespace

double loss(const Trajectory& traj, const ControlParams& params, const LossSpec& spec,
            const Grid& grid) {
  spec.validate(grid);
  params.validate(grid, traj.steps());

  double misfit = 0.0;
  if (spec.kind == LossSpec::Kind::tracking) {
    Field diff(traj.terminal().values - spec.target.values);
    misfit = 0.5 * inner_product(diff, diff, grid);
  } else {
    Field diff(classify(traj.terminal(), *spec.classifier, grid).values - spec.label.values);
    misfit = 0.5 * inner_product(diff, diff, grid);
  }
  if (spec.lambda > 0.0) misfit += spec.lambda * tikhonov_energy(params, spec, grid, traj.time);
  return misfit;
}

Field terminal_condition(const LossSpec& spec, const Field& f_T, const Grid& grid) {
  spec.validate(grid);
  if (spec.kind == LossSpec::Kind::tracking) return terminal_tracking(f_T, spec.target);
  const ClassifierParams& cls = *spec.classifier;
  return terminal_classification(f_T, cls.W, cls.mu, cls.link, spec.label, grid);
}

ParamGradient gradient(const Trajectory& traj, const CostateTrajectory& costate,
                       const ControlParams& params, const LossSpec& spec,
                       const Activation& act, const Grid& grid) {
  spec.validate(grid);
  const int steps = traj.steps();
  params.validate(grid, steps);
  detail::require(costate.steps() == steps, "gradient: costate length must match trajectory");

  const Eigen::VectorXd& w = grid.weights();

  ParamGradient g;
  g.a.reserve(steps);
  g.b.reserve(steps);
  for (int l = 0; l < steps; ++l) {
    const Eigen::VectorXd u =
        params.a_at(l).values - params.b_at(l).values * w.cwiseProduct(traj.states[l].values);
    const Eigen::VectorXd ga = act.deriv(u).cwiseProduct(costate.states[l + 1].values);
    // Outer product: row y carries -sigma'(u(y)) r(y), column z carries f(z).
    Eigen::MatrixXd gb = -ga * traj.states[l].values.transpose();
    if (spec.lambda > 0.0) {
      g.a.push_back(Field(ga + spec.lambda * params.a[l].values));
      g.b.push_back(KernelSlice(gb + spec.lambda * params.b[l].values));
    } else {
      g.a.push_back(Field(ga));
      g.b.push_back(KernelSlice(gb));
    }
  }

  if (spec.kind == LossSpec::Kind::classification) {
    const ClassifierParams& cls = *spec.classifier;
    const Eigen::VectorXd o = classifier_preactivation(traj.terminal(), cls, grid).values;
    const Eigen::VectorXd d =
        (cls.link.eval(o) - spec.label.values).cwiseProduct(cls.link.deriv(o));
    Eigen::MatrixXd gW = d * traj.terminal().values.transpose();
    Eigen::VectorXd gmu = d;
    if (spec.lambda > 0.0) {
      gW += spec.lambda * cls.W.values;
      gmu += spec.lambda * cls.mu.values;
    }
    g.W = KernelSlice(gW);
    g.mu = Field(gmu);
  }
  return g;
}

namespace {

struct LossEvaluator {
  const Field& f_I;
  const Activation& act;
  const Grid& grid;
  const TimeGrid& time;

  double operator()(const ControlParams& params, const LossSpec& spec) const {
    Trajectory traj = forward_solve(params, f_I, act, grid, time);
    return loss(traj, params, spec, grid);
  }
};

}  // namespace

ParamGradient finite_diff_gradient(const ControlParams& params, const LossSpec& spec,
                                   const Field& f_I, const Activation& act, const Grid& grid,
                                   const TimeGrid& time, double h) {
  detail::require(h > 0.0, "finite_diff_gradient: step must be positive");
  spec.validate(grid);
  params.validate(grid, time.steps);

  const int n = grid.size();
  const double dt = time.dt();
  const Eigen::VectorXd& w = grid.weights();
  const LossEvaluator eval{f_I, act, grid, time};

  ControlParams probe = params;
  LossSpec probe_spec = spec;

  ParamGradient g;
  g.a.assign(time.steps, Field::zeros(n));
  g.b.assign(time.steps, KernelSlice::zeros(n));

  // Raw central differences divided by the metric factors (dt, node
  // weights) so the result lives in the same geometry as gradient().
  for (int l = 0; l < time.steps; ++l) {
    for (int i = 0; i < n; ++i) {
      probe.a[l].values[i] = params.a[l].values[i] + h;
      const double up = eval(probe, spec);
      probe.a[l].values[i] = params.a[l].values[i] - h;
      const double dn = eval(probe, spec);
      probe.a[l].values[i] = params.a[l].values[i];
      g.a[l].values[i] = (up - dn) / (2.0 * h) / (dt * w[i]);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        probe.b[l].values(i, j) = params.b[l].values(i, j) + h;
        const double up = eval(probe, spec);
        probe.b[l].values(i, j) = params.b[l].values(i, j) - h;
        const double dn = eval(probe, spec);
        probe.b[l].values(i, j) = params.b[l].values(i, j);
        g.b[l].values(i, j) = (up - dn) / (2.0 * h) / (dt * w[i] * w[j]);
      }
    }
  }

  if (spec.kind == LossSpec::Kind::classification) {
    g.W = KernelSlice::zeros(n);
    g.mu = Field::zeros(n);
    ClassifierParams& cls = *probe_spec.classifier;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        cls.W.values(i, j) = spec.classifier->W.values(i, j) + h;
        const double up = eval(params, probe_spec);
        cls.W.values(i, j) = spec.classifier->W.values(i, j) - h;
        const double dn = eval(params, probe_spec);
        cls.W.values(i, j) = spec.classifier->W.values(i, j);
        g.W.values(i, j) = (up - dn) / (2.0 * h) / (w[i] * w[j]);
      }
      cls.mu.values[i] = spec.classifier->mu.values[i] + h;
      const double up = eval(params, probe_spec);
      cls.mu.values[i] = spec.classifier->mu.values[i] - h;
      const double dn = eval(params, probe_spec);
      cls.mu.values[i] = spec.classifier->mu.values[i];
      g.mu.values[i] = (up - dn) / (2.0 * h) / w[i];
    }
  }
  return g;
}

double gradient_norm(const ParamGradient& g, const Grid& grid, const TimeGrid& time) {
  double acc = 0.0;
  for (size_t l = 0; l < g.a.size(); ++l) {
    acc += time.dt() * inner_product(g.a[l], g.a[l], grid);
    acc += time.dt() * kernel_inner_product(g.b[l], g.b[l], grid);
  }
  if (g.has_classifier_blocks()) {
    acc += inner_product(g.mu, g.mu, grid);
    acc += kernel_inner_product(g.W, g.W, grid);
  }
  return std::sqrt(acc);
}

namespace {

void gap_update(double got, double want, double floor_abs, double* worst) {
  const double denom = std::max(std::abs(want), floor_abs);
  *worst = std::max(*worst, std::abs(got - want) / denom);
}

double max_abs_gradient(const ParamGradient& g) {
  double m = 0.0;
  for (const Field& f : g.a) m = std::max(m, f.values.cwiseAbs().maxCoeff());
  for (const KernelSlice& k : g.b) m = std::max(m, k.values.cwiseAbs().maxCoeff());
  if (g.has_classifier_blocks()) {
    m = std::max(m, g.W.values.cwiseAbs().maxCoeff());
    m = std::max(m, g.mu.values.cwiseAbs().maxCoeff());
  }
  return m;
}

}  // namespace

double max_relative_gap(const ParamGradient& g, const ParamGradient& ref, double floor_rel) {
  detail::require(g.a.size() == ref.a.size() && g.b.size() == ref.b.size(),
                  "max_relative_gap: mismatched gradient shapes");
  const double floor_abs = std::max(floor_rel * max_abs_gradient(ref), 1e-300);
  double worst = 0.0;
  for (size_t l = 0; l < g.a.size(); ++l) {
    for (int i = 0; i < g.a[l].size(); ++i)
      gap_update(g.a[l].values[i], ref.a[l].values[i], floor_abs, &worst);
    for (int i = 0; i < g.b[l].size(); ++i)
      for (int j = 0; j < g.b[l].size(); ++j)
        gap_update(g.b[l].values(i, j), ref.b[l].values(i, j), floor_abs, &worst);
  }
  if (g.has_classifier_blocks() && ref.has_classifier_blocks()) {
    for (int i = 0; i < g.mu.size(); ++i)
      gap_update(g.mu.values[i], ref.mu.values[i], floor_abs, &worst);
    for (int i = 0; i < g.W.size(); ++i)
      for (int j = 0; j < g.W.size(); ++j)
        gap_update(g.W.values(i, j), ref.W.values(i, j), floor_abs, &worst);
  }
  return worst;
}

}  // namespace seldyn
