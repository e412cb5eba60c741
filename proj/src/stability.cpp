#include "seldyn/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace seldyn {

namespace {

// Similarity transform into the geometry where the quadrature inner
// product is the plain dot product: the operator f -> K diag(w) f
// becomes the matrix M = diag(sqrt(w)) K diag(sqrt(w)), which is
// symmetric exactly when the kernel sample matrix is.
Eigen::MatrixXd symmetrized_operator(const KernelSlice& k, const Grid& grid) {
  const Eigen::VectorXd s = grid.weights().cwiseSqrt();
  return s.asDiagonal() * k.values * s.asDiagonal();
}

constexpr double kRelTol = 1e-10;

}  // namespace

SteadyStateReport find_steady_state(const Field& a, const KernelSlice& b, const Grid& grid) {
  const int n = grid.size();
  detail::require(a.size() == n, "find_steady_state: bias length must match grid");
  detail::require(b.size() == n && b.values.cols() == n,
                  "find_steady_state: kernel must be n-by-n for the grid");

  const Eigen::VectorXd s = grid.weights().cwiseSqrt();
  const Eigen::MatrixXd m = symmetrized_operator(b, grid);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);

  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = kRelTol * (sv.size() > 0 ? sv[0] : 0.0);

  int nullspace = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] <= cutoff) ++nullspace;

  // Pseudoinverse solve in the transformed geometry, then map back.
  const Eigen::VectorXd rhs = svd.matrixU().transpose() * s.cwiseProduct(a.values);
  Eigen::VectorXd scaled = Eigen::VectorXd::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) scaled[i] = rhs[i] / sv[i];
  const Eigen::VectorXd g = svd.matrixV() * scaled;

  SteadyStateReport report;
  report.candidate = Field(g.cwiseQuotient(s));
  Field gap(a.values - apply_kernel(b, report.candidate, grid).values);
  report.residual = norm_l2(gap, grid);
  report.in_range = report.residual <= 1e-8 * std::max(1.0, norm_l2(a, grid));
  report.nullspace_dim = nullspace;
  report.non_unique = nullspace > 0;
  return report;
}

SpectralReport spectral_report(const KernelSlice& b, const Activation& act, const Grid& grid,
                               int n_triples) {
  const int n = grid.size();
  detail::require(b.size() == n && b.values.cols() == n,
                  "spectral_report: kernel must be n-by-n for the grid");
  detail::require(n_triples >= 1, "spectral_report: need at least one singular triple");
  detail::require(act.zero_at_zero(),
                  "spectral_report: activation must satisfy sigma(0) = 0 so that the "
                  "zero-residual state is an equilibrium");
  const double sp0 = act.deriv(0.0);
  detail::require(sp0 > 0.0,
                  "spectral_report: activation must have positive slope at 0 for the "
                  "linearization to be informative");

  const Eigen::MatrixXd m = symmetrized_operator(b, grid);
  const Eigen::VectorXd s = grid.weights().cwiseSqrt();

  SpectralReport report;
  report.sigma_prime0 = sp0;
  report.n_requested = n_triples;

  const double m_scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  report.kernel_symmetric = (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * m_scale;

  // Symmetric-part spectrum, reported in descending order.
  const Eigen::MatrixXd ms = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym_eig(ms);
  report.symmetric_part_eigs.assign(sym_eig.eigenvalues().data(),
                                    sym_eig.eigenvalues().data() + n);
  std::reverse(report.symmetric_part_eigs.begin(), report.symmetric_part_eigs.end());

  // Full (possibly complex) spectrum for the instability test.
  Eigen::EigenSolver<Eigen::MatrixXd> full_eig(m);
  report.spectrum_real.resize(n);
  report.spectrum_imag.resize(n);
  for (int i = 0; i < n; ++i) {
    report.spectrum_real[i] = full_eig.eigenvalues()[i].real();
    report.spectrum_imag[i] = full_eig.eigenvalues()[i].imag();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  report.singular_values.assign(sv.data(), sv.data() + n);

  const double sv_cutoff = kRelTol * (sv.size() > 0 ? sv[0] : 0.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > sv_cutoff) ++rank;

  int n_used = n_triples;
  if (n_used > rank) {
    n_used = std::max(rank, 1);
    report.warning = "requested " + std::to_string(n_triples) +
                     " singular triples but the numerical rank is " + std::to_string(rank) +
                     "; clamped";
  }
  report.n_used = n_used;

  report.top_mu.assign(sv.data(), sv.data() + n_used);
  report.top_phi.reserve(n_used);
  report.top_psi.reserve(n_used);
  for (int l = 0; l < n_used; ++l) {
    report.top_phi.push_back(Field(svd.matrixU().col(l).cwiseQuotient(s)));
    report.top_psi.push_back(Field(svd.matrixV().col(l).cwiseQuotient(s)));
  }

  // Gram matrix of the singular functions: T(l, k) = <phi_k, psi_l>,
  // which in the transformed geometry is v_l . u_k.
  report.gram = svd.matrixV().leftCols(n_used).transpose() * svd.matrixU().leftCols(n_used);

  Eigen::JacobiSVD<Eigen::MatrixXd> gram_svd(report.gram);
  const Eigen::VectorXd& gsv = gram_svd.singularValues();
  report.tn_invertible = gsv.size() > 0 && gsv[gsv.size() - 1] > kRelTol * std::max(1.0, gsv[0]);

  const Eigen::MatrixXd dt_mat =
      Eigen::VectorXd::Map(report.top_mu.data(), n_used).asDiagonal() * report.gram;
  const Eigen::MatrixXd dt_sym = 0.5 * (dt_mat + dt_mat.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dt_eig(dt_sym);
  const double dt_scale = std::max(1.0, dt_eig.eigenvalues().cwiseAbs().maxCoeff());
  report.dn_tn_posdef = dt_eig.eigenvalues().minCoeff() > kRelTol * dt_scale;

  // Verdict: a spectrum point with negative real part means the
  // linearized flow e^{-sigma'(0) B t} has a growing mode; a zero real
  // part blocks asymptotic decay; otherwise the symmetric spectrum or
  // the Gram test certifies decay, and anything else stays open.
  const double eig_scale =
      std::max(1.0, Eigen::VectorXd::Map(report.spectrum_real.data(), n).cwiseAbs().maxCoeff());
  const double eig_tol = kRelTol * eig_scale;
  double min_re = report.spectrum_real[0];
  bool has_zero_re = false;
  for (double re : report.spectrum_real) {
    min_re = std::min(min_re, re);
    if (std::abs(re) <= eig_tol) has_zero_re = true;
  }

  if (min_re < -eig_tol) {
    report.verdict = StabilityVerdict::linearly_unstable;
  } else if (report.kernel_symmetric) {
    report.verdict = has_zero_re ? StabilityVerdict::marginal
                                 : StabilityVerdict::linearly_asympt_stable;
  } else if (report.tn_invertible && report.dn_tn_posdef) {
    report.verdict = StabilityVerdict::linearly_asympt_stable;
  } else if (has_zero_re) {
    report.verdict = StabilityVerdict::marginal;
  } else {
    report.verdict = StabilityVerdict::inconclusive;
  }
  return report;
}

RankOneVerdict classify_rank_one(const Field& phi, const Field& psi, const Activation& act,
                                 const Grid& grid) {
  const int n = grid.size();
  detail::require(phi.size() == n && psi.size() == n,
                  "classify_rank_one: factor lengths must match grid");
  detail::require(act.zero_at_zero(),
                  "classify_rank_one: activation must satisfy sigma(0) = 0 so that the zero "
                  "state is an equilibrium (logistic is excluded)");

  RankOneVerdict v;
  Field phi2(phi.values.array().square().matrix());
  Field phi3((phi.values.array().square() * phi.values.array()).matrix());
  v.i_phi_psi = inner_product(phi, psi, grid);
  v.i_phi2_psi = inner_product(phi2, psi, grid);
  v.i_phi3_psi = inner_product(phi3, psi, grid);

  if (!act.has_taylor_at_zero()) {
    v.tag = RankOneCase::nonsmooth;
    return v;
  }

  v.first_order = act.deriv_at_zero() * v.i_phi_psi;
  v.second_order = act.deriv2_at_zero() * v.i_phi2_psi;
  v.third_order = act.deriv3_at_zero() * v.i_phi3_psi;

  const double scale =
      std::max({std::abs(v.i_phi_psi), std::abs(v.i_phi2_psi), std::abs(v.i_phi3_psi)});
  const double tol = kRelTol * scale;

  // Zero thresholds scale with the integral family; the second-order
  // test inherits the |sigma''(0)| factor so that a vanishing second
  // derivative always falls through to the higher-order case.
  const double tol2 = std::abs(act.deriv2_at_zero()) * tol;
  if (v.i_phi_psi > tol) {
    v.tag = RankOneCase::case1_stable;
  } else if (v.i_phi_psi < -tol) {
    v.tag = RankOneCase::case2_unstable;
  } else if (v.second_order > tol2) {
    v.tag = RankOneCase::case3i_onesided_plus;
  } else if (v.second_order < -tol2) {
    v.tag = RankOneCase::case3ii_onesided_minus;
  } else {
    v.tag = RankOneCase::case3iii_higher_order;
  }
  return v;
}

LyapunovTrace lyapunov_trace(const Trajectory& traj, const ControlParams& params,
                             const Activation& act, const Grid& grid, bool energy_series) {
  detail::require(params.time_constant,
                  "lyapunov_trace: controls must be autonomous (time-constant)");
  params.validate(grid, traj.steps());

  const Eigen::VectorXd& w = grid.weights();

  if (energy_series) {
    const Eigen::MatrixXd& k = params.b[0].values;
    const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
    detail::require((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale,
                    "lyapunov_trace: energy series needs a symmetric kernel");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized_operator(params.b[0], grid));
    detail::require(eig.eigenvalues().minCoeff() >= -1e-9 * std::max(1.0, std::abs(eig.eigenvalues().maxCoeff())),
                    "lyapunov_trace: energy series needs a positive-semidefinite kernel");
  }

  LyapunovTrace trace;
  const int steps = traj.steps();
  trace.times.reserve(steps + 1);
  trace.sigma_antideriv.reserve(steps + 1);
  trace.dissipation.reserve(steps + 1);
  if (energy_series) trace.energy.reserve(steps + 1);

  for (int l = 0; l <= steps; ++l) {
    trace.times.push_back(traj.time.time_at(l));
    const Field u = residual(params, traj, l);
    trace.sigma_antideriv.push_back((w.array() * act.antideriv(u.values).array()).sum());
    trace.dissipation.push_back(
        (w.array() * act.eval(u.values).array() * u.values.array()).sum());
    if (energy_series) {
      const Field& f = traj.states[l];
      const Field bf = apply_kernel(params.b[0], f, grid);
      trace.energy.push_back(0.5 * inner_product(bf, f, grid) -
                             inner_product(params.a[0], f, grid));
    }
  }
  return trace;
}

GrowthFit growth_fit(const Trajectory& traj, const Grid& grid) {
  const int steps = traj.steps();
  detail::require(steps >= 8, "growth_fit: need a trajectory of at least 8 steps");

  const int count = steps + 1;
  Eigen::VectorXd t(count), y(count);
  for (int l = 0; l < count; ++l) {
    t[l] = traj.time.time_at(l);
    y[l] = norm_l2(traj.states[l], grid);
  }

  GrowthFit fit;

  const double y_max = y.maxCoeff();
  const double y_min = y.minCoeff();
  if (y_max - y_min <= 1e-12 * std::max(1.0, y_max)) {
    fit.model = GrowthModel::linear;
    fit.rate = 0.0;
    fit.prefactor = y.mean();
    return fit;
  }

  // Linear model y = c0 + c1 t by ordinary least squares.
  Eigen::MatrixXd design(count, 2);
  design.col(0).setOnes();
  design.col(1) = t;
  const Eigen::Vector2d lin = design.colPivHouseholderQr().solve(y);
  const double lin_rms = std::sqrt((y - design * lin).squaredNorm() / count);

  fit.linear_residual = lin_rms;
  fit.model = GrowthModel::linear;
  fit.prefactor = lin[0];
  fit.rate = lin[1];
  fit.residual = lin_rms;

  // Exponential model y = c e^{rho t}, fitted on log y (requires a
  // positive series), compared against the linear model in y-space.
  if (y_min > 0.0) {
    const Eigen::VectorXd logy = y.array().log();
    const Eigen::Vector2d expc = design.colPivHouseholderQr().solve(logy);
    const Eigen::VectorXd pred = (design * expc).array().exp();
    const double exp_rms = std::sqrt((y - pred).squaredNorm() / count);
    fit.exponential_residual = exp_rms;
    if (exp_rms < lin_rms) {
      fit.model = GrowthModel::exponential;
      fit.prefactor = std::exp(expc[0]);
      fit.rate = expc[1];
      fit.residual = exp_rms;
    }
  } else {
    fit.exponential_residual = std::numeric_limits<double>::infinity();
  }
  return fit;
}

std::vector<double> conditioning_bound(const ControlParams& params, const Activation& act,
                                       const Grid& grid) {
  std::vector<double> bounds(params.steps());
  for (int l = 0; l < params.steps(); ++l)
    bounds[l] = act.sup_deriv() * kernel_l2_norm(params.b[l], grid);
  return bounds;
}

double equilibrium_orthogonality_check(const Field& u_e, const KernelSlice& b,
                                       const Activation& act, const Grid& grid) {
  const int n = grid.size();
  detail::require(u_e.size() == n, "equilibrium_orthogonality_check: field must match grid");
  detail::require(act.zero_at_zero(),
                  "equilibrium_orthogonality_check: needs s*sigma(s) >= 0, which fails for "
                  "activations with sigma(0) != 0");

  const double k_scale = std::max(1.0, b.values.cwiseAbs().maxCoeff());
  detail::require((b.values - b.values.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * k_scale,
                  "equilibrium_orthogonality_check: kernel must be symmetric");

  const Field sig_u(act.eval(u_e.values));

  // sigma(u_e) must be annihilated by B.
  const double null_gap = norm_l2(apply_kernel(b, sig_u, grid), grid);
  const double null_scale =
      std::max(1.0, kernel_l2_norm(b, grid) * std::max(1.0, norm_l2(sig_u, grid)));
  detail::require(null_gap <= 1e-8 * null_scale,
                  "equilibrium_orthogonality_check: sigma(u_e) is not in the nullspace of B");

  // u_e must lie in the range of B; for a symmetric operator that is
  // the orthogonal complement of the nullspace.
  const Eigen::VectorXd s = grid.weights().cwiseSqrt();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized_operator(b, grid));
  const double eig_scale = eig.eigenvalues().cwiseAbs().maxCoeff();
  const Eigen::VectorXd ue_t = s.cwiseProduct(u_e.values);
  double null_component_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(eig.eigenvalues()[i]) <= kRelTol * std::max(1.0, eig_scale)) {
      const double coef = eig.eigenvectors().col(i).dot(ue_t);
      null_component_sq += coef * coef;
    }
  }
  detail::require(std::sqrt(null_component_sq) <= 1e-8 * std::max(1.0, norm_l2(u_e, grid)),
                  "equilibrium_orthogonality_check: u_e is not in the range of B");

  return (grid.weights().array() * (u_e.values.array() * sig_u.values.array()).abs()).sum();
}

const char* to_string(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::linearly_asympt_stable:
      return "linearly_asympt_stable";
    case StabilityVerdict::linearly_unstable:
      return "linearly_unstable";
    case StabilityVerdict::marginal:
      return "marginal";
    case StabilityVerdict::inconclusive:
      return "inconclusive";
  }
  return "";
}

const char* to_string(RankOneCase c) {
  switch (c) {
    case RankOneCase::case1_stable:
      return "case1_stable";
    case RankOneCase::case2_unstable:
      return "case2_unstable";
    case RankOneCase::case3i_onesided_plus:
      return "case3i_onesided_plus";
    case RankOneCase::case3ii_onesided_minus:
      return "case3ii_onesided_minus";
    case RankOneCase::case3iii_higher_order:
      return "case3iii_higher_order";
    case RankOneCase::nonsmooth:
      return "nonsmooth";
  }
  return "";
}

const char* to_string(GrowthModel m) {
  return m == GrowthModel::linear ? "linear" : "exponential";
}

}  // namespace seldyn
