#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "seldyn/stability.hpp"

using namespace seldyn;

namespace {

Field random_field(int n, std::mt19937& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Field f = Field::zeros(n);
  for (int i = 0; i < n; ++i) f[i] = dist(rng);
  return f;
}

Field normalized(const Eigen::VectorXd& v, const Grid& grid) {
  Field f(v);
  return Field(v / norm_l2(f, grid));
}

// Kernel whose induced operator B = K diag(w) has the prescribed
// spectrum: similarity with S = diag(sqrt(w)) turns B into S K S, so
// K = S^{-1} Q diag(lambda) Q^T S^{-1} realizes eigenvalues lambda with
// eigenfields S^{-1} q_l.
KernelSlice kernel_with_spectrum(const Eigen::MatrixXd& q, const Eigen::VectorXd& lambda,
                                 const Grid& grid) {
  const Eigen::VectorXd inv_s = grid.weights().cwiseSqrt().cwiseInverse();
  return KernelSlice(Eigen::MatrixXd(inv_s.asDiagonal() * q * lambda.asDiagonal() *
                                     q.transpose() * inv_s.asDiagonal()));
}

Eigen::MatrixXd random_orthogonal(int n, std::mt19937& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = dist(rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
}

// 2-node kernel realizing the operator matrix m0 in the transformed
// geometry (weights are 1/2 there, so the map is just a scaling by 2).
KernelSlice two_node_kernel(const Eigen::Matrix2d& m0) {
  return KernelSlice(Eigen::MatrixXd(2.0 * m0));
}

}  // namespace

TEST_CASE("steady state recovers the solution of a solvable system") {
  std::mt19937 rng(3);
  const Grid grid = Grid::make_uniform(8, {0.0, 1.0});
  Eigen::VectorXd lambda(8);
  lambda << 3.0, 2.5, 2.0, 1.5, 1.0, 0.8, 0.5, 0.3;
  const KernelSlice k = kernel_with_spectrum(random_orthogonal(8, rng), lambda, grid);

  const Field f_star = random_field(8, rng);
  const Field a = apply_kernel(k, f_star, grid);

  const SteadyStateReport report = find_steady_state(a, k, grid);
  CHECK(report.in_range);
  CHECK(report.nullspace_dim == 0);
  CHECK_FALSE(report.non_unique);
  CHECK(report.residual < 1e-10);
  CHECK((report.candidate.values - f_star.values).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("steady state flags rank deficiency and unreachable data") {
  const Grid grid = Grid::make_uniform(6, {0.0, 1.0});
  Eigen::VectorXd raw(6);
  raw << 1.0, 0.8, 1.2, 0.9, 1.1, 1.0;
  const Field v = normalized(raw, grid);
  // separable symmetric kernel: B f = <v, f> v, so the range is span(v)
  const KernelSlice k(Eigen::MatrixXd(v.values * v.values.transpose()));

  SUBCASE("bias inside the range") {
    const Field a(0.7 * v.values);
    const SteadyStateReport report = find_steady_state(a, k, grid);
    CHECK(report.in_range);
    CHECK(report.nullspace_dim == 5);
    CHECK(report.non_unique);
    CHECK(report.residual < 1e-10);
  }

  SUBCASE("bias with a component outside the range") {
    std::mt19937 rng(5);
    Field a = random_field(6, rng);
    a.values -= inner_product(a, v, grid) * v.values;  // now orthogonal to the range
    a.values += 1e-3 * v.values;                       // tiny reachable part
    const SteadyStateReport report = find_steady_state(a, k, grid);
    CHECK_FALSE(report.in_range);
    CHECK(report.non_unique);
    CHECK(report.residual > 0.1);
  }

  SUBCASE("zero kernel") {
    const KernelSlice none = KernelSlice::zeros(6);
    const Field a = Field::constant(6, 1.0);
    const SteadyStateReport report = find_steady_state(a, none, grid);
    CHECK(report.nullspace_dim == 6);
    CHECK_FALSE(report.in_range);
    CHECK(report.residual == doctest::Approx(norm_l2(a, grid)).epsilon(1e-12));
    CHECK(report.candidate.values.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("spectral report certifies a symmetric positive kernel") {
  std::mt19937 rng(7);
  const Grid grid = Grid::make_uniform(8, {0.0, 1.0});
  Eigen::VectorXd lambda(8);
  lambda << 4.0, 3.2, 2.5, 1.9, 1.4, 1.0, 0.7, 0.4;
  const KernelSlice k = kernel_with_spectrum(random_orthogonal(8, rng), lambda, grid);

  const SpectralReport report = spectral_report(k, Activation::tanh(), grid, 4);
  CHECK(report.verdict == StabilityVerdict::linearly_asympt_stable);
  CHECK(report.kernel_symmetric);
  CHECK(report.tn_invertible);
  CHECK(report.dn_tn_posdef);
  CHECK(report.sigma_prime0 == 1.0);
  CHECK(report.n_used == 4);
  CHECK(report.warning.empty());

  // singular values of the symmetric operator are its eigenvalues
  REQUIRE(static_cast<int>(report.singular_values.size()) == 8);
  for (int i = 0; i < 8; ++i)
    CHECK(report.singular_values[i] == doctest::Approx(lambda[i]).epsilon(1e-10));
  for (size_t i = 1; i < report.singular_values.size(); ++i)
    CHECK(report.singular_values[i] <= report.singular_values[i - 1] + 1e-12);

  // the triples satisfy B psi_l = mu_l phi_l
  for (int l = 0; l < report.n_used; ++l) {
    const Field bpsi = apply_kernel(k, report.top_psi[l], grid);
    const Field want(report.top_mu[l] * report.top_phi[l].values);
    CHECK((bpsi.values - want.values).cwiseAbs().maxCoeff() < 1e-8);
  }

  // symmetric kernels have an identity Gram matrix
  const Eigen::MatrixXd gap =
      report.gram - Eigen::MatrixXd::Identity(report.n_used, report.n_used);
  CHECK(gap.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("a negative operator eigenvalue is reported as unstable") {
  const Grid grid = Grid::make_uniform(2, {0.0, 1.0});
  Eigen::Matrix2d m0;
  m0 << 1.0, 4.0, 0.0, -0.5;  // triangular: eigenvalues 1 and -1/2
  const KernelSlice k = two_node_kernel(m0);

  const SpectralReport report = spectral_report(k, Activation::tanh(), grid, 2);
  CHECK(report.verdict == StabilityVerdict::linearly_unstable);
  CHECK_FALSE(report.kernel_symmetric);
  const double min_re = std::min(report.spectrum_real[0], report.spectrum_real[1]);
  const double max_re = std::max(report.spectrum_real[0], report.spectrum_real[1]);
  CHECK(min_re == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(max_re == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a rotation-like kernel passes the Gram positivity test") {
  const Grid grid = Grid::make_uniform(2, {0.0, 1.0});
  Eigen::Matrix2d m0;
  m0 << 2.0, 0.3, -0.3, 2.0;  // complex pair 2 +- 0.3i, not symmetric
  const KernelSlice k = two_node_kernel(m0);

  const SpectralReport report = spectral_report(k, Activation::tanh(), grid, 2);
  CHECK_FALSE(report.kernel_symmetric);
  CHECK(report.tn_invertible);
  CHECK(report.dn_tn_posdef);
  CHECK(report.verdict == StabilityVerdict::linearly_asympt_stable);
}

TEST_CASE("a zero mode makes the verdict marginal and clamps the triples") {
  const Grid grid = Grid::make_uniform(2, {0.0, 1.0});
  Eigen::Matrix2d m0;
  m0 << 2.0, 0.0, 0.0, 0.0;  // symmetric, rank one
  const KernelSlice k = two_node_kernel(m0);

  const SpectralReport report = spectral_report(k, Activation::tanh(), grid, 2);
  CHECK(report.verdict == StabilityVerdict::marginal);
  CHECK(report.kernel_symmetric);
  CHECK(report.n_requested == 2);
  CHECK(report.n_used == 1);
  CHECK_FALSE(report.warning.empty());
}

TEST_CASE("spectral analysis needs an equilibrium-compatible activation") {
  const Grid grid = Grid::make_uniform(4, {0.0, 1.0});
  const KernelSlice k = KernelSlice::constant(4, 1.0);
  CHECK_THROWS_AS(spectral_report(k, Activation::logistic(), grid, 2), std::invalid_argument);
  CHECK_THROWS_AS(spectral_report(k, Activation::relu(), grid, 2), std::invalid_argument);
  CHECK_NOTHROW(spectral_report(k, Activation::leaky_relu(0.5), grid, 2));
}

TEST_CASE("rank-one classification by the leading integral") {
  const Grid grid = Grid::make_uniform(17, {0.0, 1.0});
  const Field one = normalized(Eigen::VectorXd::Ones(grid.size()), grid);

  SUBCASE("aligned factors are first-order stable") {
    const RankOneVerdict v = classify_rank_one(one, one, Activation::tanh(), grid);
    CHECK(v.tag == RankOneCase::case1_stable);
    CHECK(v.i_phi_psi == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v.first_order == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("anti-aligned factors are first-order unstable") {
    const Field neg(Eigen::VectorXd(-one.values));
    const RankOneVerdict v = classify_rank_one(one, neg, Activation::tanh(), grid);
    CHECK(v.tag == RankOneCase::case2_unstable);
    CHECK(v.i_phi_psi == doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("rank-one classification at second and higher order") {
  const Grid grid = Grid::make_uniform(33, {0.0, 1.0});
  const Eigen::VectorXd y = grid.nodes();
  const Field phi = normalized(y, grid);

  // psi orthogonal to phi: remove the phi component from y^2; the
  // remaining <phi^2, psi> integral is positive by Cauchy-Schwarz
  Field y2(Eigen::VectorXd(y.array().square().matrix()));
  const Field phi_unnorm(y);
  const double c =
      inner_product(y2, phi_unnorm, grid) / inner_product(phi_unnorm, phi_unnorm, grid);
  const Field psi = normalized(y2.values - c * y, grid);

  SUBCASE("one-sided positive second derivative grows") {
    const RankOneVerdict v = classify_rank_one(phi, psi, Activation::elu(1.0), grid);
    CHECK(std::abs(v.i_phi_psi) < 1e-12);
    CHECK(v.i_phi2_psi > 1e-4);
    CHECK(v.second_order > 0.0);
    CHECK(v.tag == RankOneCase::case3i_onesided_plus);
  }

  SUBCASE("one-sided negative second derivative decays") {
    const Field flipped(Eigen::VectorXd(-psi.values));
    const RankOneVerdict v = classify_rank_one(phi, flipped, Activation::elu(1.0), grid);
    CHECK(v.second_order < 0.0);
    CHECK(v.tag == RankOneCase::case3ii_onesided_minus);
  }

  SUBCASE("odd activations fall through to third order") {
    const RankOneVerdict v = classify_rank_one(phi, psi, Activation::tanh(), grid);
    CHECK(v.tag == RankOneCase::case3iii_higher_order);
    CHECK(v.second_order == 0.0);
  }

  SUBCASE("kinds without taylor data are declared nonsmooth") {
    CHECK(classify_rank_one(phi, phi, Activation::relu(), grid).tag == RankOneCase::nonsmooth);
    CHECK(classify_rank_one(phi, phi, Activation::leaky_relu(0.1), grid).tag ==
          RankOneCase::nonsmooth);
  }

  SUBCASE("logistic has no zero equilibrium to classify") {
    CHECK_THROWS_AS(classify_rank_one(phi, psi, Activation::logistic(), grid),
                    std::invalid_argument);
  }
}

TEST_CASE("lyapunov series are constant when the residual cannot move") {
  std::mt19937 rng(11);
  const Grid grid = Grid::make_uniform(7, {0.0, 1.0});
  const TimeGrid time(1.0, 12);
  const Field a = random_field(7, rng);
  const ControlParams params = ControlParams::constant(a, KernelSlice::zeros(7), 12);
  const Trajectory traj = forward_solve(params, random_field(7, rng), Activation::tanh(), grid,
                                        time);

  const LyapunovTrace trace = lyapunov_trace(traj, params, Activation::tanh(), grid);
  REQUIRE(trace.times.size() == 13);
  CHECK(trace.energy.empty());
  for (size_t l = 1; l < trace.sigma_antideriv.size(); ++l) {
    CHECK(trace.sigma_antideriv[l] == trace.sigma_antideriv[0]);
    CHECK(trace.dissipation[l] == trace.dissipation[0]);
  }
}

TEST_CASE("the activation potential decays along dissipative dynamics") {
  std::mt19937 rng(13);
  const Grid grid = Grid::make_uniform(9, {0.0, 1.0});
  const TimeGrid time(1.0, 200);
  Eigen::VectorXd lambda(9);
  lambda << 3.0, 2.4, 2.0, 1.6, 1.2, 0.9, 0.6, 0.4, 0.2;
  const KernelSlice k = kernel_with_spectrum(random_orthogonal(9, rng), lambda, grid);
  const Field a = random_field(9, rng);
  const ControlParams params = ControlParams::constant(a, k, 200);
  const Trajectory traj =
      forward_solve(params, random_field(9, rng), Activation::tanh(), grid, time);

  const LyapunovTrace trace = lyapunov_trace(traj, params, Activation::tanh(), grid,
                                             /*energy_series=*/true);
  REQUIRE(trace.energy.size() == trace.times.size());
  CHECK(trace.sigma_antideriv.back() < trace.sigma_antideriv.front());

  // both scalar series match their defining formulas
  for (const int l : {0, 57, 200}) {
    const Field u = residual(params, traj, l);
    double sig = 0.0, dis = 0.0;
    for (int i = 0; i < 9; ++i) {
      sig += grid.weights()[i] * Activation::tanh().antideriv(u[i]);
      dis += grid.weights()[i] * Activation::tanh().eval(u[i]) * u[i];
    }
    CHECK(trace.sigma_antideriv[l] == doctest::Approx(sig).epsilon(1e-13));
    CHECK(trace.dissipation[l] == doctest::Approx(dis).epsilon(1e-13));

    const Field& f = traj.states[l];
    const double energy =
        0.5 * inner_product(apply_kernel(k, f, grid), f, grid) - inner_product(a, f, grid);
    CHECK(trace.energy[l] == doctest::Approx(energy).epsilon(1e-12));
  }
}

TEST_CASE("the energy series guards its hypotheses") {
  std::mt19937 rng(17);
  const Grid grid = Grid::make_uniform(5, {0.0, 1.0});
  const TimeGrid time(0.5, 10);
  const Field f_I = random_field(5, rng);

  KernelSlice skew = KernelSlice::zeros(5);
  skew.values(0, 1) = 1.0;
  skew.values(1, 0) = -1.0;
  const ControlParams asym = ControlParams::constant(Field::zeros(5), skew, 10);
  const Trajectory traj1 = forward_solve(asym, f_I, Activation::tanh(), grid, time);
  CHECK_NOTHROW(lyapunov_trace(traj1, asym, Activation::tanh(), grid));
  CHECK_THROWS_AS(lyapunov_trace(traj1, asym, Activation::tanh(), grid, true),
                  std::invalid_argument);

  // symmetric but indefinite: the quadratic form check must reject it
  Eigen::VectorXd lambda(5);
  lambda << 2.0, 1.0, 0.5, 0.2, -0.4;
  const KernelSlice indef = kernel_with_spectrum(random_orthogonal(5, rng), lambda, grid);
  const ControlParams params = ControlParams::constant(Field::zeros(5), indef, 10);
  const Trajectory traj2 = forward_solve(params, f_I, Activation::tanh(), grid, time);
  CHECK_THROWS_AS(lyapunov_trace(traj2, params, Activation::tanh(), grid, true),
                  std::invalid_argument);

  // time-varying controls have no single Lyapunov functional
  std::vector<Field> a_slices(10, Field::zeros(5));
  std::vector<KernelSlice> b_slices(10, KernelSlice::zeros(5));
  const ControlParams varying = ControlParams::time_varying(a_slices, b_slices);
  const Trajectory traj3 = forward_solve(varying, f_I, Activation::tanh(), grid, time);
  CHECK_THROWS_AS(lyapunov_trace(traj3, varying, Activation::tanh(), grid),
                  std::invalid_argument);
}

TEST_CASE("growth fit identifies constant, linear and exponential regimes") {
  const Grid grid = Grid::make_uniform(5, {0.0, 1.0});

  SUBCASE("frozen state") {
    const TimeGrid time(1.0, 10);
    const ControlParams zero = ControlParams::constant(Field::zeros(5), KernelSlice::zeros(5),
                                                       10);
    const Trajectory traj =
        forward_solve(zero, Field::constant(5, 0.7), Activation::tanh(), grid, time);
    const GrowthFit fit = growth_fit(traj, grid);
    CHECK(fit.model == GrowthModel::linear);
    CHECK(fit.rate == 0.0);
    CHECK(fit.prefactor == doctest::Approx(0.7).epsilon(1e-12));
  }

  SUBCASE("linear ramp") {
    const TimeGrid time(1.0, 16);
    const ControlParams ramp =
        ControlParams::constant(Field::constant(5, 1.0), KernelSlice::zeros(5), 16);
    const Trajectory traj =
        forward_solve(ramp, Field::constant(5, 0.25), Activation::relu(), grid, time);
    const GrowthFit fit = growth_fit(traj, grid);
    CHECK(fit.model == GrowthModel::linear);
    CHECK(fit.rate == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit.prefactor == doctest::Approx(0.25).epsilon(1e-8));
    CHECK(fit.residual < 1e-12);
    CHECK(fit.exponential_residual > fit.linear_residual);
  }

  SUBCASE("exact discrete exponential") {
    // constant field, kernel -1: each step multiplies by (1 + dt)
    const TimeGrid time(1.0, 64);
    const ControlParams params =
        ControlParams::constant(Field::zeros(5), KernelSlice::constant(5, -1.0), 64);
    const Trajectory traj =
        forward_solve(params, Field::constant(5, 1.0), Activation::relu(), grid, time);
    const GrowthFit fit = growth_fit(traj, grid);
    CHECK(fit.model == GrowthModel::exponential);
    const double dt = time.dt();
    CHECK(fit.rate == doctest::Approx(std::log1p(dt) / dt).epsilon(1e-10));
    CHECK(fit.prefactor == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit.residual < 1e-10);
  }

  SUBCASE("too short to fit") {
    const TimeGrid time(1.0, 7);
    const ControlParams zero = ControlParams::constant(Field::zeros(5), KernelSlice::zeros(5),
                                                       7);
    const Trajectory traj =
        forward_solve(zero, Field::constant(5, 1.0), Activation::tanh(), grid, time);
    CHECK_THROWS_AS(growth_fit(traj, grid), std::invalid_argument);
  }
}

TEST_CASE("conditioning bound multiplies slope and kernel size") {
  std::mt19937 rng(19);
  const Grid grid = Grid::make_uniform(6, {0.0, 1.0});
  std::vector<Field> a;
  std::vector<KernelSlice> b;
  for (int l = 0; l < 4; ++l) {
    a.push_back(random_field(6, rng));
    KernelSlice k = KernelSlice::zeros(6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) k.values(i, j) = std::uniform_real_distribution<double>(
          -1.0, 1.0)(rng);
    b.push_back(k);
  }
  const ControlParams params = ControlParams::time_varying(a, b);

  const Activation act = Activation::logistic();
  const std::vector<double> bounds = conditioning_bound(params, act, grid);
  REQUIRE(bounds.size() == 4);
  for (int l = 0; l < 4; ++l)
    CHECK(bounds[l] ==
          doctest::Approx(0.25 * kernel_l2_norm(params.b[l], grid)).epsilon(1e-13));
}

TEST_CASE("equilibrium orthogonality accepts a valid pair and rejects bad ones") {
  const Grid grid = Grid::make_uniform(7, {0.0, 1.0});
  Eigen::VectorXd raw(7);
  raw << 0.9, 1.1, 1.0, 0.8, 1.2, 1.0, 0.95;  // strictly positive profile
  const Field v = normalized(raw, grid);
  const KernelSlice k(Eigen::MatrixXd(v.values * v.values.transpose()));  // symmetric PSD

  // u_e = -v lies in the range span(v); relu kills it, so sigma(u_e) is
  // trivially in the nullspace and the product vanishes
  const Field u_e(Eigen::VectorXd(-v.values));
  CHECK(equilibrium_orthogonality_check(u_e, k, Activation::relu(), grid) == 0.0);

  // the zero residual works for every admissible activation
  const Field zero = Field::zeros(7);
  CHECK(equilibrium_orthogonality_check(zero, k, Activation::tanh(), grid) == 0.0);

  // +v survives relu and is not annihilated by B
  CHECK_THROWS_AS(equilibrium_orthogonality_check(v, k, Activation::relu(), grid),
                  std::invalid_argument);

  // a field orthogonal to v is outside the range of B
  std::mt19937 rng(23);
  Field outside = random_field(7, rng);
  outside.values -= inner_product(outside, v, grid) * v.values;
  outside.values = -outside.values.cwiseAbs();  // keep relu(u_e) = 0
  CHECK_THROWS_AS(equilibrium_orthogonality_check(outside, k, Activation::relu(), grid),
                  std::invalid_argument);

  // logistic breaks s * sigma(s) >= 0
  CHECK_THROWS_AS(equilibrium_orthogonality_check(zero, k, Activation::logistic(), grid),
                  std::invalid_argument);

  // asymmetric kernels are out of scope
  KernelSlice asym = k;
  asym.values(0, 1) += 0.5;
  CHECK_THROWS_AS(equilibrium_orthogonality_check(zero, asym, Activation::relu(), grid),
                  std::invalid_argument);
}
