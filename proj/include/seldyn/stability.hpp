#ifndef SELDYN_STABILITY_HPP
#define SELDYN_STABILITY_HPP

#include <string>
#include <vector>

#include "seldyn/dynamics.hpp"

namespace seldyn {

/// Least-squares solution report for B f = a under the quadrature
/// geometry.  non_unique flags a nontrivial numerical nullspace.
struct SteadyStateReport {
  Field candidate;
  double residual = 0.0;
  bool in_range = false;
  int nullspace_dim = 0;
  bool non_unique = false;
};

enum class StabilityVerdict {
  linearly_asympt_stable,
  linearly_unstable,
  marginal,
  inconclusive,
};

/// Spectral diagnostics of the discretized kernel operator around the
/// zero-residual equilibrium.  Linearizing f_t = sigma(a - B f) there
/// gives w_t = -sigma'(0) B w, so eigenvalues of B with positive real
/// part decay like e^{-sigma'(0) omega t} and negative real parts grow.
struct SpectralReport {
  std::vector<double> symmetric_part_eigs;  // eigenvalues of (B + B^*)/2, descending
  std::vector<double> singular_values;      // full list, non-increasing
  std::vector<double> spectrum_real;        // full operator spectrum (real parts)
  std::vector<double> spectrum_imag;
  std::vector<double> top_mu;               // leading singular values used for the Gram test
  std::vector<Field> top_phi;               // left singular functions
  std::vector<Field> top_psi;               // right singular functions
  Eigen::MatrixXd gram;                     // T_N with T_N(l, k) = <phi_k, psi_l>
  bool tn_invertible = false;
  bool dn_tn_posdef = false;
  bool kernel_symmetric = false;
  double sigma_prime0 = 0.0;
  int n_requested = 0;
  int n_used = 0;
  StabilityVerdict verdict = StabilityVerdict::inconclusive;
  std::string warning;
};

enum class RankOneCase {
  case1_stable,
  case2_unstable,
  case3i_onesided_plus,
  case3ii_onesided_minus,
  case3iii_higher_order,
  nonsmooth,
};

/// Stability classification of the zero state for a rank-one kernel
/// factored as b(y, z) = mu psi(z) phi(y), mu > 0, driven by the Taylor
/// data of sigma at 0.
struct RankOneVerdict {
  RankOneCase tag = RankOneCase::case3iii_higher_order;
  double i_phi_psi = 0.0;    // integral of phi   * psi
  double i_phi2_psi = 0.0;   // integral of phi^2 * psi
  double i_phi3_psi = 0.0;   // integral of phi^3 * psi
  double first_order = 0.0;  // sigma'(0)   * i_phi_psi
  double second_order = 0.0; // sigma''(0)  * i_phi2_psi
  double third_order = 0.0;  // sigma'''(0) * i_phi3_psi
};

/// Lyapunov-style scalar series along a trajectory with autonomous
/// controls.  sigma_antideriv[l] = integral of Sigma(u^l); the energy
/// series (symmetric kernels only) is 1/2 <B f, f> - <a, f>; the
/// dissipation series is integral of sigma(u^l) u^l.
struct LyapunovTrace {
  std::vector<double> times;
  std::vector<double> sigma_antideriv;
  std::vector<double> energy;  // empty unless requested
  std::vector<double> dissipation;
};

enum class GrowthModel { linear, exponential };

/// Least-squares fit of ||f(t)|| against c0 + rate*t and c0*e^{rate*t};
/// the model with the smaller state-space RMS residual wins, with ties
/// going to linear.
struct GrowthFit {
  GrowthModel model = GrowthModel::linear;
  double rate = 0.0;
  double prefactor = 0.0;  // intercept (linear) or multiplier (exponential)
  double residual = 0.0;   // winning model's RMS residual
  double linear_residual = 0.0;
  double exponential_residual = 0.0;
};

/// Least-squares solve of B f = a; reports the candidate equilibrium,
/// its residual, range membership and the numerical nullspace size.
SteadyStateReport find_steady_state(const Field& a, const KernelSlice& b, const Grid& grid);

/// Spectral and Gram-matrix stability diagnostics with the top
/// n_triples singular triples (clamped to the numerical rank).
/// Requires sigma(0) = 0 and sigma'(0) > 0 so the linearization above
/// applies.
SpectralReport spectral_report(const KernelSlice& b, const Activation& act, const Grid& grid,
                               int n_triples);

/// Case analysis for rank-one kernels.  Kinds without usable Taylor
/// data at the origin (relu, leaky_relu) get the nonsmooth verdict;
/// logistic is rejected because sigma(0) != 0 removes the equilibrium
/// the analysis probes.  elu contributes one-sided data from its
/// s <= 0 branch.
RankOneVerdict classify_rank_one(const Field& phi, const Field& psi, const Activation& act,
                                 const Grid& grid);

/// Scalar monitor series along a stored trajectory.  Requires
/// autonomous controls; the energy series additionally requires a
/// symmetric positive-semidefinite kernel (asymmetry beyond 1e-9 is an
/// error when it is requested).
LyapunovTrace lyapunov_trace(const Trajectory& traj, const ControlParams& params,
                             const Activation& act, const Grid& grid,
                             bool energy_series = false);

/// Growth-model fit of the trajectory norm series (needs >= 8 steps).
GrowthFit growth_fit(const Trajectory& traj, const Grid& grid);

/// Per-step products sup|sigma'| * ||b^l||_{L2(YxY)}: upper bounds on
/// the one-step perturbation amplification of the forward march.
std::vector<double> conditioning_bound(const ControlParams& params, const Activation& act,
                                       const Grid& grid);

/// For symmetric kernels and sign-preserving activations, a candidate
/// equilibrium residual u_e with sigma(u_e) in N(B) and u_e in R(B)
/// must satisfy u_e sigma(u_e) = 0 almost everywhere; returns
/// ||u_e sigma(u_e)||_{L1} after verifying both membership hypotheses.
double equilibrium_orthogonality_check(const Field& u_e, const KernelSlice& b,
                                       const Activation& act, const Grid& grid);

const char* to_string(StabilityVerdict v);
const char* to_string(RankOneCase c);
const char* to_string(GrowthModel m);

}  // namespace seldyn

#endif
