#ifndef SELDYN_GRID_HPP
#define SELDYN_GRID_HPP

#include <Eigen/Dense>

#include "seldyn/errors.hpp"

namespace seldyn {

/// Closed interval of the spatial domain.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
};

/// Uniform nodes with composite-trapezoid quadrature weights.
///
/// All integrals in the library are evaluated against these weights,
/// so the weighted sums below are the discrete stand-ins for the
/// continuum inner products and operator applications.
class Grid {
 public:
  static Grid make_uniform(int n, Interval domain);

  const Eigen::VectorXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Interval domain() const { return domain_; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  Grid(Eigen::VectorXd nodes, Eigen::VectorXd weights, Interval domain)
      : nodes_(std::move(nodes)), weights_(std::move(weights)), domain_(domain) {}

  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
  Interval domain_;
};

/// Uniform partition of [0, T] into `steps` Euler steps.
struct TimeGrid {
  double T = 1.0;
  int steps = 1;

  TimeGrid() = default;
  TimeGrid(double T_, int steps_) : T(T_), steps(steps_) {
    detail::require(T > 0.0, "TimeGrid: horizon T must be positive");
    detail::require(steps >= 1, "TimeGrid: need at least one step");
  }

  double dt() const { return T / steps; }
  double time_at(int l) const { return l * dt(); }
};

/// Scalar function sampled on the grid nodes.
struct Field {
  Eigen::VectorXd values;

  Field() = default;
  explicit Field(Eigen::VectorXd v) : values(std::move(v)) {}

  static Field zeros(int n) { return Field(Eigen::VectorXd::Zero(n)); }
  static Field constant(int n, double c) { return Field(Eigen::VectorXd::Constant(n, c)); }

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int i) const { return values[i]; }
  double& operator[](int i) { return values[i]; }
};

/// Kernel sampled on the node grid: values(i, j) = k(y_i, z_j).
struct KernelSlice {
  Eigen::MatrixXd values;

  KernelSlice() = default;
  explicit KernelSlice(Eigen::MatrixXd m) : values(std::move(m)) {}

  static KernelSlice zeros(int n) { return KernelSlice(Eigen::MatrixXd::Zero(n, n)); }
  static KernelSlice constant(int n, double c) {
    return KernelSlice(Eigen::MatrixXd::Constant(n, n, c));
  }

  int size() const { return static_cast<int>(values.rows()); }

  /// Sample matrix of the transposed kernel, k^T(y, z) = k(z, y).
  KernelSlice transposed() const { return KernelSlice(values.transpose()); }
};

/// Weighted inner product  sum_i w_i f_i g_i  ~  integral of f*g over Y.
double inner_product(const Field& f, const Field& g, const Grid& grid);

/// L2 norm under the quadrature weights.
double norm_l2(const Field& f, const Grid& grid);

/// L1 norm under the quadrature weights.
double norm_l1(const Field& f, const Grid& grid);

/// (B_k f)(y_i) = sum_j k(y_i, z_j) w_j f_j  ~  integral of k(y,·) f.
///
/// As a matrix this is K·diag(w).  Its adjoint under the weighted inner
/// product is K^T·diag(w): <K diag(w) f, g>_w = <f, K^T diag(w) g>_w,
/// so transposing the sample matrix transposes the operator.
Field apply_kernel(const KernelSlice& k, const Field& f, const Grid& grid);

/// Hilbert-Schmidt norm sqrt( sum_ij w_i w_j k_ij^2 ) ~ ||k||_{L2(YxY)}.
/// Dominates the L2->L2 operator norm of B_k.
double kernel_l2_norm(const KernelSlice& k, const Grid& grid);

/// Weighted double-sum inner product of two kernel slices.
double kernel_inner_product(const KernelSlice& a, const KernelSlice& b, const Grid& grid);

}  // namespace seldyn

#endif
