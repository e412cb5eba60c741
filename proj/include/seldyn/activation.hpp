#ifndef SELDYN_ACTIVATION_HPP
#define SELDYN_ACTIVATION_HPP

#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace seldyn {

enum class ActivationKind { relu, leaky_relu, elu, tanh, arctan, logistic };

/// Monotone scalar nonlinearity with its derivative and antiderivative.
///
/// The antiderivative is normalized so that antideriv(0) == 0; it feeds
/// the Lyapunov-style diagnostics.  Kink conventions: relu and leaky_relu
/// take the value of their s <= 0 branch for deriv at s == 0 (so relu
/// reports deriv(0) == 0).  elu likewise belongs to its s <= 0 branch at
/// the origin, which is also where its one-sided Taylor data comes from.
class Activation {
 public:
  static Activation relu();
  static Activation leaky_relu(double slope = 0.1);
  static Activation elu(double alpha = 1.0);
  static Activation tanh();
  static Activation arctan();
  static Activation logistic();

  /// Accepts "relu", "leaky_relu", "leaky_relu:<slope>", "elu",
  /// "elu:<alpha>", "tanh", "arctan", "logistic".
  static Activation parse(std::string_view name);

  double eval(double s) const;
  double deriv(double s) const;
  double antideriv(double s) const;

  ActivationKind kind() const { return kind_; }
  double param() const { return param_; }
  std::string name() const;

  /// Global bound on |sigma'|; doubles as the Lipschitz constant.
  double sup_deriv() const;

  /// True when |sigma| is globally bounded (tanh, arctan, logistic).
  bool bounded() const;
  /// sup |sigma| for bounded kinds; throws otherwise.
  double sup_abs() const;

  /// sigma(0) == 0 holds for every kind except logistic.
  bool zero_at_zero() const;

  /// Taylor data of sigma at the origin, available for kinds that are
  /// at least one-sidedly smooth there: elu (from its s <= 0 branch),
  /// tanh, arctan and logistic.  relu and leaky_relu have no usable
  /// expansion and report has_taylor_at_zero() == false.
  bool has_taylor_at_zero() const;
  double deriv_at_zero() const;   // sigma'(0)
  double deriv2_at_zero() const;  // sigma''(0)
  double deriv3_at_zero() const;  // sigma'''(0)

  /// Elementwise application over a node vector.
  Eigen::VectorXd eval(const Eigen::VectorXd& s) const;
  Eigen::VectorXd deriv(const Eigen::VectorXd& s) const;
  Eigen::VectorXd antideriv(const Eigen::VectorXd& s) const;

 private:
  Activation(ActivationKind kind, double param) : kind_(kind), param_(param) {}

  ActivationKind kind_;
  double param_;  // slope for leaky_relu, alpha for elu, unused otherwise
};

}  // namespace seldyn

#endif
