#include "seldyn/activation.hpp"

#include <cmath>
#include <charconv>
#include <stdexcept>

#include "seldyn/errors.hpp"

namespace seldyn {

namespace {

// log(1 + e^s) without overflow for large |s|.
double softplus(double s) {
  return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s)));
}

// log(cosh(s)) without overflow: |s| + log(1 + e^{-2|s|}) - log 2.
double logcosh(double s) {
  const double a = std::abs(s);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

double parse_param(std::string_view text, const char* what) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw std::invalid_argument(std::string("Activation: bad ") + what + " parameter '" +
                                std::string(text) + "'");
  return value;
}

}  // namespace

Activation Activation::relu() { return Activation(ActivationKind::relu, 0.0); }

Activation Activation::leaky_relu(double slope) {
  detail::require(slope >= 0.0, "Activation: leaky_relu slope must be nonnegative");
  return Activation(ActivationKind::leaky_relu, slope);
}

Activation Activation::elu(double alpha) {
  detail::require(alpha >= 0.0, "Activation: elu alpha must be nonnegative");
  return Activation(ActivationKind::elu, alpha);
}

Activation Activation::tanh() { return Activation(ActivationKind::tanh, 0.0); }
Activation Activation::arctan() { return Activation(ActivationKind::arctan, 0.0); }
Activation Activation::logistic() { return Activation(ActivationKind::logistic, 0.0); }

Activation Activation::parse(std::string_view name) {
  const auto colon = name.find(':');
  const std::string_view head = name.substr(0, colon);
  const bool has_param = colon != std::string_view::npos;
  const std::string_view tail = has_param ? name.substr(colon + 1) : std::string_view{};

  if (head == "relu" && !has_param) return relu();
  if (head == "leaky_relu") return has_param ? leaky_relu(parse_param(tail, "slope")) : leaky_relu();
  if (head == "elu") return has_param ? elu(parse_param(tail, "alpha")) : elu();
  if (head == "tanh" && !has_param) return tanh();
  if (head == "arctan" && !has_param) return arctan();
  if (head == "logistic" && !has_param) return logistic();
  throw std::invalid_argument("Activation: unknown kind '" + std::string(name) + "'");
}

double Activation::eval(double s) const {
  switch (kind_) {
    case ActivationKind::relu:
      return s > 0.0 ? s : 0.0;
    case ActivationKind::leaky_relu:
      return s > 0.0 ? s : param_ * s;
    case ActivationKind::elu:
      return s > 0.0 ? s : param_ * std::expm1(s);
    case ActivationKind::tanh:
      return std::tanh(s);
    case ActivationKind::arctan:
      return std::atan(s);
    case ActivationKind::logistic:
      return 1.0 / (1.0 + std::exp(-s));
  }
  return 0.0;
}

double Activation::deriv(double s) const {
  switch (kind_) {
    case ActivationKind::relu:
      return s > 0.0 ? 1.0 : 0.0;
    case ActivationKind::leaky_relu:
      return s > 0.0 ? 1.0 : param_;
    case ActivationKind::elu:
      return s > 0.0 ? 1.0 : param_ * std::exp(s);
    case ActivationKind::tanh: {
      const double t = std::tanh(s);
      return 1.0 - t * t;
    }
    case ActivationKind::arctan:
      return 1.0 / (1.0 + s * s);
    case ActivationKind::logistic: {
      const double p = 1.0 / (1.0 + std::exp(-s));
      return p * (1.0 - p);
    }
  }
  return 0.0;
}

double Activation::antideriv(double s) const {
  switch (kind_) {
    case ActivationKind::relu:
      return s > 0.0 ? 0.5 * s * s : 0.0;
    case ActivationKind::leaky_relu:
      return s > 0.0 ? 0.5 * s * s : 0.5 * param_ * s * s;
    case ActivationKind::elu:
      // integral of alpha(e^t - 1) from 0 to s, s <= 0
      return s > 0.0 ? 0.5 * s * s : param_ * (std::expm1(s) - s);
    case ActivationKind::tanh:
      return logcosh(s);
    case ActivationKind::arctan:
      return s * std::atan(s) - 0.5 * std::log1p(s * s);
    case ActivationKind::logistic:
      return softplus(s) - std::log(2.0);
  }
  return 0.0;
}

std::string Activation::name() const {
  switch (kind_) {
    case ActivationKind::relu:
      return "relu";
    case ActivationKind::leaky_relu:
      return "leaky_relu:" + std::to_string(param_);
    case ActivationKind::elu:
      return "elu:" + std::to_string(param_);
    case ActivationKind::tanh:
      return "tanh";
    case ActivationKind::arctan:
      return "arctan";
    case ActivationKind::logistic:
      return "logistic";
  }
  return "";
}

double Activation::sup_deriv() const {
  switch (kind_) {
    case ActivationKind::relu:
    case ActivationKind::tanh:
    case ActivationKind::arctan:
      return 1.0;
    case ActivationKind::leaky_relu:
      return std::max(1.0, param_);
    case ActivationKind::elu:
      return std::max(1.0, param_);
    case ActivationKind::logistic:
      return 0.25;
  }
  return 1.0;
}

bool Activation::bounded() const {
  return kind_ == ActivationKind::tanh || kind_ == ActivationKind::arctan ||
         kind_ == ActivationKind::logistic;
}

double Activation::sup_abs() const {
  switch (kind_) {
    case ActivationKind::tanh:
      return 1.0;
    case ActivationKind::arctan:
      return 2.0 * std::atan(1.0);  // pi/2
    case ActivationKind::logistic:
      return 1.0;
    default:
      throw std::invalid_argument("Activation: " + name() + " is unbounded");
  }
}

bool Activation::zero_at_zero() const { return kind_ != ActivationKind::logistic; }

bool Activation::has_taylor_at_zero() const {
  return kind_ == ActivationKind::elu || kind_ == ActivationKind::tanh ||
         kind_ == ActivationKind::arctan || kind_ == ActivationKind::logistic;
}

double Activation::deriv_at_zero() const {
  switch (kind_) {
    case ActivationKind::elu:
      return param_;
    case ActivationKind::tanh:
    case ActivationKind::arctan:
      return 1.0;
    case ActivationKind::logistic:
      return 0.25;
    default:
      throw std::invalid_argument("Activation: " + name() + " has no Taylor data at 0");
  }
}

double Activation::deriv2_at_zero() const {
  switch (kind_) {
    case ActivationKind::elu:
      return param_;  // one-sided, from the alpha(e^s - 1) branch
    case ActivationKind::tanh:
    case ActivationKind::arctan:
    case ActivationKind::logistic:
      return 0.0;
    default:
      throw std::invalid_argument("Activation: " + name() + " has no Taylor data at 0");
  }
}

double Activation::deriv3_at_zero() const {
  switch (kind_) {
    case ActivationKind::elu:
      return param_;  // one-sided
    case ActivationKind::tanh:
    case ActivationKind::arctan:
      return -2.0;
    case ActivationKind::logistic:
      return -0.125;
    default:
      throw std::invalid_argument("Activation: " + name() + " has no Taylor data at 0");
  }
}

Eigen::VectorXd Activation::eval(const Eigen::VectorXd& s) const {
  return s.unaryExpr([this](double v) { return eval(v); });
}

Eigen::VectorXd Activation::deriv(const Eigen::VectorXd& s) const {
  return s.unaryExpr([this](double v) { return deriv(v); });
}

Eigen::VectorXd Activation::antideriv(const Eigen::VectorXd& s) const {
  return s.unaryExpr([this](double v) { return antideriv(v); });
}

}  // namespace seldyn
