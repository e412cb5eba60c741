#ifndef SELDYN_ERRORS_HPP
#define SELDYN_ERRORS_HPP

#include <memory>
#include <stdexcept>
#include <string>

namespace seldyn {

/// Thrown when the forward solver leaves the trusted range
/// (sup-norm above the overflow guard, or a non-finite entry).
/// Carries the first bad step and the offending norm so callers
/// can report or salvage the partial trajectory.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int step, double max_norm, std::string what)
      : std::runtime_error(std::move(what)), step_(step), max_norm_(max_norm) {}

  int step() const { return step_; }
  double max_norm() const { return max_norm_; }

 private:
  int step_;
  double max_norm_;
};

/// Configuration or input-file problem (missing file, malformed CSV,
/// unknown key).  The CLI maps this to its own exit code, distinct
/// from mathematical precondition violations.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace detail

}  // namespace seldyn

#endif
