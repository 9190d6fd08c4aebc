#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sparse_lqg {

/// Malformed problem instance: dimension mismatch, invalid parameter.
class InstanceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The stacked stagewise Nash system was singular at step `step`.
class NashSolveError : public std::runtime_error {
 public:
  NashSolveError(std::size_t step, double rcond)
      : std::runtime_error("no stagewise Nash solve at t=" +
                           std::to_string(step) +
                           " (rcond=" + std::to_string(rcond) + ")"),
        step_(step),
        rcond_(rcond) {}

  std::size_t step() const { return step_; }
  double rcond() const { return rcond_; }

 private:
  std::size_t step_;
  double rcond_;
};

/// Innovation covariance C Σ Cᵀ + V too close to singular.
class DegenerateInnovationError : public std::runtime_error {
 public:
  explicit DegenerateInnovationError(double rcond)
      : std::runtime_error("degenerate innovation covariance (rcond=" +
                           std::to_string(rcond) + ")"),
        rcond_(rcond) {}
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

/// Group-lasso solver hit its iteration cap above the KKT tolerance.
/// `step`/`agent` are filled in by the schedule builder when known.
class ConvergenceError : public std::runtime_error {
 public:
  static constexpr std::size_t kUnknown = static_cast<std::size_t>(-1);

  ConvergenceError(double last_residual, std::size_t iterations,
                   std::size_t step = kUnknown, std::size_t agent = kUnknown)
      : std::runtime_error(format(last_residual, iterations, step, agent)),
        last_residual_(last_residual),
        iterations_(iterations),
        step_(step),
        agent_(agent) {}

  ConvergenceError annotated(std::size_t step, std::size_t agent) const {
    return ConvergenceError(last_residual_, iterations_, step, agent);
  }

  double last_residual() const { return last_residual_; }
  std::size_t iterations() const { return iterations_; }
  std::size_t step() const { return step_; }
  std::size_t agent() const { return agent_; }

 private:
  static std::string format(double residual, std::size_t iterations,
                            std::size_t step, std::size_t agent) {
    std::string msg = "group lasso did not converge after " +
                      std::to_string(iterations) +
                      " iterations (kkt residual " + std::to_string(residual) +
                      ")";
    if (step != kUnknown) {
      msg += " at t=" + std::to_string(step) + ", agent " +
             std::to_string(agent);
    }
    return msg;
  }

  double last_residual_;
  std::size_t iterations_;
  std::size_t step_;
  std::size_t agent_;
};

}  // namespace sparse_lqg
