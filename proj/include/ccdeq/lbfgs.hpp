#ifndef CCDEQ_LBFGS_HPP_
#define CCDEQ_LBFGS_HPP_

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace ccdeq::opt {

/// Objective callback: returns the value at x and fills the gradient.
/// Returning a non-finite value marks the point infeasible; the line search
/// backtracks away from it.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct Options {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // sup-norm stop
  int history = 10;
  int max_line_search_steps = 60;
};

struct Result {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  bool converged = false;
  int iterations = 0;
  /// Objective values of accepted iterates (non-increasing by construction).
  std::vector<double> trace;
};

/// Limited-memory BFGS with Armijo backtracking. Deterministic; accepted
/// objective values never increase. Throws std::domain_error when the starting
/// point itself is infeasible.
Result minimize(const Objective& objective, Eigen::VectorXd x0, const Options& options);

}  // namespace ccdeq::opt

#endif  // CCDEQ_LBFGS_HPP_
