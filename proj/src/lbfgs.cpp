#include "ccdeq/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace ccdeq::opt {

namespace {

struct Pair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

Eigen::VectorXd two_loop_direction(const std::deque<Pair>& pairs, const Eigen::VectorXd& grad) {
  Eigen::VectorXd q = -grad;
  std::vector<double> alpha(pairs.size());
  for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
    alpha[i] = pairs[i].rho * pairs[i].s.dot(q);
    q -= alpha[i] * pairs[i].y;
  }
  if (!pairs.empty()) {
    const Pair& last = pairs.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double beta = pairs[i].rho * pairs[i].y.dot(q);
    q += (alpha[i] - beta) * pairs[i].s;
  }
  return q;
}

}  // namespace

Result minimize(const Objective& objective, Eigen::VectorXd x0, const Options& options) {
  const Eigen::Index n = x0.size();
  Result res;
  res.x = std::move(x0);
  res.gradient.resize(n);
  res.value = objective(res.x, res.gradient);
  if (!std::isfinite(res.value)) throw std::domain_error("lbfgs: objective infeasible at start");
  res.trace.push_back(res.value);

  if (n == 0) {
    res.converged = true;
    return res;
  }

  std::deque<Pair> pairs;
  Eigen::VectorXd grad_new(n);
  int stagnant = 0;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (res.gradient.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd dir = two_loop_direction(pairs, res.gradient);
    double slope = res.gradient.dot(dir);
    if (!(slope < 0.0) || !dir.allFinite()) {
      // fall back to steepest descent, drop stale curvature
      pairs.clear();
      dir = -res.gradient;
      slope = res.gradient.dot(dir);
    }

    // Armijo backtracking; scale the first step when no curvature is known.
    double step = pairs.empty() ? std::min(1.0, 1.0 / res.gradient.lpNorm<Eigen::Infinity>()) : 1.0;
    constexpr double kArmijo = 1e-4;
    bool accepted = false;
    double f_new = res.value;
    Eigen::VectorXd x_new;
    for (int ls = 0; ls < options.max_line_search_steps; ++ls) {
      x_new = res.x + step * dir;
      f_new = objective(x_new, grad_new);
      if (std::isfinite(f_new) && f_new <= res.value + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no progress along any descent step

    // objective changes below double resolution: further descent is not
    // verifiable, stop instead of spinning
    if (res.value - f_new <= 4.0 * 2.2e-16 * (std::abs(res.value) + 1.0)) {
      if (++stagnant >= 3) {
        res.x = std::move(x_new);
        res.value = f_new;
        res.gradient = grad_new;
        res.trace.push_back(res.value);
        res.iterations = iter + 1;
        break;
      }
    } else {
      stagnant = 0;
    }

    Pair pair;
    pair.s = x_new - res.x;
    pair.y = grad_new - res.gradient;
    const double sy = pair.s.dot(pair.y);
    if (sy > 1e-12 * pair.s.norm() * pair.y.norm()) {
      pair.rho = 1.0 / sy;
      pairs.push_back(std::move(pair));
      if (static_cast<int>(pairs.size()) > options.history) pairs.pop_front();
    }

    res.x = std::move(x_new);
    res.value = f_new;
    res.gradient = grad_new;
    res.trace.push_back(res.value);
    res.iterations = iter + 1;
  }

  if (!res.converged)
    res.converged = res.gradient.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance;
  return res;
}

}  // namespace ccdeq::opt
