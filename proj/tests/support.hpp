#ifndef CCDEQ_TESTS_SUPPORT_HPP_
#define CCDEQ_TESTS_SUPPORT_HPP_

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "ccdeq/design.hpp"
#include "ccdeq/graph.hpp"
#include "ccdeq/likelihood.hpp"
#include "ccdeq/rng.hpp"

namespace ccdeq::testing {

/// Central finite differences of a scalar function; the independent oracle
/// for every analytic gradient in the project.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step = 1e-5) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    xp[k] = x0 + step;
    const double fp = f(xp);
    xp[k] = x0 - step;
    const double fm = f(xp);
    xp[k] = x0;
    grad[k] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

/// Worst per-coordinate mismatch, relative to max(1, |fd_k|).
inline double max_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& fd) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < analytic.size(); ++k) {
    const double denom = std::max(1.0, std::abs(fd[k]));
    worst = std::max(worst, std::abs(analytic[k] - fd[k]) / denom);
  }
  return worst;
}

/// Composite Simpson quadrature on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) sum += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
  return sum * h / 3.0;
}

inline Graph random_graph(int d, double edge_probability, bool acyclic, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Graph g(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      if (acyclic && order[i] >= order[j]) continue;
      if (u(rng) < edge_probability) g.set_edge(i, j, true);
    }
  }
  return g;
}

inline ExperimentDesign random_design(int d, int k, std::mt19937_64& rng) {
  ExperimentDesign design;
  design.conditions.push_back(Intervention::observational());
  design.names.push_back("observational");
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_int_distribution<int> target(0, d - 1);
  for (int c = 1; c < k; ++c) {
    switch (kind(rng)) {
      case 0:
        design.conditions.push_back(Intervention::observational());
        break;
      case 1:
        design.conditions.push_back(Intervention::abundance(target(rng)));
        break;
      case 2:
        design.conditions.push_back(Intervention::activity(target(rng)));
        break;
      default: {
        std::vector<int> targets = {target(rng), target(rng)};
        design.conditions.push_back(Intervention::mechanism_set(std::move(targets)));
        break;
      }
    }
    design.names.push_back("condition_" + std::to_string(c + 1));
  }
  return design;
}

/// Masked parameters with slopes small enough to keep I - B well conditioned.
inline ParameterSet random_parameters(const Graph& g, int k, std::mt19937_64& rng,
                                      double slope_scale = 0.35) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = g.num_compounds();
  ParameterSet params;
  for (int c = 0; c < k; ++c) {
    ConditionParameters p = ConditionParameters::zero(d);
    for (int j = 0; j < d; ++j) {
      for (int i : g.parents(j)) p.b(i, j) = slope_scale * normal(rng) / std::max(1, d - 1);
    }
    for (int i = 0; i < d; ++i) {
      p.mu[i] = normal(rng);
      p.a[i] = 0.3 * normal(rng);
    }
    params.per_condition.push_back(std::move(p));
  }
  return params;
}

inline Dataset random_dataset(int d, int k, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data;
  for (int c = 0; c < k; ++c) {
    Eigen::MatrixXd x(n, d);
    for (int r = 0; r < n; ++r) {
      for (int i = 0; i < d; ++i) x(r, i) = normal(rng);
    }
    data.push_back(std::move(x));
  }
  return data;
}

}  // namespace ccdeq::testing

#endif  // CCDEQ_TESTS_SUPPORT_HPP_
