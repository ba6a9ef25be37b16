#ifndef CCDEQ_PARAMETERS_HPP_
#define CCDEQ_PARAMETERS_HPP_

#include <vector>

#include <Eigen/Core>

#include "ccdeq/graph.hpp"

namespace ccdeq {

/// Linearized mechanism parameters for one experimental condition.
/// b(i, j) is the direct effect of x_i on x_j (nonzero only on graph edges,
/// zero diagonal), mu holds intercepts, a = log alpha holds log noise scales.
struct ConditionParameters {
  Eigen::MatrixXd b;
  Eigen::VectorXd mu;
  Eigen::VectorXd a;

  static ConditionParameters zero(int d);
  int dimension() const { return static_cast<int>(mu.size()); }
  Eigen::VectorXd alpha() const { return a.array().exp(); }

  /// Throws if b has entries outside the graph's edge mask or on the diagonal.
  void check_mask(const Graph& g) const;
};

/// Per-condition parameters spanning all K conditions of a study.
struct ParameterSet {
  std::vector<ConditionParameters> per_condition;

  int num_conditions() const { return static_cast<int>(per_condition.size()); }
  int dimension() const { return per_condition.empty() ? 0 : per_condition[0].dimension(); }
};

/// Free coordinates per condition: masked b entries in column-major
/// (target-variable-major) order, then mu, then a. Conditions concatenate in
/// order. This layout is shared by optimizers, gradients, and Hessians.
int num_free_per_condition(const Graph& g);

/// Start offset of each b column's masked entries within one condition's
/// packed slice; entry d is the total masked entry count.
std::vector<int> masked_column_offsets(const Graph& g);

Eigen::VectorXd pack_parameters(const ParameterSet& params, const Graph& g);
ParameterSet unpack_parameters(const Eigen::VectorXd& v, const Graph& g, int num_conditions);

}  // namespace ccdeq

#endif  // CCDEQ_PARAMETERS_HPP_
