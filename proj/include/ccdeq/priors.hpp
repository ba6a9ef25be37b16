#ifndef CCDEQ_PRIORS_HPP_
#define CCDEQ_PRIORS_HPP_

#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ccdeq/design.hpp"
#include "ccdeq/graph.hpp"
#include "ccdeq/parameters.hpp"

namespace ccdeq {

/// Hard-equality prior: conditions sharing a mechanism label carry identical
/// parameters; slopes get N(0, lambda^2), mu and a get N(0, tau^2) with tau
/// large-but-finite so evidence comparisons stay well-defined.
struct LinearPriorConfig {
  double lambda = 10.0;
  double tau = 1e3;
};

/// Soft-coupling prior: each mechanism is a zero-mean GP with an isotropic
/// squared exponential kernel over (parent values, eps); the per-condition
/// linearizations enter as function-value and derivative pseudo-observations.
struct GpPriorConfig {
  double sigma_in = 10.0;
  double sigma_out = 10.0;
  double sigma_jitter = 0.01;
};

using PriorConfig = std::variant<LinearPriorConfig, GpPriorConfig>;

/// Bijection between the reduced vector {Theta_i^m} and the tied full
/// ParameterSet (condition c uses block (i, m_ic)). Reduced layout: compounds
/// in order, labels 1..M_i in order; within a block parent slopes in index
/// order, then mu, then a.
class TyingMap {
 public:
  struct Block {
    int compound = 0;
    int label = 0;
    int offset = 0;               // start in the reduced vector
    std::vector<int> parents;     // ascending
    std::vector<int> conditions;  // conditions using this block, ascending
  };

  TyingMap(const Graph& g, const MechanismLabeling& labeling);

  int reduced_size() const { return reduced_size_; }
  int num_conditions() const { return num_conditions_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(int compound, int label) const;

  /// Reduced vector -> tied ParameterSet.
  ParameterSet expand(const Eigen::VectorXd& reduced) const;
  /// Adjoint of expand: accumulates a packed full-layout gradient into
  /// reduced coordinates.
  Eigen::VectorXd contract_gradient(const Eigen::VectorXd& full_gradient) const;

 private:
  int d_;
  int num_conditions_;
  int reduced_size_;
  std::vector<Block> blocks_;
  std::vector<int> block_index_;  // (i, c) -> index into blocks_
  Graph graph_;
};

TyingMap free_parameter_map(const Graph& g, const MechanismLabeling& labeling);

/// Negative log-density of the reduced vector under the linear mechanisms
/// prior; the gradient (if requested) is accumulated into *grad.
double linear_prior_neg_logpdf(const Eigen::VectorXd& reduced, const TyingMap& map,
                               const LinearPriorConfig& cfg, Eigen::VectorXd* grad = nullptr);

/// One linearized mechanism viewed as a GP observation: the function value
/// and gradient of f at its own linearization point (parent means, eps = 0).
struct PseudoDatum {
  Eigen::VectorXd location;  // (parent means..., 0)
  double value = 0.0;        // mu + sum_p b_p * mean_p
  Eigen::VectorXd slopes;    // (b_parents..., alpha)
};

/// Pseudo-data for compound `i`, label `m`: one datum per condition with that
/// label. condition_means[c] holds the empirical column means of condition c.
std::vector<PseudoDatum> build_pseudodata(const ParameterSet& params,
                                          const std::vector<Eigen::VectorXd>& condition_means,
                                          const Graph& g, const MechanismLabeling& labeling,
                                          int compound, int label);

/// Squared-exponential covariance blocks between a function value / gradient
/// at u and at u2 (Solak-style derivative observations).
struct KernelBlock {
  double value_value = 0.0;
  Eigen::VectorXd value_slope;  // cov(f(u), df(u2)/du2_j)
  Eigen::VectorXd slope_value;  // cov(df(u)/du_i, f(u2))
  Eigen::MatrixXd slope_slope;  // cov(df(u)/du_i, df(u2)/du2_j)
};

KernelBlock gp_kernel_block(const Eigen::VectorXd& u, const Eigen::VectorXd& u2,
                            const GpPriorConfig& cfg);

/// Gradient of a GP block's negative log-density with respect to one
/// pseudo-datum's underlying coordinates (b slopes, mu, a = log alpha).
struct PseudoDatumGradient {
  Eigen::VectorXd b;
  double mu = 0.0;
  double a = 0.0;
};

/// Covariance structure of one (compound, label) block. Locations are fixed by
/// the data, so the factorization is computed once and reused across
/// parameter values.
class GpBlock {
 public:
  GpBlock(std::vector<Eigen::VectorXd> locations, const GpPriorConfig& cfg);

  int num_data() const { return static_cast<int>(locations_.size()); }
  int input_dim() const { return static_cast<int>(locations_.front().size()); }
  int stacked_size() const { return ny_; }

  /// Stacks (values..., slope vectors...) in the documented order.
  Eigen::VectorXd stack(const std::vector<PseudoDatum>& data) const;

  /// -log N(y; 0, Sigma) without the alpha->a Jacobian term.
  double neg_logpdf(const Eigen::VectorXd& y, Eigen::VectorXd* grad_y = nullptr) const;

  const std::vector<Eigen::VectorXd>& locations() const { return locations_; }

 private:
  std::vector<Eigen::VectorXd> locations_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
  int ny_ = 0;
};

/// Block density against a prebuilt covariance (locations must match the ones
/// the block was built from). Includes the -sum_c a_c Jacobian of the
/// alpha -> a reparameterization.
double gp_block_neg_logpdf(const GpBlock& block, const std::vector<PseudoDatum>& data,
                           std::vector<PseudoDatumGradient>* grad = nullptr);

/// Negative log-density of one block of pseudo-data, including the -sum_c a_c
/// Jacobian of the alpha -> a reparameterization. Throws NumericalBreakdown
/// when the jittered covariance is not positive definite.
double gp_prior_neg_logpdf(const std::vector<PseudoDatum>& data, const GpPriorConfig& cfg,
                           std::vector<PseudoDatumGradient>* grad = nullptr);

}  // namespace ccdeq

#endif  // CCDEQ_PRIORS_HPP_
