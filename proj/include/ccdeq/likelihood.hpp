#ifndef CCDEQ_LIKELIHOOD_HPP_
#define CCDEQ_LIKELIHOOD_HPP_

#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "ccdeq/graph.hpp"
#include "ccdeq/noise.hpp"
#include "ccdeq/parameters.hpp"

namespace ccdeq {

/// One data matrix (N_c x D) per experimental condition.
using Dataset = std::vector<Eigen::MatrixXd>;

/// Pivoted LU of I - B, kept around so gradient evaluation can reuse it.
struct ImBFactorization {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  double log_abs_det = 0.0;
};

/// log |det(I - B)|. Throws SingularMatrix when the smallest pivot falls below
/// 1e-12 of the largest (the eps -> x map is not invertible there).
ImBFactorization factorize_ImB(const Eigen::MatrixXd& b);
double log_abs_det_ImB(const Eigen::MatrixXd& b);

/// Standardized disturbances E with E(n,i) = ((X(I-B))(n,i) - mu_i) / alpha_i.
Eigen::MatrixXd residuals(const Eigen::MatrixXd& x, const ConditionParameters& p);

/// Multi-condition negative log-likelihood:
///   sum_c [ -N_c log|det(I-B^c)| + sum_{n,i} (noise_nll(E^c(n,i)) + a_i^c) ].
double neg_log_likelihood(const Dataset& data, const ParameterSet& params, NoiseModel model);

/// Analytic gradient over the free coordinates (packed layout of
/// pack_parameters). Optionally also returns the nll value.
Eigen::VectorXd nll_gradient(const Dataset& data, const ParameterSet& params, const Graph& g,
                             NoiseModel model, double* value = nullptr);

}  // namespace ccdeq

#endif  // CCDEQ_LIKELIHOOD_HPP_
