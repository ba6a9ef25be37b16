#ifndef CCDEQ_SIMULATE_HPP_
#define CCDEQ_SIMULATE_HPP_

#include <cstdint>

#include <Eigen/Core>

#include "ccdeq/design.hpp"
#include "ccdeq/graph.hpp"
#include "ccdeq/likelihood.hpp"
#include "ccdeq/noise.hpp"
#include "ccdeq/parameters.hpp"

namespace ccdeq {

/// Data-generating cyclic linear SCM: observational mechanism set plus a
/// disturbance model. det(I - B) must be nonzero so a unique equilibrium
/// exists.
struct GroundTruthModel {
  Graph graph;
  ConditionParameters base;
  NoiseModel noise = NoiseModel::Gaussian;
};

struct SimulatedStudy {
  ExperimentDesign design;
  std::vector<ConditionParameters> per_condition;
  Dataset data;
  GroundTruthModel truth;
};

/// CDF of the 1/(pi cosh e) density: (2/pi) atan(exp(e)).
double supergaussian_cdf(double e);
/// Inverse CDF: log(tan(pi u / 2)).
double supergaussian_quantile(double u);

/// N x D i.i.d. draws from the unit disturbance density; row-major draw order.
Eigen::MatrixXd sample_disturbances(int n, int d, NoiseModel model, std::uint64_t seed);

/// Solves X(I - B) = 1 mu^T + E diag(alpha) row by row:
/// x = (I - B)^{-T} (mu + alpha .* eps). Throws SingularMatrix.
Eigen::MatrixXd solve_equilibrium(const ConditionParameters& p, const Eigen::MatrixXd& eps);

/// Derives the condition's mechanism set from the base model.
/// Observational: unchanged. Abundance on i: do-style surgery -- incoming
/// slopes of i zeroed, mu_i forced to a drawn level with |xi| >= magnitude,
/// a_i clamped to log(0.01). Activity on i: mu, a, and the masked incoming
/// slopes of every child of i perturbed by Gaussian noise of scale
/// `magnitude`, seeded per child. MechanismSet: the same perturbation applied
/// to each listed compound.
ConditionParameters apply_intervention(const GroundTruthModel& model, const Intervention& iv,
                                       double magnitude, std::uint64_t seed);

/// Applies each condition's intervention, draws disturbances, and solves the
/// equilibria. Deterministic given the seed. A perturbation that lands on a
/// singular I - B is resampled with a fresh sub-seed up to 10 times.
SimulatedStudy generate_study(const GroundTruthModel& truth, const ExperimentDesign& design,
                              int n_per_condition, double magnitude, std::uint64_t seed);

}  // namespace ccdeq

#endif  // CCDEQ_SIMULATE_HPP_
