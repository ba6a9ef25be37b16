#ifndef CCDEQ_INFERENCE_HPP_
#define CCDEQ_INFERENCE_HPP_

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ccdeq/design.hpp"
#include "ccdeq/graph.hpp"
#include "ccdeq/likelihood.hpp"
#include "ccdeq/priors.hpp"

namespace ccdeq {

struct FitOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-4;  // sup-norm stop
  int restarts = 1;
  std::uint64_t seed = 0;
  /// Coordinates of the prior's free vector held at fixed values during the
  /// fit (and excluded from the Laplace Hessian).
  std::vector<std::pair<int, double>> fixed_coordinates;
};

struct FitResult {
  ParameterSet params;
  double neg_log_posterior = 0.0;
  bool converged = false;
  double gradient_norm_at_solution = 0.0;
  /// MAP point in the prior's free-vector coordinates (reduced for the linear
  /// prior, full packed layout for the GP prior), fixed coordinates included.
  Eigen::VectorXd free_vector;
};

struct EvidenceResult {
  double log_evidence = 0.0;
  FitResult map;
  double hessian_log_det = 0.0;
  int parameter_count = 0;
  /// True when eigenvalue flooring was needed to make the Hessian positive
  /// definite; such optima are unstable and the search deprioritizes them.
  bool hessian_floored = false;
  /// Relative sup-norm asymmetry of the finite-difference Hessian before
  /// symmetrization.
  double hessian_asymmetry = 0.0;
};

/// Negative log-posterior U(v) = nll + prior over a prior-dependent free
/// vector: the tied reduced vector under the linear prior, the full packed
/// per-condition vector under the GP prior. A singular I - B yields +inf with
/// a NaN-flagged gradient so optimizers can backtrack.
class PosteriorObjective {
 public:
  PosteriorObjective(const Graph& g, const MechanismLabeling& labeling, const Dataset& data,
                     const PriorConfig& prior, NoiseModel noise);

  int dimension() const { return dimension_; }
  const Graph& graph() const { return graph_; }
  const MechanismLabeling& labeling() const { return labeling_; }
  const TyingMap* tying() const { return tying_ ? &*tying_ : nullptr; }

  double value_and_gradient(const Eigen::VectorXd& v, Eigen::VectorXd& grad) const;
  ParameterSet expand(const Eigen::VectorXd& v) const;

  /// Ridge-regression starting point (per mechanism block, rows pooled over
  /// the block's conditions).
  Eigen::VectorXd initial_vector() const;

 private:
  struct GpBlockEval {
    GpBlock block;
    int compound;
    int label;
    std::vector<int> conditions;
    std::vector<int> parents;
  };

  Graph graph_;
  MechanismLabeling labeling_;
  const Dataset* data_;
  PriorConfig prior_;
  NoiseModel noise_;
  int dimension_ = 0;
  std::optional<TyingMap> tying_;
  std::vector<GpBlockEval> gp_blocks_;
  std::vector<Eigen::VectorXd> condition_means_;
  std::vector<int> col_offset_;
};

double neg_log_posterior(const Eigen::VectorXd& free_vector, const Graph& g,
                         const MechanismLabeling& labeling, const Dataset& data,
                         const PriorConfig& prior, NoiseModel noise,
                         Eigen::VectorXd* grad = nullptr);

/// Best-of-restarts quasi-Newton MAP fit. Deterministic given the seed;
/// restart r perturbs the ridge initialization with seeded Gaussian noise of
/// scale 0.1. Throws AllRestartsFailed when every restart is infeasible at its
/// starting point.
FitResult map_fit(const PosteriorObjective& objective, const FitOptions& opts);
FitResult map_fit(const Graph& g, const Dataset& data, const ExperimentDesign& design,
                  const PriorConfig& prior, NoiseModel noise, const FitOptions& opts);

/// Laplace approximation of the log marginal likelihood:
///   log_evidence = -U(theta*) + (d/2) log(2 pi) - 1/2 log det H,
/// H computed by central finite differences of the analytic gradient
/// (per-coordinate step 1e-4 * max(1, |theta|), symmetrized, eigenvalues
/// floored at 1e-8 of the largest when needed).
EvidenceResult laplace_log_evidence(const Graph& g, const Dataset& data,
                                    const ExperimentDesign& design, const PriorConfig& prior,
                                    NoiseModel noise, const FitOptions& opts);

}  // namespace ccdeq

#endif  // CCDEQ_INFERENCE_HPP_
