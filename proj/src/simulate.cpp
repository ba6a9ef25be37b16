#include "ccdeq/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "ccdeq/errors.hpp"
#include "ccdeq/rng.hpp"

namespace ccdeq {

namespace {
constexpr double kPi = 3.141592653589793;
constexpr double kAbundanceClampLogScale = -4.605170185988091;  // log(0.01)
}  // namespace

double supergaussian_cdf(double e) { return (2.0 / kPi) * std::atan(std::exp(e)); }

double supergaussian_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("supergaussian_quantile: u in (0,1)");
  return std::log(std::tan(kPi * u / 2.0));
}

Eigen::MatrixXd sample_disturbances(int n, int d, NoiseModel model, std::uint64_t seed) {
  Eigen::MatrixXd eps(n, d);
  auto rng = make_rng(seed);
  if (model == NoiseModel::Gaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < d; ++c) eps(r, c) = normal(rng);
    }
  } else {
    std::uniform_real_distribution<double> uniform(1e-15, 1.0 - 1e-15);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < d; ++c) eps(r, c) = supergaussian_quantile(uniform(rng));
    }
  }
  return eps;
}

Eigen::MatrixXd solve_equilibrium(const ConditionParameters& p, const Eigen::MatrixXd& eps) {
  const int d = p.dimension();
  if (eps.cols() != d) throw std::invalid_argument("solve_equilibrium: column mismatch");
  const ImBFactorization f = factorize_ImB(p.b);
  const Eigen::MatrixXd imb_inv = f.lu.inverse();
  Eigen::MatrixXd rhs = eps * p.alpha().asDiagonal();
  rhs.rowwise() += p.mu.transpose();
  return rhs * imb_inv;
}

namespace {

void perturb_mechanism(ConditionParameters& p, const Graph& g, int compound, double magnitude,
                       std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, magnitude);
  for (int parent : g.parents(compound)) p.b(parent, compound) += normal(rng);
  p.mu[compound] += normal(rng);
  p.a[compound] += normal(rng);
}

}  // namespace

ConditionParameters apply_intervention(const GroundTruthModel& model, const Intervention& iv,
                                       double magnitude, std::uint64_t seed) {
  iv.validate(model.graph.num_compounds());
  if (magnitude <= 0.0) throw std::invalid_argument("apply_intervention: magnitude must be positive");
  ConditionParameters p = model.base;
  switch (iv.kind) {
    case InterventionKind::Observational:
      break;
    case InterventionKind::Abundance: {
      const int t = iv.targets[0];
      p.b.col(t).setZero();
      auto rng = make_rng(substream(seed, static_cast<std::uint64_t>(t)));
      std::normal_distribution<double> normal(0.0, 1.0);
      const double z = normal(rng);
      const bool positive = (rng() & 1u) != 0;
      // forced level kept away from zero so the clamp is informative
      p.mu[t] = (positive ? 1.0 : -1.0) * magnitude * (1.0 + 0.25 * std::abs(z));
      p.a[t] = kAbundanceClampLogScale;
      break;
    }
    case InterventionKind::Activity: {
      for (int child : model.graph.children(iv.targets[0]))
        perturb_mechanism(p, model.graph, child, magnitude,
                          substream(seed, static_cast<std::uint64_t>(child)));
      break;
    }
    case InterventionKind::MechanismSet: {
      for (int t : iv.targets)
        perturb_mechanism(p, model.graph, t, magnitude, substream(seed, static_cast<std::uint64_t>(t)));
      break;
    }
  }
  return p;
}

SimulatedStudy generate_study(const GroundTruthModel& truth, const ExperimentDesign& design,
                              int n_per_condition, double magnitude, std::uint64_t seed) {
  const int d = truth.graph.num_compounds();
  design.validate(d);
  if (n_per_condition < 0) throw std::invalid_argument("generate_study: negative sample count");
  truth.base.check_mask(truth.graph);
  factorize_ImB(truth.base.b);  // unique-equilibrium invariant of the truth itself

  SimulatedStudy study{design, {}, {}, truth};
  const int k = design.num_conditions();
  for (int c = 0; c < k; ++c) {
    const Eigen::MatrixXd eps =
        sample_disturbances(n_per_condition, d, truth.noise, substream(seed, 0x0E5Eu, c));
    bool solved = false;
    for (int attempt = 0; attempt < 10 && !solved; ++attempt) {
      const ConditionParameters p = apply_intervention(
          truth, design.conditions[c], magnitude,
          substream(seed, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(attempt)));
      try {
        study.data.push_back(solve_equilibrium(p, eps));
        study.per_condition.push_back(p);
        solved = true;
      } catch (const SingularMatrix&) {
        if (attempt == 9) throw;
      }
    }
  }
  return study;
}

}  // namespace ccdeq
