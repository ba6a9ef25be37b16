#include "ccdeq/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "ccdeq/errors.hpp"
#include "ccdeq/lbfgs.hpp"
#include "ccdeq/rng.hpp"

namespace ccdeq {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

std::vector<Eigen::VectorXd> column_means(const Dataset& data, int d) {
  std::vector<Eigen::VectorXd> means;
  means.reserve(data.size());
  for (const auto& x : data) {
    if (x.rows() == 0) {
      means.push_back(Eigen::VectorXd::Zero(d));
    } else {
      means.push_back(x.colwise().mean().transpose());
    }
  }
  return means;
}

struct BlockInit {
  Eigen::VectorXd b;
  double mu = 0.0;
  double a = 0.0;
};

/// Ridge regression of compound i on its parents, rows pooled over the
/// block's conditions.
BlockInit ridge_block_init(const TyingMap::Block& blk, const Dataset& data) {
  const int np = static_cast<int>(blk.parents.size());
  BlockInit init;
  init.b = Eigen::VectorXd::Zero(np);

  Eigen::Index n_total = 0;
  for (int c : blk.conditions) n_total += data[c].rows();
  if (n_total == 0) return init;

  Eigen::MatrixXd z(n_total, np);
  Eigen::VectorXd y(n_total);
  Eigen::Index row = 0;
  for (int c : blk.conditions) {
    const auto& x = data[c];
    for (int s = 0; s < np; ++s) z.block(row, s, x.rows(), 1) = x.col(blk.parents[s]);
    y.segment(row, x.rows()) = x.col(blk.compound);
    row += x.rows();
  }

  const double ybar = y.mean();
  Eigen::VectorXd resid = y.array() - ybar;
  if (np > 0) {
    const Eigen::RowVectorXd zbar = z.colwise().mean();
    const Eigen::MatrixXd zc = z.rowwise() - zbar;
    const Eigen::VectorXd yc = y.array() - ybar;
    Eigen::MatrixXd gram = zc.transpose() * zc;
    gram.diagonal().array() += 1e-3 * static_cast<double>(n_total) + 1e-9;
    init.b = gram.ldlt().solve(zc.transpose() * yc);
    init.mu = ybar - init.b.dot(zbar.transpose());
    resid = yc - zc * init.b;
  } else {
    init.mu = ybar;
  }
  const double sd = std::sqrt(resid.squaredNorm() / static_cast<double>(n_total));
  init.a = std::log(std::max(sd, 1e-3));
  return init;
}

}  // namespace

PosteriorObjective::PosteriorObjective(const Graph& g, const MechanismLabeling& labeling,
                                       const Dataset& data, const PriorConfig& prior,
                                       NoiseModel noise)
    : graph_(g), labeling_(labeling), data_(&data), prior_(prior), noise_(noise) {
  const int d = g.num_compounds();
  if (labeling.num_compounds() != d || static_cast<int>(data.size()) != labeling.num_conditions())
    throw std::invalid_argument("PosteriorObjective: shape mismatch");
  for (const auto& x : data) {
    if (x.cols() != d) throw std::invalid_argument("PosteriorObjective: data column mismatch");
  }
  condition_means_ = column_means(data, d);
  col_offset_ = masked_column_offsets(g);

  tying_.emplace(g, labeling);  // block structure; also the linear-prior parameterization
  if (std::holds_alternative<LinearPriorConfig>(prior_)) {
    dimension_ = tying_->reduced_size();
  } else {
    dimension_ = num_free_per_condition(g) * labeling.num_conditions();
    const auto& cfg = std::get<GpPriorConfig>(prior_);
    for (const auto& blk : tying_->blocks()) {
      std::vector<Eigen::VectorXd> locations;
      locations.reserve(blk.conditions.size());
      for (int c : blk.conditions) {
        Eigen::VectorXd loc = Eigen::VectorXd::Zero(blk.parents.size() + 1);
        for (std::size_t s = 0; s < blk.parents.size(); ++s)
          loc[s] = condition_means_[c][blk.parents[s]];
        locations.push_back(std::move(loc));
      }
      gp_blocks_.push_back(
          {GpBlock(std::move(locations), cfg), blk.compound, blk.label, blk.conditions, blk.parents});
    }
  }
}

ParameterSet PosteriorObjective::expand(const Eigen::VectorXd& v) const {
  if (std::holds_alternative<LinearPriorConfig>(prior_)) return tying_->expand(v);
  return unpack_parameters(v, graph_, labeling_.num_conditions());
}

double PosteriorObjective::value_and_gradient(const Eigen::VectorXd& v, Eigen::VectorXd& grad) const {
  if (v.size() != dimension_) throw std::invalid_argument("PosteriorObjective: vector size mismatch");
  grad.resize(dimension_);
  const ParameterSet params = expand(v);

  double value = 0.0;
  Eigen::VectorXd full_grad;
  try {
    full_grad = nll_gradient(*data_, params, graph_, noise_, &value);
  } catch (const SingularMatrix&) {
    grad.setConstant(std::numeric_limits<double>::quiet_NaN());
    return std::numeric_limits<double>::infinity();
  }

  if (const auto* linear = std::get_if<LinearPriorConfig>(&prior_)) {
    grad = tying_->contract_gradient(full_grad);
    value += linear_prior_neg_logpdf(v, *tying_, *linear, &grad);
    return value;
  }

  grad = full_grad;
  const int d = graph_.num_compounds();
  const int num_edges = graph_.edge_count();
  const int per = num_free_per_condition(graph_);
  std::vector<PseudoDatumGradient> block_grad;
  for (const auto& eval : gp_blocks_) {
    const std::vector<PseudoDatum> pseudo = build_pseudodata(
        params, condition_means_, graph_, labeling_, eval.compound, eval.label);
    value += gp_block_neg_logpdf(eval.block, pseudo, &block_grad);
    for (std::size_t r = 0; r < eval.conditions.size(); ++r) {
      const Eigen::Index base = static_cast<Eigen::Index>(eval.conditions[r]) * per;
      const auto& bg = block_grad[r];
      for (std::size_t s = 0; s < eval.parents.size(); ++s)
        grad[base + col_offset_[eval.compound] + s] += bg.b[s];
      grad[base + num_edges + eval.compound] += bg.mu;
      grad[base + num_edges + d + eval.compound] += bg.a;
    }
  }
  return value;
}

Eigen::VectorXd PosteriorObjective::initial_vector() const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dimension_);
  const bool reduced = std::holds_alternative<LinearPriorConfig>(prior_);
  const int d = graph_.num_compounds();
  const int num_edges = graph_.edge_count();
  const int per = num_free_per_condition(graph_);

  for (const auto& blk : tying_->blocks()) {
    const BlockInit init = ridge_block_init(blk, *data_);
    const int np = static_cast<int>(blk.parents.size());
    if (reduced) {
      for (int s = 0; s < np; ++s) v[blk.offset + s] = init.b[s];
      v[blk.offset + np] = init.mu;
      v[blk.offset + np + 1] = init.a;
    } else {
      for (int c : blk.conditions) {
        const Eigen::Index base = static_cast<Eigen::Index>(c) * per;
        for (int s = 0; s < np; ++s) v[base + col_offset_[blk.compound] + s] = init.b[s];
        v[base + num_edges + blk.compound] = init.mu;
        v[base + num_edges + d + blk.compound] = init.a;
      }
    }
  }
  return v;
}

double neg_log_posterior(const Eigen::VectorXd& free_vector, const Graph& g,
                         const MechanismLabeling& labeling, const Dataset& data,
                         const PriorConfig& prior, NoiseModel noise, Eigen::VectorXd* grad) {
  const PosteriorObjective objective(g, labeling, data, prior, noise);
  Eigen::VectorXd local;
  const double value = objective.value_and_gradient(free_vector, grad ? *grad : local);
  return value;
}

namespace {

std::vector<int> free_indices(int dimension, const std::vector<std::pair<int, double>>& fixed) {
  std::vector<bool> is_fixed(dimension, false);
  for (const auto& [idx, value] : fixed) {
    if (idx < 0 || idx >= dimension) throw std::out_of_range("fixed coordinate out of range");
    is_fixed[idx] = true;
  }
  std::vector<int> out;
  out.reserve(dimension);
  for (int i = 0; i < dimension; ++i) {
    if (!is_fixed[i]) out.push_back(i);
  }
  return out;
}

}  // namespace

FitResult map_fit(const PosteriorObjective& objective, const FitOptions& opts) {
  if (opts.restarts < 1) throw std::invalid_argument("map_fit: restarts must be >= 1");
  const int dim = objective.dimension();
  const std::vector<int> free_idx = free_indices(dim, opts.fixed_coordinates);

  Eigen::VectorXd base_init = objective.initial_vector();
  for (const auto& [idx, value] : opts.fixed_coordinates) base_init[idx] = value;

  opt::Options opt_options;
  opt_options.max_iterations = opts.max_iterations;
  opt_options.gradient_tolerance = opts.gradient_tolerance;

  Eigen::VectorXd x_full = base_init;
  Eigen::VectorXd grad_full(dim);
  const auto sub_objective = [&](const Eigen::VectorXd& xs, Eigen::VectorXd& gs) {
    for (std::size_t k = 0; k < free_idx.size(); ++k) x_full[free_idx[k]] = xs[k];
    const double value = objective.value_and_gradient(x_full, grad_full);
    gs.resize(static_cast<Eigen::Index>(free_idx.size()));
    for (std::size_t k = 0; k < free_idx.size(); ++k) gs[k] = grad_full[free_idx[k]];
    return value;
  };

  std::optional<opt::Result> best;
  int failures = 0;
  for (int r = 0; r < opts.restarts; ++r) {
    Eigen::VectorXd start = base_init;
    if (r > 0) {
      auto rng = make_rng(substream(opts.seed, static_cast<std::uint64_t>(r)));
      std::normal_distribution<double> noise(0.0, 0.1);
      for (int i = 0; i < dim; ++i) {
        const double delta = noise(rng);
        start[i] += delta;
      }
      for (const auto& [idx, value] : opts.fixed_coordinates) start[idx] = value;
    }
    Eigen::VectorXd start_sub(static_cast<Eigen::Index>(free_idx.size()));
    for (std::size_t k = 0; k < free_idx.size(); ++k) start_sub[k] = start[free_idx[k]];
    x_full = start;
    try {
      opt::Result res = opt::minimize(sub_objective, start_sub, opt_options);
      if (!best || res.value < best->value) best = std::move(res);
    } catch (const std::domain_error&) {
      ++failures;
    }
  }
  if (!best) throw AllRestartsFailed("map_fit: all " + std::to_string(failures) +
                                     " restarts were infeasible at their starting points");

  FitResult out;
  out.free_vector = base_init;
  for (std::size_t k = 0; k < free_idx.size(); ++k) out.free_vector[free_idx[k]] = best->x[k];
  out.params = objective.expand(out.free_vector);
  out.neg_log_posterior = best->value;
  out.converged = best->converged;
  out.gradient_norm_at_solution =
      best->gradient.size() == 0 ? 0.0 : best->gradient.lpNorm<Eigen::Infinity>();
  return out;
}

FitResult map_fit(const Graph& g, const Dataset& data, const ExperimentDesign& design,
                  const PriorConfig& prior, NoiseModel noise, const FitOptions& opts) {
  const MechanismLabeling labeling = derive_mechanism_labels(g, design);
  const PosteriorObjective objective(g, labeling, data, prior, noise);
  return map_fit(objective, opts);
}

EvidenceResult laplace_log_evidence(const Graph& g, const Dataset& data,
                                    const ExperimentDesign& design, const PriorConfig& prior,
                                    NoiseModel noise, const FitOptions& opts) {
  const MechanismLabeling labeling = derive_mechanism_labels(g, design);
  const PosteriorObjective objective(g, labeling, data, prior, noise);
  FitResult fit = map_fit(objective, opts);

  const std::vector<int> free_idx = free_indices(objective.dimension(), opts.fixed_coordinates);
  const int d_free = static_cast<int>(free_idx.size());

  EvidenceResult out;
  out.parameter_count = d_free;

  // Hessian of U at the MAP by central differences of the analytic gradient.
  Eigen::MatrixXd hessian(d_free, d_free);
  Eigen::VectorXd x = fit.free_vector;
  Eigen::VectorXd grad_plus(objective.dimension());
  Eigen::VectorXd grad_minus(objective.dimension());
  for (int k = 0; k < d_free; ++k) {
    const int idx = free_idx[k];
    double h = 1e-4 * std::max(1.0, std::abs(x[idx]));
    bool filled = false;
    for (int attempt = 0; attempt < 5 && !filled; ++attempt) {
      const double x0 = x[idx];
      x[idx] = x0 + h;
      const double fp = objective.value_and_gradient(x, grad_plus);
      x[idx] = x0 - h;
      const double fm = objective.value_and_gradient(x, grad_minus);
      x[idx] = x0;
      if (std::isfinite(fp) && std::isfinite(fm)) {
        for (int r = 0; r < d_free; ++r)
          hessian(r, k) = (grad_plus[free_idx[r]] - grad_minus[free_idx[r]]) / (2.0 * h);
        filled = true;
      } else {
        h *= 0.1;  // MAP sits near the singular set; shrink the stencil
      }
    }
    if (!filled)
      throw NumericalBreakdown("laplace_log_evidence: gradient not finite near the MAP");
  }

  const double scale = hessian.lpNorm<Eigen::Infinity>();
  if (scale > 0.0 && d_free > 0)
    out.hessian_asymmetry = (hessian - hessian.transpose()).lpNorm<Eigen::Infinity>() / scale;
  hessian = 0.5 * (hessian + hessian.transpose()).eval();

  double log_det = 0.0;
  if (d_free > 0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(hessian);
    if (eigen.info() != Eigen::Success)
      throw NumericalBreakdown("laplace_log_evidence: Hessian eigendecomposition failed");
    const Eigen::VectorXd& evals = eigen.eigenvalues();
    const double largest = evals[d_free - 1];
    const double floor = largest > 0.0 ? 1e-8 * largest : 1e-8;
    for (int i = 0; i < d_free; ++i) {
      if (evals[i] < floor) out.hessian_floored = true;
      log_det += std::log(std::max(evals[i], floor));
    }
  }

  out.map = std::move(fit);
  out.hessian_log_det = log_det;
  out.log_evidence =
      -out.map.neg_log_posterior + 0.5 * d_free * kLog2Pi - 0.5 * log_det;
  return out;
}

}  // namespace ccdeq
