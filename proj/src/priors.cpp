#include "ccdeq/priors.hpp"

#include <cmath>
#include <stdexcept>

#include "ccdeq/errors.hpp"

namespace ccdeq {

namespace {
constexpr double kLogSqrt2Pi = 0.9189385332046727;
}

TyingMap::TyingMap(const Graph& g, const MechanismLabeling& labeling)
    : d_(g.num_compounds()),
      num_conditions_(labeling.num_conditions()),
      reduced_size_(0),
      graph_(g) {
  if (labeling.num_compounds() != d_) throw std::invalid_argument("TyingMap: labeling/graph mismatch");
  block_index_.assign(static_cast<std::size_t>(d_) * num_conditions_, -1);
  for (int i = 0; i < d_; ++i) {
    const std::vector<int> parents = g.parents(i);
    const int m_count = labeling.counts(i);
    const int first_block = static_cast<int>(blocks_.size());
    for (int m = 1; m <= m_count; ++m) {
      Block blk;
      blk.compound = i;
      blk.label = m;
      blk.offset = reduced_size_;
      blk.parents = parents;
      blocks_.push_back(std::move(blk));
      reduced_size_ += static_cast<int>(parents.size()) + 2;
    }
    for (int c = 0; c < num_conditions_; ++c) {
      const int m = labeling.labels(i, c);
      if (m < 1 || m > m_count) throw std::invalid_argument("TyingMap: label out of range");
      const int bi = first_block + m - 1;
      blocks_[bi].conditions.push_back(c);
      block_index_[static_cast<std::size_t>(i) * num_conditions_ + c] = bi;
    }
  }
  for (const auto& blk : blocks_) {
    if (blk.conditions.empty()) throw std::invalid_argument("TyingMap: unused mechanism label");
  }
}

const TyingMap::Block& TyingMap::block(int compound, int label) const {
  for (const auto& blk : blocks_) {
    if (blk.compound == compound && blk.label == label) return blk;
  }
  throw std::out_of_range("TyingMap: no such block");
}

ParameterSet TyingMap::expand(const Eigen::VectorXd& reduced) const {
  if (reduced.size() != reduced_size_) throw std::invalid_argument("TyingMap: reduced size mismatch");
  ParameterSet out;
  out.per_condition.assign(num_conditions_, ConditionParameters::zero(d_));
  for (const auto& blk : blocks_) {
    const int np = static_cast<int>(blk.parents.size());
    for (int c : blk.conditions) {
      auto& p = out.per_condition[c];
      for (int s = 0; s < np; ++s) p.b(blk.parents[s], blk.compound) = reduced[blk.offset + s];
      p.mu[blk.compound] = reduced[blk.offset + np];
      p.a[blk.compound] = reduced[blk.offset + np + 1];
    }
  }
  return out;
}

Eigen::VectorXd TyingMap::contract_gradient(const Eigen::VectorXd& full_gradient) const {
  const int per = num_free_per_condition(graph_);
  if (full_gradient.size() != static_cast<Eigen::Index>(per) * num_conditions_)
    throw std::invalid_argument("TyingMap: full gradient size mismatch");
  const int d = d_;
  const int num_edges = graph_.edge_count();
  const std::vector<int> col_offset = masked_column_offsets(graph_);

  Eigen::VectorXd reduced = Eigen::VectorXd::Zero(reduced_size_);
  for (const auto& blk : blocks_) {
    const int np = static_cast<int>(blk.parents.size());
    for (int c : blk.conditions) {
      const Eigen::Index base = static_cast<Eigen::Index>(c) * per;
      for (int s = 0; s < np; ++s)
        reduced[blk.offset + s] += full_gradient[base + col_offset[blk.compound] + s];
      reduced[blk.offset + np] += full_gradient[base + num_edges + blk.compound];
      reduced[blk.offset + np + 1] += full_gradient[base + num_edges + d + blk.compound];
    }
  }
  return reduced;
}

TyingMap free_parameter_map(const Graph& g, const MechanismLabeling& labeling) {
  return TyingMap(g, labeling);
}

double linear_prior_neg_logpdf(const Eigen::VectorXd& reduced, const TyingMap& map,
                               const LinearPriorConfig& cfg, Eigen::VectorXd* grad) {
  if (cfg.lambda <= 0.0 || cfg.tau <= 0.0)
    throw std::invalid_argument("linear prior: lambda and tau must be positive");
  const double inv_lambda2 = 1.0 / (cfg.lambda * cfg.lambda);
  const double inv_tau2 = 1.0 / (cfg.tau * cfg.tau);
  const double log_norm_slope = std::log(cfg.lambda) + kLogSqrt2Pi;
  const double log_norm_loc = std::log(cfg.tau) + kLogSqrt2Pi;

  double value = 0.0;
  for (const auto& blk : map.blocks()) {
    const int np = static_cast<int>(blk.parents.size());
    for (int s = 0; s < np; ++s) {
      const double b = reduced[blk.offset + s];
      value += 0.5 * b * b * inv_lambda2 + log_norm_slope;
      if (grad) (*grad)[blk.offset + s] += b * inv_lambda2;
    }
    const double mu = reduced[blk.offset + np];
    const double a = reduced[blk.offset + np + 1];
    value += 0.5 * (mu * mu + a * a) * inv_tau2 + 2.0 * log_norm_loc;
    if (grad) {
      (*grad)[blk.offset + np] += mu * inv_tau2;
      (*grad)[blk.offset + np + 1] += a * inv_tau2;
    }
  }
  return value;
}

std::vector<PseudoDatum> build_pseudodata(const ParameterSet& params,
                                          const std::vector<Eigen::VectorXd>& condition_means,
                                          const Graph& g, const MechanismLabeling& labeling,
                                          int compound, int label) {
  if (condition_means.size() != params.per_condition.size())
    throw std::invalid_argument("build_pseudodata: means/conditions mismatch");
  const std::vector<int> parents = g.parents(compound);
  const int np = static_cast<int>(parents.size());
  std::vector<PseudoDatum> out;
  for (int c = 0; c < labeling.num_conditions(); ++c) {
    if (labeling.labels(compound, c) != label) continue;
    const auto& p = params.per_condition[c];
    PseudoDatum datum;
    datum.location.setZero(np + 1);  // eps coordinate stays 0
    datum.slopes.resize(np + 1);
    double value = p.mu[compound];
    for (int s = 0; s < np; ++s) {
      const double mean = condition_means[c][parents[s]];
      datum.location[s] = mean;
      datum.slopes[s] = p.b(parents[s], compound);
      value += datum.slopes[s] * mean;
    }
    datum.slopes[np] = std::exp(p.a[compound]);
    datum.value = value;
    out.push_back(std::move(datum));
  }
  return out;
}

KernelBlock gp_kernel_block(const Eigen::VectorXd& u, const Eigen::VectorXd& u2,
                            const GpPriorConfig& cfg) {
  if (u.size() != u2.size()) throw std::invalid_argument("gp_kernel_block: dimension mismatch");
  const double inv_in2 = 1.0 / (cfg.sigma_in * cfg.sigma_in);
  const Eigen::VectorXd diff = u - u2;
  const double k = cfg.sigma_out * cfg.sigma_out * std::exp(-0.5 * diff.squaredNorm() * inv_in2);

  KernelBlock blk;
  blk.value_value = k;
  blk.value_slope = k * inv_in2 * diff;
  blk.slope_value = -k * inv_in2 * diff;
  blk.slope_slope =
      k * (inv_in2 * Eigen::MatrixXd::Identity(u.size(), u.size()) -
           (inv_in2 * inv_in2) * diff * diff.transpose());
  return blk;
}

GpBlock::GpBlock(std::vector<Eigen::VectorXd> locations, const GpPriorConfig& cfg)
    : locations_(std::move(locations)) {
  if (locations_.empty()) throw std::invalid_argument("GpBlock: need at least one pseudo-datum");
  if (cfg.sigma_in <= 0.0 || cfg.sigma_out <= 0.0 || cfg.sigma_jitter <= 0.0)
    throw std::invalid_argument("GpBlock: kernel scales must be positive");
  const int n = num_data();
  const int dim = input_dim();
  ny_ = n + n * dim;

  // Order: all function values (data order), then all slope vectors
  // (data order, coordinates in location order).
  Eigen::MatrixXd sigma(ny_, ny_);
  for (int r = 0; r < n; ++r) {
    for (int s = 0; s < n; ++s) {
      const KernelBlock blk = gp_kernel_block(locations_[r], locations_[s], cfg);
      sigma(r, s) = blk.value_value;
      sigma.block(r, n + s * dim, 1, dim) = blk.value_slope.transpose();
      sigma.block(n + r * dim, s, dim, 1) = blk.slope_value;
      sigma.block(n + r * dim, n + s * dim, dim, dim) = blk.slope_slope;
    }
  }
  sigma.diagonal().array() += cfg.sigma_jitter * cfg.sigma_jitter;

  llt_.compute(sigma);
  if (llt_.info() != Eigen::Success)
    throw NumericalBreakdown("GP prior covariance is not positive definite after jitter");
  log_det_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Eigen::VectorXd GpBlock::stack(const std::vector<PseudoDatum>& data) const {
  const int n = num_data();
  const int dim = input_dim();
  if (static_cast<int>(data.size()) != n) throw std::invalid_argument("GpBlock: datum count mismatch");
  Eigen::VectorXd y(ny_);
  for (int r = 0; r < n; ++r) {
    y[r] = data[r].value;
    y.segment(n + r * dim, dim) = data[r].slopes;
  }
  return y;
}

double GpBlock::neg_logpdf(const Eigen::VectorXd& y, Eigen::VectorXd* grad_y) const {
  const Eigen::VectorXd solved = llt_.solve(y);
  if (grad_y) *grad_y = solved;
  return 0.5 * y.dot(solved) + 0.5 * log_det_ + 0.5 * ny_ * 2.0 * kLogSqrt2Pi;
}

double gp_block_neg_logpdf(const GpBlock& block, const std::vector<PseudoDatum>& data,
                           std::vector<PseudoDatumGradient>* grad) {
  const Eigen::VectorXd y = block.stack(data);
  Eigen::VectorXd gy;
  double value = block.neg_logpdf(y, grad ? &gy : nullptr);

  // alpha -> a reparameterization: the density is over the noise slope alpha,
  // optimization runs in a = log alpha.
  const int n = block.num_data();
  const int dim = block.input_dim();
  for (int r = 0; r < n; ++r) value -= std::log(data[r].slopes[dim - 1]);

  if (grad) {
    grad->assign(n, PseudoDatumGradient{});
    for (int r = 0; r < n; ++r) {
      const int np = dim - 1;
      auto& g = (*grad)[r];
      g.b.setZero(np);
      const double gv = gy[r];
      for (int s = 0; s < np; ++s) g.b[s] = gv * data[r].location[s] + gy[n + r * dim + s];
      g.mu = gv;
      const double alpha = data[r].slopes[np];
      g.a = gy[n + r * dim + np] * alpha - 1.0;
    }
  }
  return value;
}

double gp_prior_neg_logpdf(const std::vector<PseudoDatum>& data, const GpPriorConfig& cfg,
                           std::vector<PseudoDatumGradient>* grad) {
  if (data.empty()) throw std::invalid_argument("gp_prior_neg_logpdf: empty pseudo-data");
  std::vector<Eigen::VectorXd> locations;
  locations.reserve(data.size());
  for (const auto& d : data) locations.push_back(d.location);
  const GpBlock block(std::move(locations), cfg);
  return gp_block_neg_logpdf(block, data, grad);
}

}  // namespace ccdeq
