#include "ccdeq/likelihood.hpp"

#include <cmath>
#include <stdexcept>

#include "ccdeq/errors.hpp"

namespace ccdeq {

namespace {
constexpr double kPivotRelTolerance = 1e-12;
}

ImBFactorization factorize_ImB(const Eigen::MatrixXd& b) {
  const Eigen::Index d = b.rows();
  Eigen::MatrixXd imb = Eigen::MatrixXd::Identity(d, d) - b;
  ImBFactorization f{Eigen::PartialPivLU<Eigen::MatrixXd>(imb), 0.0};
  const auto diag = f.lu.matrixLU().diagonal();
  double max_pivot = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) max_pivot = std::max(max_pivot, std::abs(diag[i]));
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double p = std::abs(diag[i]);
    if (!(p > kPivotRelTolerance * max_pivot) || max_pivot == 0.0)
      throw SingularMatrix("det(I - B) vanishes within tolerance");
    log_det += std::log(p);
  }
  f.log_abs_det = log_det;
  return f;
}

double log_abs_det_ImB(const Eigen::MatrixXd& b) { return factorize_ImB(b).log_abs_det; }

Eigen::MatrixXd residuals(const Eigen::MatrixXd& x, const ConditionParameters& p) {
  const int d = p.dimension();
  if (x.cols() != d) throw std::invalid_argument("residuals: column count mismatch");
  const Eigen::MatrixXd imb = Eigen::MatrixXd::Identity(d, d) - p.b;
  Eigen::MatrixXd e = x * imb;
  e.rowwise() -= p.mu.transpose();
  const Eigen::VectorXd inv_alpha = (-p.a).array().exp();
  e = e * inv_alpha.asDiagonal();
  return e;
}

double neg_log_likelihood(const Dataset& data, const ParameterSet& params, NoiseModel model) {
  if (data.size() != params.per_condition.size())
    throw std::invalid_argument("neg_log_likelihood: condition count mismatch");
  double total = 0.0;
  for (std::size_t c = 0; c < data.size(); ++c) {
    const auto& x = data[c];
    const auto& p = params.per_condition[c];
    const double n = static_cast<double>(x.rows());
    if (x.rows() == 0) continue;
    total -= n * factorize_ImB(p.b).log_abs_det;
    const Eigen::MatrixXd e = residuals(x, p);
    for (Eigen::Index i = 0; i < e.cols(); ++i) {
      for (Eigen::Index r = 0; r < e.rows(); ++r) total += noise_nll(e(r, i), model);
    }
    total += n * p.a.sum();
  }
  return total;
}

Eigen::VectorXd nll_gradient(const Dataset& data, const ParameterSet& params, const Graph& g,
                             NoiseModel model, double* value) {
  const int d = g.num_compounds();
  const int k = static_cast<int>(data.size());
  if (static_cast<int>(params.per_condition.size()) != k)
    throw std::invalid_argument("nll_gradient: condition count mismatch");
  const int per = num_free_per_condition(g);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(per) * k);
  double total = 0.0;

  Eigen::Index pos = 0;
  for (int c = 0; c < k; ++c) {
    const auto& x = data[c];
    const auto& p = params.per_condition[c];
    const double n = static_cast<double>(x.rows());
    if (x.rows() == 0) {
      pos += per;
      continue;
    }

    const ImBFactorization f = factorize_ImB(p.b);
    const Eigen::MatrixXd imb_inv = f.lu.inverse();
    const Eigen::MatrixXd e = residuals(x, p);
    const Eigen::VectorXd alpha = p.alpha();

    // g'(E) elementwise
    Eigen::MatrixXd psi(e.rows(), e.cols());
    for (Eigen::Index i = 0; i < e.cols(); ++i) {
      for (Eigen::Index r = 0; r < e.rows(); ++r) psi(r, i) = noise_nll_deriv(e(r, i), model);
    }

    if (value) {
      total -= n * f.log_abs_det;
      for (Eigen::Index i = 0; i < e.cols(); ++i) {
        for (Eigen::Index r = 0; r < e.rows(); ++r) total += noise_nll(e(r, i), model);
      }
      total += n * p.a.sum();
    }

    // dNLL/dB_ij = n [(I-B)^{-1}]_{ji} - (X^T psi)_{ij} / alpha_j
    const Eigen::MatrixXd xtpsi = x.transpose() * psi;
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i) {
        if (g.edge(i, j)) grad[pos++] = n * imb_inv(j, i) - xtpsi(i, j) / alpha[j];
      }
    }
    // dNLL/dmu_i = -sum_n psi(n,i) / alpha_i
    for (int i = 0; i < d; ++i) grad[pos++] = -psi.col(i).sum() / alpha[i];
    // dNLL/da_i = n - sum_n psi(n,i) E(n,i)
    for (int i = 0; i < d; ++i) grad[pos++] = n - psi.col(i).dot(e.col(i));
  }
  if (value) *value = total;
  return grad;
}

}  // namespace ccdeq
