#include <doctest.h>

#include <cmath>

#include "ccdeq/errors.hpp"
#include "ccdeq/likelihood.hpp"
#include "ccdeq/rng.hpp"
#include "support.hpp"

using namespace ccdeq;

namespace {

/// Independent oracle: the likelihood written as per-variable univariate
/// regressions, valid whenever det(I - B) = 1 (acyclic masks).
double per_variable_regression_nll(const Dataset& data, const ParameterSet& params,
                                   const Graph& g, NoiseModel model) {
  const int d = g.num_compounds();
  double total = 0.0;
  for (std::size_t c = 0; c < data.size(); ++c) {
    const auto& x = data[c];
    const auto& p = params.per_condition[c];
    for (int i = 0; i < d; ++i) {
      const double alpha = std::exp(p.a[i]);
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        double pred = p.mu[i];
        for (int parent : g.parents(i)) pred += p.b(parent, i) * x(r, parent);
        total += noise_nll((x(r, i) - pred) / alpha, model) + p.a[i];
      }
    }
  }
  return total;
}

}  // namespace

TEST_CASE("noise nll closed forms") {
  CHECK(noise_nll(0.0, NoiseModel::Gaussian) == doctest::Approx(0.9189385332).epsilon(1e-9));
  CHECK(noise_nll(0.0, NoiseModel::SuperGaussian) == doctest::Approx(1.1447298858).epsilon(1e-9));
  CHECK(noise_nll_deriv(2.0, NoiseModel::Gaussian) == doctest::Approx(2.0));
  CHECK(noise_nll_deriv(2.0, NoiseModel::SuperGaussian) == doctest::Approx(std::tanh(2.0)));
  // large arguments stay finite (log cosh overflow guard)
  CHECK(std::isfinite(noise_nll(800.0, NoiseModel::SuperGaussian)));
}

TEST_CASE("noise densities integrate to one") {
  for (NoiseModel model : {NoiseModel::Gaussian, NoiseModel::SuperGaussian}) {
    const double mass = testing::simpson(
        [&](double e) { return std::exp(-noise_nll(e, model)); }, -30.0, 30.0, 60000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("noise nll derivative matches finite differences") {
  for (NoiseModel model : {NoiseModel::Gaussian, NoiseModel::SuperGaussian}) {
    for (double e : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
      const double fd = (noise_nll(e + 1e-6, model) - noise_nll(e - 1e-6, model)) / 2e-6;
      CHECK(noise_nll_deriv(e, model) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("log abs det of I - B") {
  // strictly triangular b: unit-triangular determinant
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 3);
  b(0, 1) = 0.7;
  b(0, 2) = -1.4;
  b(1, 2) = 2.0;
  CHECK(log_abs_det_ImB(b) == doctest::Approx(0.0).epsilon(1e-12));

  Eigen::MatrixXd cyc = Eigen::MatrixXd::Zero(2, 2);
  cyc(0, 1) = 0.5;
  cyc(1, 0) = 0.5;
  CHECK(log_abs_det_ImB(cyc) == doctest::Approx(std::log(0.75)).epsilon(1e-12));

  cyc(0, 1) = 1.0;
  cyc(1, 0) = 1.0;
  CHECK_THROWS_AS(log_abs_det_ImB(cyc), SingularMatrix);
}

TEST_CASE("residuals") {
  Eigen::MatrixXd x(2, 2);
  x << 1.0, -2.0, 0.5, 3.0;

  SUBCASE("identity map at zero parameters") {
    const ConditionParameters p = ConditionParameters::zero(2);
    CHECK((residuals(x, p) - x).norm() == doctest::Approx(0.0));
  }
  SUBCASE("centering by mu") {
    ConditionParameters p = ConditionParameters::zero(2);
    p.mu = x.colwise().mean();
    const Eigen::MatrixXd e = residuals(x, p);
    CHECK(e.colwise().mean().norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("single variable scaling") {
    ConditionParameters p = ConditionParameters::zero(1);
    p.mu[0] = 1.0;
    p.a[0] = std::log(2.0);
    Eigen::MatrixXd single(1, 1);
    single << 3.0;
    CHECK(residuals(single, p)(0, 0) == doctest::Approx(1.0));
  }
}

TEST_CASE("neg log likelihood closed-form cases") {
  SUBCASE("standard normal at zero") {
    Eigen::MatrixXd x(1, 1);
    x << 0.0;
    ParameterSet params{{ConditionParameters::zero(1)}};
    CHECK(neg_log_likelihood({x}, params, NoiseModel::Gaussian) ==
          doctest::Approx(0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
  }

  SUBCASE("two-variable cycle, single sample, direct formula") {
    Eigen::MatrixXd x(1, 2);
    x << 1.0, 1.0;
    ConditionParameters p = ConditionParameters::zero(2);
    p.b(0, 1) = 0.5;
    p.b(1, 0) = 0.5;
    ParameterSet params{{p}};
    const double expected =
        std::log(2.0 * M_PI) + 0.5 * (0.25 + 0.25) - std::log(0.75);
    CHECK(neg_log_likelihood({x}, params, NoiseModel::Gaussian) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("acyclic likelihood equals per-variable regression nll") {
  auto rng = make_rng(101);
  std::uniform_int_distribution<int> dd(2, 5);
  std::uniform_int_distribution<int> kk(1, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = dd(rng);
    const int k = kk(rng);
    const Graph g = testing::random_graph(d, 0.5, true, rng);
    const ParameterSet params = testing::random_parameters(g, k, rng);
    const Dataset data = testing::random_dataset(d, k, 12, rng);
    for (NoiseModel model : {NoiseModel::Gaussian, NoiseModel::SuperGaussian}) {
      const double nll = neg_log_likelihood(data, params, model);
      const double oracle = per_variable_regression_nll(data, params, g, model);
      CHECK(std::abs(nll - oracle) < 1e-9);
    }
  }
}

TEST_CASE("nll gradient matches central finite differences") {
  auto rng = make_rng(202);
  std::uniform_int_distribution<int> dd(2, 5);
  std::uniform_int_distribution<int> kk(1, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = dd(rng);
    const int k = kk(rng);
    const bool acyclic = trial % 2 == 0;
    const Graph g = testing::random_graph(d, 0.5, acyclic, rng);
    const ParameterSet params = testing::random_parameters(g, k, rng);
    const Dataset data = testing::random_dataset(d, k, 9, rng);
    const NoiseModel model = trial % 3 == 0 ? NoiseModel::SuperGaussian : NoiseModel::Gaussian;

    const Eigen::VectorXd packed = pack_parameters(params, g);
    const Eigen::VectorXd analytic = nll_gradient(data, params, g, model);
    const Eigen::VectorXd fd = testing::fd_gradient(
        [&](const Eigen::VectorXd& v) {
          return neg_log_likelihood(data, unpack_parameters(v, g, k), model);
        },
        packed);
    CHECK(testing::max_relative_error(analytic, fd) < 1e-6);
  }
}

TEST_CASE("gradient at a stationary point") {
  // E = 0 and b = 0: gradient wrt mu vanishes
  Eigen::MatrixXd x(4, 2);
  x.setConstant(1.5);
  ConditionParameters p = ConditionParameters::zero(2);
  p.mu.setConstant(1.5);
  const Graph g(2);
  const Eigen::VectorXd grad = nll_gradient({x}, ParameterSet{{p}}, g, NoiseModel::Gaussian);
  CHECK(grad.segment(0, 2).norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("row permutation invariance") {
  auto rng = make_rng(303);
  const Graph g = testing::random_graph(4, 0.5, false, rng);
  const ParameterSet params = testing::random_parameters(g, 2, rng);
  Dataset data = testing::random_dataset(4, 2, 15, rng);
  const double before = neg_log_likelihood(data, params, NoiseModel::SuperGaussian);
  // reverse the rows of the first condition
  data[0] = data[0].colwise().reverse().eval();
  const double after = neg_log_likelihood(data, params, NoiseModel::SuperGaussian);
  CHECK(before == doctest::Approx(after).epsilon(1e-12));
}

TEST_CASE("scale consistency in mu and a") {
  auto rng = make_rng(404);
  const int d = 3;
  const Graph g(d);  // b = 0 so column shifts map directly to residual shifts
  ParameterSet params = testing::random_parameters(g, 1, rng);
  Dataset data = testing::random_dataset(d, 1, 10, rng);
  const double n = static_cast<double>(data[0].rows());
  const double delta = 0.37;

  SUBCASE("shifting mu_i and column i together leaves the nll unchanged") {
    const double before = neg_log_likelihood(data, params, NoiseModel::Gaussian);
    params.per_condition[0].mu[1] += delta;
    data[0].col(1).array() += delta;
    const double after = neg_log_likelihood(data, params, NoiseModel::Gaussian);
    CHECK(before == doctest::Approx(after).epsilon(1e-12));
  }

  SUBCASE("adding delta to a_i adds n*delta plus the rescaling effect") {
    for (NoiseModel model : {NoiseModel::Gaussian, NoiseModel::SuperGaussian}) {
      const double before = neg_log_likelihood(data, params, model);
      ParameterSet shifted = params;
      shifted.per_condition[0].a[2] += delta;
      const double after = neg_log_likelihood(data, shifted, model);

      const Eigen::MatrixXd e = residuals(data[0], params.per_condition[0]);
      double rescale = 0.0;
      const double factor = std::exp(-delta);
      for (Eigen::Index r = 0; r < e.rows(); ++r)
        rescale += noise_nll(e(r, 2) * factor, model) - noise_nll(e(r, 2), model);
      CHECK(after - before == doctest::Approx(n * delta + rescale).epsilon(1e-9));
    }
  }
}

TEST_CASE("acyclic mask: b gradient has no determinant contribution") {
  auto rng = make_rng(505);
  const Graph g(2, {{0, 1}});
  const ParameterSet params = testing::random_parameters(g, 1, rng);
  const Dataset data = testing::random_dataset(2, 1, 8, rng);
  const Eigen::VectorXd grad = nll_gradient(data, params, g, NoiseModel::Gaussian);

  // oracle: d/db of the univariate regression nll of x2 on x1
  const auto& p = params.per_condition[0];
  const double alpha = std::exp(p.a[1]);
  double expected = 0.0;
  for (Eigen::Index r = 0; r < data[0].rows(); ++r) {
    const double e = (data[0](r, 1) - p.b(0, 1) * data[0](r, 0) - p.mu[1]) / alpha;
    expected += e * (-data[0](r, 0) / alpha);
  }
  CHECK(grad[0] == doctest::Approx(expected).epsilon(1e-10));
}
