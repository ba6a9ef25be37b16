#ifndef CCDEQ_NOISE_HPP_
#define CCDEQ_NOISE_HPP_

#include <cmath>
#include <string>

namespace ccdeq {

/// Disturbance density p0. Gaussian: (1/sqrt(2*pi)) exp(-e^2/2).
/// SuperGaussian: 1/(pi cosh(e)), the heavy-tailed density common in ICA.
enum class NoiseModel { Gaussian, SuperGaussian };

std::string to_string(NoiseModel model);
NoiseModel noise_model_from_string(const std::string& name);

/// -log p0(e)
inline double noise_nll(double e, NoiseModel model) {
  constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5*log(2*pi)
  constexpr double kLogPi = 1.1447298858494002;
  switch (model) {
    case NoiseModel::Gaussian:
      return kHalfLog2Pi + 0.5 * e * e;
    case NoiseModel::SuperGaussian:
      // log cosh(e) = |e| + log1p(exp(-2|e|)) - log 2, stable for large |e|
      return kLogPi + std::abs(e) + std::log1p(std::exp(-2.0 * std::abs(e))) - 0.6931471805599453;
  }
  return 0.0;
}

/// d/de of -log p0(e): e for Gaussian, tanh(e) for SuperGaussian.
inline double noise_nll_deriv(double e, NoiseModel model) {
  switch (model) {
    case NoiseModel::Gaussian:
      return e;
    case NoiseModel::SuperGaussian:
      return std::tanh(e);
  }
  return 0.0;
}

}  // namespace ccdeq

#endif  // CCDEQ_NOISE_HPP_
