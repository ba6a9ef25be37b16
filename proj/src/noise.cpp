#include "ccdeq/noise.hpp"

#include <stdexcept>

namespace ccdeq {

std::string to_string(NoiseModel model) {
  switch (model) {
    case NoiseModel::Gaussian: return "gaussian";
    case NoiseModel::SuperGaussian: return "supergaussian";
  }
  throw std::logic_error("unknown noise model");
}

NoiseModel noise_model_from_string(const std::string& name) {
  if (name == "gaussian") return NoiseModel::Gaussian;
  if (name == "supergaussian") return NoiseModel::SuperGaussian;
  throw std::invalid_argument("unknown noise model: " + name);
}

}  // namespace ccdeq
