#ifndef CCDEQ_STUDY_HPP_
#define CCDEQ_STUDY_HPP_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ccdeq/design.hpp"
#include "ccdeq/graph.hpp"
#include "ccdeq/likelihood.hpp"
#include "ccdeq/search.hpp"
#include "ccdeq/simulate.hpp"

namespace ccdeq {

/// A loaded multi-condition dataset in log-abundance space.
/// Raw-space inputs are clamped at the detection threshold theta and
/// log-transformed (value <- log(max(raw, theta))); censor_fractions records
/// the per-condition, per-compound fraction affected.
struct Study {
  std::vector<std::string> compound_names;
  ExperimentDesign design;
  Dataset data;
  double censor_threshold = 1.0;
  Eigen::MatrixXd censor_fractions;  // K x D
  std::vector<std::string> warnings;

  int num_compounds() const { return static_cast<int>(compound_names.size()); }
  int num_conditions() const { return design.num_conditions(); }
};

/// Loads a study directory: a design metadata file (default
/// <dir>/design.json) naming one delimited data file per condition.
/// `censor_threshold` overrides the design file's threshold when given.
/// Duplicate rows shared between conditions produce a warning, not an error.
Study load_study(const std::string& data_dir, const std::string& design_path = "",
                 std::optional<double> censor_threshold = std::nullopt);

/// Writes design.json plus one data file per condition. Values are written in
/// log space with round-trip precision, so loading the result reproduces the
/// matrices bit for bit.
void save_study(const Study& study, const std::string& dir);

/// Wraps simulator output as a loadable study (data is already log-space).
Study to_study(const SimulatedStudy& sim, const std::vector<std::string>& compound_names,
               double censor_threshold = 1.0);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test: exact sup-distance of the empirical
/// CDFs, p-value from the asymptotic Kolmogorov distribution at effective
/// sample size n_x n_y / (n_x + n_y).
KsResult ks_two_sample(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// K x D table of -log p-values comparing each condition and compound against
/// the baseline condition 1; the baseline row is all zeros. -log p is capped
/// at `ceiling` (default 745, the double-precision underflow bound for p).
Eigen::MatrixXd explore(const Study& study, double ceiling = 745.0);

/// DOT exports; deterministic edge order and formatting.
std::string graph_to_dot(const Graph& g, const std::vector<std::string>& names);
/// Edge pen-width and opacity scale with selection frequency; edges at or
/// below `min_frequency` are omitted.
std::string frequencies_to_dot(const EdgeFrequencies& freq, const std::vector<std::string>& names,
                               double min_frequency = 0.0);

/// Graph file I/O (JSON with compound names and directed edges).
Graph read_graph_file(const std::string& path, const std::vector<std::string>& compound_names);
void write_graph_file(const Graph& g, const std::vector<std::string>& compound_names,
                      const std::string& path);

/// Ground-truth model file for the simulator: graph with edge weights,
/// intercepts, log noise scales, noise model, and the experiment design.
struct GroundTruthSpec {
  GroundTruthModel model;
  std::vector<std::string> compound_names;
  ExperimentDesign design;
};
GroundTruthSpec read_model_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ccdeq

#endif  // CCDEQ_STUDY_HPP_
