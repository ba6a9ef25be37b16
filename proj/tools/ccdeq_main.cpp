#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccdeq/errors.hpp"
#include "ccdeq/inference.hpp"
#include "ccdeq/search.hpp"
#include "ccdeq/simulate.hpp"
#include "ccdeq/study.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace ccdeq;

namespace {

struct CommonOpts {
  std::uint64_t seed = 0;
  std::string noise = "gaussian";
  std::string prior = "linear";
  double lambda = 10.0;
  double tau = 1e3;
  double sigma_in = 10.0;
  double sigma_out = 10.0;
  double sigma_jitter = 0.01;
  std::optional<int> max_edges;
  bool acyclic = false;
  int fit_restarts = 2;
  int max_iterations = 500;
  double gradient_tolerance = 1e-4;
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--noise", o.noise, "Noise model")
      ->check(CLI::IsMember({"gaussian", "supergaussian"}));
  cmd->add_option("--prior", o.prior, "Parameter prior")->check(CLI::IsMember({"linear", "gp"}));
  cmd->add_option("--lambda", o.lambda, "Slope scale of the linear prior")->check(CLI::PositiveNumber);
  cmd->add_option("--tau", o.tau, "Location/scale std of the linear prior")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--sigma-in", o.sigma_in, "GP kernel input length scale")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--sigma-out", o.sigma_out, "GP kernel output scale")->check(CLI::PositiveNumber);
  cmd->add_option("--sigma-jitter", o.sigma_jitter, "GP kernel jitter")->check(CLI::PositiveNumber);
  cmd->add_option("--max-edges", o.max_edges, "Edge budget for admissible graphs")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--acyclic", o.acyclic, "Restrict the structure space to acyclic graphs");
  cmd->add_option("--fit-restarts", o.fit_restarts, "Optimizer restarts per fit")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iterations", o.max_iterations, "Optimizer iteration budget")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--gradient-tolerance", o.gradient_tolerance, "Optimizer sup-norm stop")
      ->check(CLI::PositiveNumber);
}

PriorConfig make_prior(const CommonOpts& o) {
  if (o.prior == "linear") return LinearPriorConfig{o.lambda, o.tau};
  return GpPriorConfig{o.sigma_in, o.sigma_out, o.sigma_jitter};
}

NoiseModel make_noise(const CommonOpts& o) { return noise_model_from_string(o.noise); }

FitOptions make_fit_options(const CommonOpts& o) {
  FitOptions fit;
  fit.max_iterations = o.max_iterations;
  fit.gradient_tolerance = o.gradient_tolerance;
  fit.restarts = o.fit_restarts;
  fit.seed = o.seed;
  return fit;
}

StructureConstraints make_constraints(const CommonOpts& o) {
  return StructureConstraints{o.max_edges, o.acyclic};
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
  } else {
    write_text_file(out_path, content);
  }
}

void print_warnings(const Study& study) {
  for (const auto& w : study.warnings) std::cerr << "warning: " << w << "\n";
}

ordered_json edges_json(const Graph& g, const std::vector<std::string>& names) {
  ordered_json edges = ordered_json::array();
  for (const auto& [i, j] : g.edges())
    edges.push_back(ordered_json::array({names[i], names[j]}));
  return edges;
}

ordered_json parameters_json(const ParameterSet& params) {
  ordered_json out = ordered_json::array();
  for (const auto& p : params.per_condition) {
    ordered_json cond;
    ordered_json b = ordered_json::array();
    for (Eigen::Index r = 0; r < p.b.rows(); ++r) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index c = 0; c < p.b.cols(); ++c) row.push_back(p.b(r, c));
      b.push_back(std::move(row));
    }
    cond["b"] = std::move(b);
    cond["mu"] = std::vector<double>(p.mu.data(), p.mu.data() + p.mu.size());
    cond["a"] = std::vector<double>(p.a.data(), p.a.data() + p.a.size());
    out.push_back(std::move(cond));
  }
  return out;
}

ordered_json score_json(const ScoredStructure& scored, const std::vector<std::string>& names) {
  ordered_json j;
  j["score"] = scored.score;
  j["log_evidence"] = scored.evidence.log_evidence;
  j["neg_log_posterior"] = scored.evidence.map.neg_log_posterior;
  j["parameter_count"] = scored.evidence.parameter_count;
  j["hessian_log_det"] = scored.evidence.hessian_log_det;
  j["hessian_floored"] = scored.evidence.hessian_floored;
  j["converged"] = scored.evidence.map.converged;
  j["edges"] = edges_json(scored.graph, names);
  return j;
}

int run_simulate(const CommonOpts& opts, const std::string& model_path, const std::string& out_dir,
                 int n, double magnitude, double censor_threshold, bool noise_overridden) {
  GroundTruthSpec spec = read_model_file(model_path);
  if (noise_overridden) spec.model.noise = make_noise(opts);
  const SimulatedStudy sim =
      generate_study(spec.model, spec.design, n, magnitude, opts.seed);
  const Study study = to_study(sim, spec.compound_names, censor_threshold);
  save_study(study, out_dir);
  write_graph_file(spec.model.graph, spec.compound_names,
                   (fs::path(out_dir) / "truth.json").string());
  write_text_file((fs::path(out_dir) / "truth.dot").string(),
                  graph_to_dot(spec.model.graph, spec.compound_names));
  std::cerr << "simulated " << spec.design.num_conditions() << " conditions x " << n
            << " samples into " << out_dir << "\n";
  return 0;
}

int run_explore(const std::string& study_dir, const std::string& design_path,
                std::optional<double> threshold, double ceiling, const std::string& out_path) {
  const Study study = load_study(study_dir, design_path, threshold);
  print_warnings(study);
  const Eigen::MatrixXd table = explore(study, ceiling);
  std::ostringstream out;
  out << "condition";
  for (const auto& name : study.compound_names) out << '\t' << name;
  out << '\n';
  for (int c = 0; c < study.num_conditions(); ++c) {
    out << study.design.names[c];
    for (int i = 0; i < study.num_compounds(); ++i) out << '\t' << format_double(table(c, i));
    out << '\n';
  }
  emit(out_path, out.str());
  return 0;
}

int run_fit(const CommonOpts& opts, const std::string& study_dir, const std::string& graph_path,
            const std::string& out_path) {
  const Study study = load_study(study_dir);
  print_warnings(study);
  const Graph g = read_graph_file(graph_path, study.compound_names);
  const FitResult fit =
      map_fit(g, study.data, study.design, make_prior(opts), make_noise(opts), make_fit_options(opts));

  ordered_json j;
  j["schema"] = "ccdeq.fit.v1";
  j["graph_file"] = graph_path;
  j["prior"] = opts.prior;
  j["noise"] = opts.noise;
  j["neg_log_posterior"] = fit.neg_log_posterior;
  j["converged"] = fit.converged;
  j["gradient_norm"] = fit.gradient_norm_at_solution;
  j["edges"] = edges_json(g, study.compound_names);
  j["parameters"] = parameters_json(fit.params);
  emit(out_path, j.dump(2) + "\n");
  return 0;
}

int run_score(const CommonOpts& opts, const std::string& study_dir,
              const std::vector<std::string>& graph_paths, const std::string& out_path) {
  const Study study = load_study(study_dir);
  print_warnings(study);
  ordered_json results = ordered_json::array();
  for (const auto& path : graph_paths) {
    const Graph g = read_graph_file(path, study.compound_names);
    const ScoredStructure scored =
        score_structure(g, study.data, study.design, make_prior(opts), make_noise(opts),
                        make_fit_options(opts), make_constraints(opts));
    ordered_json entry = score_json(scored, study.compound_names);
    entry["graph_file"] = path;
    results.push_back(std::move(entry));
  }
  ordered_json j;
  j["schema"] = "ccdeq.scores.v1";
  j["prior"] = opts.prior;
  j["noise"] = opts.noise;
  j["results"] = std::move(results);
  emit(out_path, j.dump(2) + "\n");
  return 0;
}

int run_search(const CommonOpts& opts, const std::string& study_dir, int restarts,
               const std::string& out_dir) {
  const Study study = load_study(study_dir);
  print_warnings(study);
  const SearchResult result =
      greedy_search(study.data, study.design, make_prior(opts), make_noise(opts),
                    make_constraints(opts), restarts, opts.seed, make_fit_options(opts));

  fs::create_directories(out_dir);
  ordered_json j;
  j["schema"] = "ccdeq.search.v1";
  j["prior"] = opts.prior;
  j["noise"] = opts.noise;
  j["seed"] = opts.seed;
  j["restarts_requested"] = restarts;
  j["constraints"] = {{"max_edges", opts.max_edges ? ordered_json(*opts.max_edges) : ordered_json()},
                      {"acyclic", opts.acyclic}};
  j["best"] = score_json(result.best, study.compound_names);
  ordered_json trace = ordered_json::array();
  for (std::size_t r = 0; r < result.restarts.size(); ++r) {
    const auto& rec = result.restarts[r];
    trace.push_back({{"restart", r},
                     {"local_optimum_score", rec.score},
                     {"steps", rec.steps},
                     {"edges", rec.local_optimum.edge_count()}});
  }
  j["restarts"] = std::move(trace);
  j["evaluations"] = result.evaluations;
  j["cache_hits"] = result.cache_hits;
  j["diagnostics"] = result.diagnostics;
  write_text_file((fs::path(out_dir) / "report.json").string(), j.dump(2) + "\n");
  write_graph_file(result.best.graph, study.compound_names,
                   (fs::path(out_dir) / "best.json").string());
  write_text_file((fs::path(out_dir) / "best.dot").string(),
                  graph_to_dot(result.best.graph, study.compound_names));
  return 0;
}

int run_stability(const CommonOpts& opts, const std::string& study_dir, int n_runs,
                  double fraction, int restarts_per_run, const std::string& out_dir) {
  const Study study = load_study(study_dir);
  print_warnings(study);
  StabilityOptions stability_opts;
  stability_opts.n_runs = n_runs;
  stability_opts.subsample_fraction = fraction;
  stability_opts.restarts_per_run = restarts_per_run;
  const StabilityResult result =
      stability_selection(study.data, study.design, make_prior(opts), make_noise(opts),
                          make_constraints(opts), stability_opts, opts.seed, make_fit_options(opts));

  fs::create_directories(out_dir);
  ordered_json j;
  j["schema"] = "ccdeq.stability.v1";
  j["prior"] = opts.prior;
  j["noise"] = opts.noise;
  j["seed"] = opts.seed;
  j["runs_requested"] = n_runs;
  j["runs"] = result.frequencies.runs;
  j["subsample_fraction"] = fraction;
  j["compounds"] = study.compound_names;
  ordered_json freq = ordered_json::array();
  for (Eigen::Index r = 0; r < result.frequencies.freq.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < result.frequencies.freq.cols(); ++c)
      row.push_back(result.frequencies.freq(r, c));
    freq.push_back(std::move(row));
  }
  j["frequencies"] = std::move(freq);
  j["diagnostics"] = result.diagnostics;
  write_text_file((fs::path(out_dir) / "stability.json").string(), j.dump(2) + "\n");
  write_text_file((fs::path(out_dir) / "stability.dot").string(),
                  frequencies_to_dot(result.frequencies, study.compound_names));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyclic causal discovery from multi-condition equilibrium data"};
  app.require_subcommand(1);

  CommonOpts opts;

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a ground-truthed study to disk");
  std::string model_path, sim_out;
  int sim_n = 500;
  double magnitude = 1.0;
  double censor_threshold = 1.0;
  simulate_cmd->add_option("--model", model_path, "Ground-truth model JSON")
      ->required()
      ->check(CLI::ExistingFile);
  simulate_cmd->add_option("--out", sim_out, "Output study directory")->required();
  simulate_cmd->add_option("--n", sim_n, "Samples per condition")->check(CLI::NonNegativeNumber);
  simulate_cmd->add_option("--magnitude", magnitude, "Intervention perturbation scale")
      ->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--censor-threshold", censor_threshold, "Detection threshold theta")
      ->check(CLI::PositiveNumber);
  add_common_options(simulate_cmd, opts);
  simulate_cmd->callback([&]() {
    run_simulate(opts, model_path, sim_out, sim_n, magnitude, censor_threshold,
                 simulate_cmd->count("--noise") > 0);
  });

  // explore
  auto* explore_cmd = app.add_subcommand("explore", "Per-condition KS deviations from baseline");
  std::string study_dir, design_path, out_path;
  double ceiling = 745.0;
  std::optional<double> threshold;
  explore_cmd->add_option("--study", study_dir, "Study directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  explore_cmd->add_option("--design", design_path, "Design metadata file override");
  explore_cmd->add_option("--censor-threshold", threshold, "Detection threshold override");
  explore_cmd->add_option("--ceiling", ceiling, "-log p cap")->check(CLI::PositiveNumber);
  explore_cmd->add_option("--out", out_path, "Output table path ('-' for stdout)");
  add_common_options(explore_cmd, opts);
  explore_cmd->callback(
      [&]() { run_explore(study_dir, design_path, threshold, ceiling, out_path); });

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "MAP-fit parameters for a fixed graph");
  std::string graph_path;
  fit_cmd->add_option("--study", study_dir, "Study directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  fit_cmd->add_option("--graph", graph_path, "Graph JSON")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", out_path, "Output path ('-' for stdout)");
  add_common_options(fit_cmd, opts);
  fit_cmd->callback([&]() { run_fit(opts, study_dir, graph_path, out_path); });

  // score
  auto* score_cmd = app.add_subcommand("score", "Laplace evidence for given graphs");
  std::vector<std::string> graph_paths;
  score_cmd->add_option("--study", study_dir, "Study directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  score_cmd->add_option("--graph", graph_paths, "Graph JSON file(s)")
      ->required()
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--out", out_path, "Output path ('-' for stdout)");
  add_common_options(score_cmd, opts);
  score_cmd->callback([&]() { run_score(opts, study_dir, graph_paths, out_path); });

  // search
  auto* search_cmd = app.add_subcommand("search", "Greedy structure search with restarts");
  int restarts = 10;
  std::string search_out;
  search_cmd->add_option("--study", study_dir, "Study directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  search_cmd->add_option("--restarts", restarts, "Random restarts")->check(CLI::PositiveNumber);
  search_cmd->add_option("--out", search_out, "Output directory")->required();
  add_common_options(search_cmd, opts);
  search_cmd->callback([&]() { run_search(opts, study_dir, restarts, search_out); });

  // stability
  auto* stability_cmd = app.add_subcommand("stability", "Stability selection edge frequencies");
  int n_runs = 50;
  double fraction = 0.5;
  int restarts_per_run = 3;
  std::string stability_out;
  stability_cmd->add_option("--study", study_dir, "Study directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  stability_cmd->add_option("--runs", n_runs, "Subsample runs")->check(CLI::PositiveNumber);
  stability_cmd->add_option("--fraction", fraction, "Subsample fraction in (0,1)")
      ->check(CLI::Range(std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)));
  stability_cmd->add_option("--search-restarts", restarts_per_run, "Greedy restarts per run")
      ->check(CLI::PositiveNumber);
  stability_cmd->add_option("--out", stability_out, "Output directory")->required();
  add_common_options(stability_cmd, opts);
  stability_cmd->callback(
      [&]() { run_stability(opts, study_dir, n_runs, fraction, restarts_per_run, stability_out); });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& e) {
    ordered_json err;
    err["schema"] = "ccdeq.error.v1";
    err["error"] = typeid(e).name();
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
