#include "ccdeq/search.hpp"

#include <algorithm>
#include <stdexcept>

#include "ccdeq/errors.hpp"
#include "ccdeq/rng.hpp"

namespace ccdeq {

bool StructureConstraints::admissible(const Graph& g) const {
  if (max_edges && g.edge_count() > *max_edges) return false;
  if (require_acyclic && !g.is_acyclic()) return false;
  return true;
}

std::vector<Graph> neighbors(const Graph& g, const StructureConstraints& constraints) {
  const int d = g.num_compounds();
  std::vector<Graph> out;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      if (!g.edge(i, j)) {
        Graph added = g;
        added.set_edge(i, j, true);
        if (constraints.admissible(added)) out.push_back(std::move(added));
      } else {
        Graph deleted = g;
        deleted.set_edge(i, j, false);
        if (constraints.admissible(deleted)) out.push_back(std::move(deleted));
        if (!g.edge(j, i)) {
          Graph reversed = g;
          reversed.set_edge(i, j, false);
          reversed.set_edge(j, i, true);
          if (constraints.admissible(reversed)) out.push_back(std::move(reversed));
        }
      }
    }
  }
  return out;
}

Graph random_admissible_graph(int d, const StructureConstraints& constraints,
                              std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i != j) pairs.emplace_back(i, j);
    }
  }
  const int cap = std::min<int>(static_cast<int>(pairs.size()),
                                constraints.max_edges.value_or(static_cast<int>(pairs.size())));
  std::uniform_int_distribution<int> edge_count(0, cap);
  const int target = edge_count(rng);
  std::shuffle(pairs.begin(), pairs.end(), rng);

  Graph g(d);
  int added = 0;
  for (const auto& [i, j] : pairs) {
    if (added == target) break;
    g.set_edge(i, j, true);
    if (constraints.require_acyclic && !g.is_acyclic()) {
      g.set_edge(i, j, false);
      continue;
    }
    ++added;
  }
  return g;
}

StructureScorer::StructureScorer(const Dataset& data, const ExperimentDesign& design,
                                 PriorConfig prior, NoiseModel noise, FitOptions fit_options)
    : data_(&data),
      design_(&design),
      prior_(std::move(prior)),
      noise_(noise),
      fit_options_(std::move(fit_options)),
      d_(data.empty() ? 0 : static_cast<int>(data[0].cols())) {
  if (data.empty()) throw std::invalid_argument("StructureScorer: empty dataset");
}

const ScoredStructure& StructureScorer::score(const Graph& g) {
  const std::string key = g.canonical_key();
  if (auto it = cache_.find(key); it != cache_.end()) {
    ++cache_hits_;
    return it->second;
  }
  ++evaluations_;
  EvidenceResult evidence = laplace_log_evidence(g, *data_, *design_, prior_, noise_, fit_options_);
  const double score = evidence.log_evidence;  // flat structure prior
  auto [it, inserted] = cache_.emplace(key, ScoredStructure{g, std::move(evidence), score});
  return it->second;
}

SearchResult greedy_search(const Dataset& data, const ExperimentDesign& design,
                           const PriorConfig& prior, NoiseModel noise,
                           const StructureConstraints& constraints, int restarts,
                           std::uint64_t seed, const FitOptions& fit_options) {
  if (restarts < 1) throw std::invalid_argument("greedy_search: restarts must be >= 1");
  StructureScorer scorer(data, design, prior, noise, fit_options);
  const int d = scorer.num_compounds();

  std::optional<ScoredStructure> best;
  std::vector<RestartRecord> records;
  std::vector<std::string> diagnostics;

  for (int r = 0; r < restarts; ++r) {
    auto rng = make_rng(substream(seed, static_cast<std::uint64_t>(r)));
    const Graph start = random_admissible_graph(d, constraints, rng);

    std::optional<ScoredStructure> current;
    try {
      current = scorer.score(start);
    } catch (const std::exception& e) {
      diagnostics.push_back("restart " + std::to_string(r) + ": start graph failed: " + e.what());
      continue;
    }

    int steps = 0;
    for (;;) {
      std::optional<ScoredStructure> best_neighbor;
      for (const Graph& gn : neighbors(current->graph, constraints)) {
        try {
          const ScoredStructure& sn = scorer.score(gn);
          // strict improvement only; ties resolve to the earlier neighbor
          if (sn.score > current->score && (!best_neighbor || sn.score > best_neighbor->score))
            best_neighbor = sn;
        } catch (const std::exception& e) {
          diagnostics.push_back("restart " + std::to_string(r) + ": neighbor skipped: " + e.what());
        }
      }
      if (!best_neighbor) break;
      current = std::move(best_neighbor);
      ++steps;
    }

    records.push_back({start, current->graph, current->score, steps});
    if (!best || current->score > best->score) best = current;
  }

  if (!best) throw AllRestartsFailed("greedy_search: no restart produced a scored structure");
  SearchResult out{*best, std::move(records), std::move(diagnostics), scorer.evaluations(),
                   scorer.cache_hits()};
  return out;
}

ScoredStructure score_structure(const Graph& g, const Dataset& data,
                                const ExperimentDesign& design, const PriorConfig& prior,
                                NoiseModel noise, const FitOptions& fit_options,
                                const StructureConstraints& constraints) {
  if (!constraints.admissible(g))
    throw InadmissibleGraph("score_structure: graph violates the structure constraints");
  EvidenceResult evidence = laplace_log_evidence(g, data, design, prior, noise, fit_options);
  const double score = evidence.log_evidence;
  return ScoredStructure{g, std::move(evidence), score};
}

StabilityResult stability_selection(const Dataset& data, const ExperimentDesign& design,
                                    const PriorConfig& prior, NoiseModel noise,
                                    const StructureConstraints& constraints,
                                    const StabilityOptions& options, std::uint64_t seed,
                                    const FitOptions& fit_options) {
  if (options.n_runs < 1) throw std::invalid_argument("stability_selection: n_runs must be >= 1");
  if (!(options.subsample_fraction > 0.0 && options.subsample_fraction < 1.0))
    throw std::invalid_argument("stability_selection: subsample_fraction must lie in (0, 1)");
  const int d = data.empty() ? 0 : static_cast<int>(data[0].cols());

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(d, d);
  std::vector<std::string> diagnostics;
  int successes = 0;

  for (int run = 0; run < options.n_runs; ++run) {
    Dataset subsample;
    subsample.reserve(data.size());
    auto rng = make_rng(substream(seed, 0xABu, static_cast<std::uint64_t>(run)));
    for (const auto& x : data) {
      const int n = static_cast<int>(x.rows());
      const int m = static_cast<int>(options.subsample_fraction * n);
      std::vector<int> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(m);
      std::sort(idx.begin(), idx.end());
      Eigen::MatrixXd sub(m, x.cols());
      for (int r = 0; r < m; ++r) sub.row(r) = x.row(idx[r]);
      subsample.push_back(std::move(sub));
    }

    try {
      SearchResult res =
          greedy_search(subsample, design, prior, noise, constraints, options.restarts_per_run,
                        substream(seed, 0x5EEDu, static_cast<std::uint64_t>(run)), fit_options);
      for (const auto& [i, j] : res.best.graph.edges()) counts(i, j) += 1.0;
      ++successes;
      for (auto& diag : res.diagnostics)
        diagnostics.push_back("run " + std::to_string(run) + ": " + diag);
    } catch (const std::exception& e) {
      diagnostics.push_back("run " + std::to_string(run) + " excluded: " + e.what());
    }
  }

  if (successes == 0)
    throw AllRestartsFailed("stability_selection: every subsample run failed");
  StabilityResult out{EdgeFrequencies{counts / static_cast<double>(successes), successes},
                      std::move(diagnostics)};
  return out;
}

}  // namespace ccdeq
