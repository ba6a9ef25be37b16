#include "ccdeq/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "ccdeq/errors.hpp"

namespace ccdeq {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kDesignSchema = "ccdeq.design.v1";
constexpr const char* kGraphSchema = "ccdeq.graph.v1";
constexpr const char* kModelSchema = "ccdeq.model.v1";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string token;
  while (ss >> token) out.push_back(token);
  return out;
}

struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open data file: " + path);
  std::string line;
  int line_no = 0;

  Table table;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    table.header = split_whitespace(line);
    break;
  }
  if (table.header.empty()) throw ParseError("empty data file: " + path);

  const int d = static_cast<int>(table.header.size());
  std::vector<double> values;
  int rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> tokens = split_whitespace(line);
    if (static_cast<int>(tokens.size()) != d)
      throw ParseError(path + ": expected " + std::to_string(d) + " columns, got " +
                           std::to_string(tokens.size()),
                       line_no);
    for (int c = 0; c < d; ++c) {
      try {
        std::size_t used = 0;
        const double v = std::stod(tokens[c], &used);
        if (used != tokens[c].size()) throw std::invalid_argument("trailing characters");
        values.push_back(v);
      } catch (const std::exception&) {
        throw ParseError(path + ": not a number: '" + tokens[c] + "'", line_no, c + 1);
      }
    }
    ++rows;
  }
  table.values.resize(rows, d);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < d; ++c) table.values(r, c) = values[static_cast<std::size_t>(r) * d + c];
  }
  return table;
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const Eigen::MatrixXd& values) {
  std::ostringstream out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out << '\t';
    out << header[c];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c) out << '\t';
      out << format_double(values(r, c));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

int compound_index(const std::string& name, const std::vector<std::string>& names,
                   const std::string& context) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ParseError(context + ": unknown compound name '" + name + "'");
  return static_cast<int>(it - names.begin());
}

ordered_json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Intervention intervention_from_json(const ordered_json& cond,
                                    const std::vector<std::string>& names) {
  Intervention iv;
  iv.kind = intervention_kind_from_string(cond.at("kind").get<std::string>());
  std::vector<int> targets;
  for (const auto& t : cond.at("targets"))
    targets.push_back(compound_index(t.get<std::string>(), names, "design"));
  std::sort(targets.begin(), targets.end());
  iv.targets = std::move(targets);
  return iv;
}

/// Rows that are bit-identical across two different conditions point at
/// copy-paste errors in published datasets; surfaced as warnings only.
std::vector<std::string> find_duplicate_rows(const Dataset& data) {
  std::unordered_map<std::string, int> first_seen;  // row bytes -> condition
  std::vector<std::vector<int>> shared(data.size(), std::vector<int>(data.size(), 0));
  for (std::size_t c = 0; c < data.size(); ++c) {
    const auto& x = data[c];
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      std::string bytes(reinterpret_cast<const char*>(x.row(r).eval().data()),
                        static_cast<std::size_t>(x.cols()) * sizeof(double));
      auto [it, inserted] = first_seen.emplace(std::move(bytes), static_cast<int>(c));
      if (!inserted && it->second != static_cast<int>(c))
        ++shared[static_cast<std::size_t>(it->second)][c];
    }
  }
  std::vector<std::string> warnings;
  for (std::size_t a = 0; a < data.size(); ++a) {
    for (std::size_t b = 0; b < data.size(); ++b) {
      if (shared[a][b] > 0)
        warnings.push_back("conditions " + std::to_string(a + 1) + " and " + std::to_string(b + 1) +
                           " share " + std::to_string(shared[a][b]) + " identical data rows");
    }
  }
  return warnings;
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

Study load_study(const std::string& data_dir, const std::string& design_path,
                 std::optional<double> censor_threshold) {
  const fs::path dir(data_dir);
  const fs::path design_file = design_path.empty() ? dir / "design.json" : fs::path(design_path);
  const ordered_json design_json = load_json_file(design_file.string());

  if (design_json.value("schema", "") != kDesignSchema)
    throw ParseError(design_file.string() + ": expected schema '" + kDesignSchema + "'");

  Study study;
  for (const auto& name : design_json.at("compounds"))
    study.compound_names.push_back(name.get<std::string>());
  const int d = study.num_compounds();
  if (d == 0) throw ParseError(design_file.string() + ": no compounds");

  study.censor_threshold =
      censor_threshold.value_or(design_json.value("censor_threshold", 1.0));
  if (!(study.censor_threshold > 0.0))
    throw std::invalid_argument("censor threshold must be positive");
  const bool log_space = design_json.value("space", "raw") == std::string("log");
  const double log_theta = std::log(study.censor_threshold);

  const auto& conditions = design_json.at("conditions");
  const int k = static_cast<int>(conditions.size());
  if (k == 0) throw ParseError(design_file.string() + ": no conditions");
  study.censor_fractions.setZero(k, d);

  int expected_index = 1;
  for (const auto& cond : conditions) {
    if (cond.value("index", expected_index) != expected_index)
      throw ParseError(design_file.string() + ": condition indices must run 1.." +
                       std::to_string(k));
    ++expected_index;
    study.design.conditions.push_back(intervention_from_json(cond, study.compound_names));
    study.design.names.push_back(cond.value("name", "condition_" + std::to_string(expected_index - 1)));

    const std::string data_name = cond.at("data").get<std::string>();
    Table table = read_table((dir / data_name).string());
    if (table.header != study.compound_names)
      throw ParseError(data_name + ": column header does not match the design's compounds");

    const int c = static_cast<int>(study.data.size());
    if (log_space) {
      for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
        for (int i = 0; i < d; ++i) {
          if (table.values(r, i) == log_theta) study.censor_fractions(c, i) += 1.0;
        }
      }
    } else {
      for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
        for (int i = 0; i < d; ++i) {
          double& v = table.values(r, i);
          if (v < study.censor_threshold) {
            v = log_theta;
            study.censor_fractions(c, i) += 1.0;
          } else {
            v = std::log(v);
          }
        }
      }
    }
    if (table.values.rows() > 0)
      study.censor_fractions.row(c) /= static_cast<double>(table.values.rows());
    study.data.push_back(std::move(table.values));
  }

  study.warnings = study.design.validate(d);
  for (auto& w : find_duplicate_rows(study.data)) study.warnings.push_back(std::move(w));
  return study;
}

void save_study(const Study& study, const std::string& dir) {
  fs::create_directories(dir);
  ordered_json design_json;
  design_json["schema"] = kDesignSchema;
  design_json["compounds"] = study.compound_names;
  design_json["censor_threshold"] = study.censor_threshold;
  design_json["space"] = "log";
  ordered_json conditions = ordered_json::array();
  for (int c = 0; c < study.num_conditions(); ++c) {
    ordered_json cond;
    cond["index"] = c + 1;
    cond["name"] = c < static_cast<int>(study.design.names.size())
                       ? study.design.names[c]
                       : "condition_" + std::to_string(c + 1);
    cond["kind"] = to_string(study.design.conditions[c].kind);
    ordered_json targets = ordered_json::array();
    for (int t : study.design.conditions[c].targets) targets.push_back(study.compound_names[t]);
    cond["targets"] = targets;
    const std::string data_name = "condition_" + std::to_string(c + 1) + ".tsv";
    cond["data"] = data_name;
    write_table((fs::path(dir) / data_name).string(), study.compound_names, study.data[c]);
    conditions.push_back(std::move(cond));
  }
  design_json["conditions"] = std::move(conditions);
  write_text_file((fs::path(dir) / "design.json").string(), design_json.dump(2) + "\n");
}

Study to_study(const SimulatedStudy& sim, const std::vector<std::string>& compound_names,
               double censor_threshold) {
  const int d = sim.truth.graph.num_compounds();
  if (static_cast<int>(compound_names.size()) != d)
    throw std::invalid_argument("to_study: compound name count mismatch");
  Study study;
  study.compound_names = compound_names;
  study.design = sim.design;
  study.data = sim.data;
  study.censor_threshold = censor_threshold;
  const int k = sim.design.num_conditions();
  study.censor_fractions.setZero(k, d);
  const double log_theta = std::log(censor_threshold);
  for (int c = 0; c < k; ++c) {
    const auto& x = study.data[c];
    if (x.rows() == 0) continue;
    for (int i = 0; i < d; ++i) {
      int hits = 0;
      for (Eigen::Index r = 0; r < x.rows(); ++r) hits += x(r, i) == log_theta ? 1 : 0;
      study.censor_fractions(c, i) = static_cast<double>(hits) / static_cast<double>(x.rows());
    }
  }
  study.warnings = study.design.validate(d);
  return study;
}

namespace {

/// Asymptotic Kolmogorov survival function Q(t) = P(sup > t).
double kolmogorov_q(double t) {
  if (t < 1e-8) return 1.0;
  double q;
  if (t < 1.18) {
    // theta-function form, accurate for small t
    const double f = std::exp(-M_PI * M_PI / (8.0 * t * t));
    const double cdf =
        (std::sqrt(2.0 * M_PI) / t) * (f + std::pow(f, 9.0) + std::pow(f, 25.0) + std::pow(f, 49.0));
    q = 1.0 - cdf;
  } else {
    q = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
      const double term = std::exp(-2.0 * k * k * t * t);
      q += 2.0 * sign * term;
      sign = -sign;
      if (term < 1e-300) break;
    }
  }
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace

KsResult ks_two_sample(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const int nx = static_cast<int>(x.size());
  const int ny = static_cast<int>(y.size());
  if (nx == 0 || ny == 0) throw std::invalid_argument("ks_two_sample: empty sample");

  std::vector<double> xs(x.data(), x.data() + nx);
  std::vector<double> ys(y.data(), y.data() + ny);
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());

  double statistic = 0.0;
  int ix = 0;
  int iy = 0;
  while (ix < nx && iy < ny) {
    const double v = std::min(xs[ix], ys[iy]);
    while (ix < nx && xs[ix] <= v) ++ix;
    while (iy < ny && ys[iy] <= v) ++iy;
    statistic = std::max(statistic,
                         std::abs(static_cast<double>(ix) / nx - static_cast<double>(iy) / ny));
  }

  const double n_eff = static_cast<double>(nx) * ny / (static_cast<double>(nx) + ny);
  KsResult result;
  result.statistic = statistic;
  result.p_value = kolmogorov_q(std::sqrt(n_eff) * statistic);
  return result;
}

Eigen::MatrixXd explore(const Study& study, double ceiling) {
  const int k = study.num_conditions();
  const int d = study.num_compounds();
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(k, d);
  for (int c = 1; c < k; ++c) {
    for (int i = 0; i < d; ++i) {
      const KsResult ks = ks_two_sample(study.data[c].col(i), study.data[0].col(i));
      const double neg_log_p = ks.p_value > 0.0 ? -std::log(ks.p_value) : ceiling;
      table(c, i) = std::min(neg_log_p, ceiling);
    }
  }
  return table;
}

std::string graph_to_dot(const Graph& g, const std::vector<std::string>& names) {
  if (static_cast<int>(names.size()) != g.num_compounds())
    throw std::invalid_argument("graph_to_dot: name count mismatch");
  std::ostringstream out;
  out << "digraph structure {\n";
  for (const auto& name : names) out << "  \"" << name << "\";\n";
  for (const auto& [i, j] : g.edges()) out << "  \"" << names[i] << "\" -> \"" << names[j] << "\";\n";
  out << "}\n";
  return out.str();
}

std::string frequencies_to_dot(const EdgeFrequencies& frequencies,
                               const std::vector<std::string>& names, double min_frequency) {
  const int d = static_cast<int>(frequencies.freq.rows());
  if (static_cast<int>(names.size()) != d)
    throw std::invalid_argument("frequencies_to_dot: name count mismatch");
  std::ostringstream out;
  out << "digraph stability {\n";
  for (const auto& name : names) out << "  \"" << name << "\";\n";
  char attr[128];
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double f = frequencies.freq(i, j);
      if (i == j || f <= min_frequency) continue;
      const int alpha = static_cast<int>(std::lround(255.0 * f));
      std::snprintf(attr, sizeof(attr), " [penwidth=%.3f, color=\"#000000%02X\", label=\"%.2f\"]",
                    0.5 + 4.5 * f, alpha, f);
      out << "  \"" << names[i] << "\" -> \"" << names[j] << "\"" << attr << ";\n";
    }
  }
  out << "}\n";
  return out.str();
}

Graph read_graph_file(const std::string& path, const std::vector<std::string>& compound_names) {
  const ordered_json j = load_json_file(path);
  if (j.value("schema", "") != kGraphSchema)
    throw ParseError(path + ": expected schema '" + kGraphSchema + "'");
  std::vector<std::string> names = compound_names;
  if (names.empty()) {
    for (const auto& n : j.at("compounds")) names.push_back(n.get<std::string>());
  }
  Graph g(static_cast<int>(names.size()));
  for (const auto& e : j.at("edges")) {
    const int from = compound_index(e.at(0).get<std::string>(), names, path);
    const int to = compound_index(e.at(1).get<std::string>(), names, path);
    g.set_edge(from, to, true);
  }
  return g;
}

void write_graph_file(const Graph& g, const std::vector<std::string>& compound_names,
                      const std::string& path) {
  ordered_json j;
  j["schema"] = kGraphSchema;
  j["compounds"] = compound_names;
  ordered_json edges = ordered_json::array();
  for (const auto& [i, j2] : g.edges())
    edges.push_back(ordered_json::array({compound_names[i], compound_names[j2]}));
  j["edges"] = std::move(edges);
  write_text_file(path, j.dump(2) + "\n");
}

GroundTruthSpec read_model_file(const std::string& path) {
  const ordered_json j = load_json_file(path);
  if (j.value("schema", "") != kModelSchema)
    throw ParseError(path + ": expected schema '" + kModelSchema + "'");

  std::vector<std::string> names;
  for (const auto& n : j.at("compounds")) names.push_back(n.get<std::string>());
  const int d = static_cast<int>(names.size());
  if (d == 0) throw ParseError(path + ": no compounds");

  Graph g(d);
  ConditionParameters base = ConditionParameters::zero(d);
  for (const auto& e : j.at("edges")) {
    const int from = compound_index(e.at("from").get<std::string>(), names, path);
    const int to = compound_index(e.at("to").get<std::string>(), names, path);
    g.set_edge(from, to, true);
    base.b(from, to) = e.value("weight", 1.0);
  }
  if (j.contains("mu")) {
    if (static_cast<int>(j["mu"].size()) != d) throw ParseError(path + ": mu length mismatch");
    for (int i = 0; i < d; ++i) base.mu[i] = j["mu"][i].get<double>();
  }
  if (j.contains("a")) {
    if (static_cast<int>(j["a"].size()) != d) throw ParseError(path + ": a length mismatch");
    for (int i = 0; i < d; ++i) base.a[i] = j["a"][i].get<double>();
  }

  GroundTruthSpec spec{GroundTruthModel{g, std::move(base),
                                        noise_model_from_string(j.value("noise", "gaussian"))},
                       names,
                       {}};
  for (const auto& cond : j.at("design")) {
    spec.design.conditions.push_back(intervention_from_json(cond, names));
    spec.design.names.push_back(
        cond.value("name", "condition_" + std::to_string(spec.design.conditions.size())));
  }
  spec.design.validate(d);
  return spec;
}

}  // namespace ccdeq
