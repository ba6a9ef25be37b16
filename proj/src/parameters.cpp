#include "ccdeq/parameters.hpp"

#include <stdexcept>

namespace ccdeq {

ConditionParameters ConditionParameters::zero(int d) {
  ConditionParameters p;
  p.b = Eigen::MatrixXd::Zero(d, d);
  p.mu = Eigen::VectorXd::Zero(d);
  p.a = Eigen::VectorXd::Zero(d);
  return p;
}

void ConditionParameters::check_mask(const Graph& g) const {
  const int d = g.num_compounds();
  if (b.rows() != d || b.cols() != d || mu.size() != d || a.size() != d)
    throw std::invalid_argument("ConditionParameters: dimension mismatch with graph");
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      if (b(i, j) != 0.0 && !((i != j) && g.edge(i, j)))
        throw std::invalid_argument("ConditionParameters: nonzero b entry outside graph mask");
    }
  }
}

int num_free_per_condition(const Graph& g) { return g.edge_count() + 2 * g.num_compounds(); }

std::vector<int> masked_column_offsets(const Graph& g) {
  const int d = g.num_compounds();
  std::vector<int> offsets(d + 1, 0);
  for (int j = 0; j < d; ++j)
    offsets[j + 1] = offsets[j] + static_cast<int>(g.parents(j).size());
  return offsets;
}

Eigen::VectorXd pack_parameters(const ParameterSet& params, const Graph& g) {
  const int d = g.num_compounds();
  const int per = num_free_per_condition(g);
  Eigen::VectorXd v(static_cast<Eigen::Index>(per) * params.num_conditions());
  Eigen::Index pos = 0;
  for (const auto& p : params.per_condition) {
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i) {
        if (g.edge(i, j)) v[pos++] = p.b(i, j);
      }
    }
    v.segment(pos, d) = p.mu;
    pos += d;
    v.segment(pos, d) = p.a;
    pos += d;
  }
  return v;
}

ParameterSet unpack_parameters(const Eigen::VectorXd& v, const Graph& g, int num_conditions) {
  const int d = g.num_compounds();
  const int per = num_free_per_condition(g);
  if (v.size() != static_cast<Eigen::Index>(per) * num_conditions)
    throw std::invalid_argument("unpack_parameters: vector length mismatch");
  ParameterSet out;
  out.per_condition.reserve(num_conditions);
  Eigen::Index pos = 0;
  for (int c = 0; c < num_conditions; ++c) {
    ConditionParameters p = ConditionParameters::zero(d);
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i) {
        if (g.edge(i, j)) p.b(i, j) = v[pos++];
      }
    }
    p.mu = v.segment(pos, d);
    pos += d;
    p.a = v.segment(pos, d);
    pos += d;
    out.per_condition.push_back(std::move(p));
  }
  return out;
}

}  // namespace ccdeq
