#include "ccdeq/graph.hpp"

#include <stdexcept>

namespace ccdeq {

Graph::Graph(int d) : d_(d), adj_(static_cast<std::size_t>(d) * d, 0) {
  if (d <= 0) throw std::invalid_argument("Graph: compound count must be positive");
}

Graph::Graph(int d, const std::vector<std::pair<int, int>>& edges) : Graph(d) {
  for (const auto& [i, j] : edges) set_edge(i, j, true);
}

void Graph::check_index(int i) const {
  if (i < 0 || i >= d_) throw std::out_of_range("Graph: compound index out of range");
}

bool Graph::edge(int i, int j) const {
  check_index(i);
  check_index(j);
  return adj_[static_cast<std::size_t>(i) * d_ + j] != 0;
}

void Graph::set_edge(int i, int j, bool present) {
  check_index(i);
  check_index(j);
  if (i == j && present) throw std::invalid_argument("Graph: self-loops are not allowed");
  adj_[static_cast<std::size_t>(i) * d_ + j] = present ? 1 : 0;
}

int Graph::edge_count() const {
  int n = 0;
  for (std::uint8_t e : adj_) n += e;
  return n;
}

std::vector<int> Graph::parents(int j) const {
  check_index(j);
  std::vector<int> out;
  for (int i = 0; i < d_; ++i) {
    if (adj_[static_cast<std::size_t>(i) * d_ + j]) out.push_back(i);
  }
  return out;
}

std::vector<int> Graph::children(int i) const {
  check_index(i);
  std::vector<int> out;
  for (int j = 0; j < d_; ++j) {
    if (adj_[static_cast<std::size_t>(i) * d_ + j]) out.push_back(j);
  }
  return out;
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < d_; ++i) {
    for (int j = 0; j < d_; ++j) {
      if (adj_[static_cast<std::size_t>(i) * d_ + j]) out.emplace_back(i, j);
    }
  }
  return out;
}

bool Graph::is_acyclic() const {
  std::vector<int> indegree(d_, 0);
  for (int i = 0; i < d_; ++i) {
    for (int j = 0; j < d_; ++j) {
      if (adj_[static_cast<std::size_t>(i) * d_ + j]) ++indegree[j];
    }
  }
  std::vector<int> queue;
  queue.reserve(d_);
  for (int j = 0; j < d_; ++j) {
    if (indegree[j] == 0) queue.push_back(j);
  }
  int removed = 0;
  while (!queue.empty()) {
    int v = queue.back();
    queue.pop_back();
    ++removed;
    for (int j = 0; j < d_; ++j) {
      if (adj_[static_cast<std::size_t>(v) * d_ + j] && --indegree[j] == 0) queue.push_back(j);
    }
  }
  return removed == d_;
}

std::string Graph::canonical_key() const {
  std::string key = std::to_string(d_);
  key.push_back(':');
  key.reserve(key.size() + adj_.size());
  for (std::uint8_t e : adj_) key.push_back(e ? '1' : '0');
  return key;
}

}  // namespace ccdeq
