#ifndef CCDEQ_GRAPH_HPP_
#define CCDEQ_GRAPH_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ccdeq {

/// Directed graph on D compounds. Cycles are allowed, self-loops are not.
/// Entry (i, j) of the adjacency matrix is true iff there is an edge
/// x_i -> x_j, i.e. i is a parent (direct cause) of j.
class Graph {
 public:
  explicit Graph(int d);
  Graph(int d, const std::vector<std::pair<int, int>>& edges);

  int num_compounds() const { return d_; }
  bool edge(int i, int j) const;
  void set_edge(int i, int j, bool present);
  int edge_count() const;

  std::vector<int> parents(int j) const;
  std::vector<int> children(int i) const;
  std::vector<std::pair<int, int>> edges() const;

  /// True iff a topological order exists (Kahn-style elimination).
  bool is_acyclic() const;

  /// Stable string encoding: compound count plus row-major adjacency bits.
  /// Equal graphs have equal keys; used as a cache key by the search.
  std::string canonical_key() const;

  bool operator==(const Graph& other) const { return d_ == other.d_ && adj_ == other.adj_; }
  bool operator!=(const Graph& other) const { return !(*this == other); }

 private:
  void check_index(int i) const;

  int d_;
  std::vector<std::uint8_t> adj_;  // row-major d_ x d_
};

}  // namespace ccdeq

#endif  // CCDEQ_GRAPH_HPP_
