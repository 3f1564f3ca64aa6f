#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace nash_adm {

/// Undirected edge between 0-based node indices, stored with first < second.
using Edge = std::pair<int, int>;

struct Graph {
  int n = 0;
  std::vector<Edge> edges;

  bool operator==(const Graph&) const = default;
};

/// Spanning tree by random attachment: node k links to a uniformly drawn
/// earlier node. Exactly n - 1 edges.
Graph random_tree(int n, std::uint64_t seed);

Graph path_graph(int n);
Graph complete_graph(int n);

bool is_connected(const Graph& graph);

enum class MixingRule { kMetropolis, kLazyMetropolis };

std::string to_string(MixingRule rule);
MixingRule parse_mixing_rule(std::string_view text);

class MixingMatrix {
 public:
  /// Throws an input error if the graph is disconnected or malformed.
  MixingMatrix(Graph graph, MixingRule rule);

  const Eigen::MatrixXd& weights() const { return w_; }
  const Graph& graph() const { return graph_; }
  MixingRule rule() const { return rule_; }
  int size() const { return graph_.n; }

  /// Second largest singular value of W.
  double sigma() const { return sigma_; }
  /// Spectral norm of I - W.
  double norm_i_minus_w() const { return norm_iw_; }

 private:
  Graph graph_;
  MixingRule rule_;
  Eigen::MatrixXd w_;
  double sigma_ = 0.0;
  double norm_iw_ = 0.0;
};

/// sigma of an arbitrary symmetric stochastic matrix. Full SVD up to n = 512,
/// power iteration on W - 11'/n beyond.
double contraction_factor(const Eigen::MatrixXd& w);
double norm_i_minus_w(const Eigen::MatrixXd& w);

nlohmann::json to_json(const Graph& graph, MixingRule rule);
/// W is never stored; it is re-derived from the edges and rule.
MixingMatrix mixing_from_json(const nlohmann::json& doc);

}  // namespace nash_adm
