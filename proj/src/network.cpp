#include "nash_adm/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "nash_adm/error.hpp"
#include "nash_adm/random.hpp"

namespace nash_adm {

namespace {

constexpr int kSvdLimit = 512;
constexpr int kPowerIterations = 5000;

[[noreturn]] void input_error(const std::string& what) {
  throw Error(ErrorCode::kInput, what);
}

void normalize_edges(Graph& graph) {
  std::set<Edge> unique;
  for (auto [a, b] : graph.edges) {
    if (a < 0 || b < 0 || a >= graph.n || b >= graph.n)
      input_error("graph edge references a node out of range");
    if (a == b) input_error("graph self-loops are not allowed");
    unique.insert({std::min(a, b), std::max(a, b)});
  }
  graph.edges.assign(unique.begin(), unique.end());
}

}  // namespace

Graph random_tree(int n, std::uint64_t seed) {
  if (n < 1) input_error("random_tree: n must be >= 1");
  Graph graph{n, {}};
  Rng rng(seed);
  for (int k = 1; k < n; ++k) {
    const int parent = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    graph.edges.emplace_back(parent, k);
  }
  return graph;
}

Graph path_graph(int n) {
  if (n < 1) input_error("path_graph: n must be >= 1");
  Graph graph{n, {}};
  for (int k = 1; k < n; ++k) graph.edges.emplace_back(k - 1, k);
  return graph;
}

Graph complete_graph(int n) {
  if (n < 1) input_error("complete_graph: n must be >= 1");
  Graph graph{n, {}};
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) graph.edges.emplace_back(a, b);
  return graph;
}

bool is_connected(const Graph& graph) {
  if (graph.n <= 1) return graph.n == 1;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(graph.n));
  for (auto [a, b] : graph.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(static_cast<std::size_t>(graph.n), 0);
  std::queue<int> todo;
  todo.push(0);
  seen[0] = 1;
  int count = 1;
  while (!todo.empty()) {
    const int v = todo.front();
    todo.pop();
    for (int u : adj[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        todo.push(u);
      }
    }
  }
  return count == graph.n;
}

std::string to_string(MixingRule rule) {
  return rule == MixingRule::kMetropolis ? "metropolis" : "lazy_metropolis";
}

MixingRule parse_mixing_rule(std::string_view text) {
  if (text == "metropolis") return MixingRule::kMetropolis;
  if (text == "lazy_metropolis" || text == "lazy") return MixingRule::kLazyMetropolis;
  input_error("unknown mixing rule '" + std::string(text) + "'");
}

MixingMatrix::MixingMatrix(Graph graph, MixingRule rule)
    : graph_(std::move(graph)), rule_(rule) {
  if (graph_.n < 1) input_error("mixing matrix needs at least one node");
  normalize_edges(graph_);
  if (!is_connected(graph_))
    input_error("communication graph is disconnected; mixing requires a connected graph");

  const int n = graph_.n;
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  for (auto [a, b] : graph_.edges) {
    ++degree[a];
    ++degree[b];
  }
  w_ = Eigen::MatrixXd::Zero(n, n);
  const double scale = rule_ == MixingRule::kLazyMetropolis ? 0.5 : 1.0;
  for (auto [a, b] : graph_.edges) {
    const double v = scale / (1.0 + std::max(degree[a], degree[b]));
    w_(a, b) = v;
    w_(b, a) = v;
  }
  for (int i = 0; i < n; ++i) w_(i, i) = 1.0 - (w_.row(i).sum() - w_(i, i));

  sigma_ = contraction_factor(w_);
  norm_iw_ = nash_adm::norm_i_minus_w(w_);
}

double contraction_factor(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  if (n <= 1) return 0.0;
  if (n <= kSvdLimit) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(w);
    return svd.singularValues()(1);
  }
  // W symmetric stochastic: its top singular pair is (1, 1/sqrt(n)), so the
  // second one is the spectral norm of the deflated matrix M. Iterate on M^2
  // so eigenvalues of opposite sign cannot make the iterate oscillate.
  const Eigen::MatrixXd deflated =
      w - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(n, 1.0, 2.0);
  v -= Eigen::VectorXd::Constant(n, v.mean());
  v.normalize();
  for (int it = 0; it < kPowerIterations; ++it) {
    const Eigen::VectorXd mv = deflated * v;
    const Eigen::VectorXd m2v = deflated * mv;
    const double rho = mv.squaredNorm();
    if (rho == 0.0) return 0.0;
    if ((m2v - rho * v).norm() <= 1e-12 * std::max(1.0, rho)) return std::sqrt(rho);
    v = m2v / m2v.norm();
  }
  // Slowly mixing graphs have a tiny spectral gap; settle it exactly.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(deflated, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double norm_i_minus_w(const Eigen::MatrixXd& w) {
  if (w.size() == 0) return 0.0;
  const Eigen::MatrixXd diff = Eigen::MatrixXd::Identity(w.rows(), w.cols()) - w;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(diff);
  return svd.singularValues()(0);
}

nlohmann::json to_json(const Graph& graph, MixingRule rule) {
  nlohmann::json doc;
  doc["n"] = graph.n;
  nlohmann::json edges = nlohmann::json::array();
  for (auto [a, b] : graph.edges) edges.push_back({a, b});
  doc["edges"] = edges;
  doc["rule"] = to_string(rule);
  return doc;
}

MixingMatrix mixing_from_json(const nlohmann::json& doc) {
  try {
    Graph graph;
    graph.n = doc.at("n").get<int>();
    for (const auto& e : doc.at("edges"))
      graph.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    return MixingMatrix(std::move(graph),
                        parse_mixing_rule(doc.value("rule", std::string("metropolis"))));
  } catch (const nlohmann::json::exception& e) {
    input_error(std::string("graph json: ") + e.what());
  }
}

}  // namespace nash_adm
