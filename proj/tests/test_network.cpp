#include <cmath>

#include "doctest.h"
#include "nash_adm/error.hpp"
#include "nash_adm/network.hpp"
#include "nash_adm/random.hpp"
#include "oracles.hpp"

using namespace nash_adm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

oracle::Mat to_rows(const MatrixXd& m) {
  oracle::Mat out = oracle::zeros(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

}  // namespace

TEST_CASE("random tree shapes") {
  CHECK(random_tree(1, 0).edges.empty());
  const Graph two = random_tree(2, 99);
  REQUIRE(two.edges.size() == 1);
  CHECK(two.edges[0] == Edge{0, 1});
  const Graph five = random_tree(5, 3);
  CHECK(five.edges.size() == 4);
  CHECK(oracle::bfs_connected(5, five.edges));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = random_tree(30, seed);
    CHECK(g.edges.size() == 29);
    CHECK(oracle::bfs_connected(30, g.edges));
  }
  CHECK(random_tree(12, 4) == random_tree(12, 4));
}

TEST_CASE("metropolis examples") {
  const MixingMatrix two(path_graph(2), MixingRule::kMetropolis);
  CHECK(two.weights().isApprox(MatrixXd::Constant(2, 2, 0.5)));
  const auto sv2 = oracle::singular_values(to_rows(two.weights()));
  CHECK(sv2[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(two.sigma() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(two.norm_i_minus_w() == doctest::Approx(1.0));

  const MixingMatrix tri(complete_graph(3), MixingRule::kMetropolis);
  CHECK(tri.weights().isApprox(MatrixXd::Constant(3, 3, 1.0 / 3.0)));
  CHECK(tri.norm_i_minus_w() == doctest::Approx(1.0));
  CHECK(tri.sigma() == doctest::Approx(0.0).epsilon(1e-12));

  const MixingMatrix one(Graph{1, {}}, MixingRule::kMetropolis);
  CHECK(one.weights()(0, 0) == 1.0);
  CHECK(one.sigma() == 0.0);
  CHECK(one.norm_i_minus_w() == 0.0);
}

TEST_CASE("three-node path against an explicit oracle") {
  const MixingMatrix w(path_graph(3), MixingRule::kMetropolis);
  // Degrees 1, 2, 1: edge weights 1/3, remainder on the diagonal.
  const oracle::Mat expected = {{2.0 / 3, 1.0 / 3, 0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0, 1.0 / 3, 2.0 / 3}};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(w.weights()(r, c) == doctest::Approx(expected[r][c]));
  const auto sv = oracle::singular_values(expected);
  CHECK(std::abs(w.sigma() - sv[1]) <= 1e-10);
  oracle::Mat iw = expected;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) iw[i][j] = (i == j ? 1.0 : 0.0) - expected[i][j];
  CHECK(std::abs(w.norm_i_minus_w() - oracle::singular_values(iw)[0]) <= 1e-10);
}

TEST_CASE("lazy variant halves the off-diagonal") {
  const Graph g = random_tree(8, 2);
  const MixingMatrix plain(g, MixingRule::kMetropolis);
  const MixingMatrix lazy(g, MixingRule::kLazyMetropolis);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      if (r == c)
        CHECK(lazy.weights()(r, c) == doctest::Approx(0.5 * plain.weights()(r, c) + 0.5));
      else
        CHECK(lazy.weights()(r, c) == doctest::Approx(0.5 * plain.weights()(r, c)));
    }
}

TEST_CASE("mixing invariants") {
  for (auto rule : {MixingRule::kMetropolis, MixingRule::kLazyMetropolis}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const MixingMatrix w(random_tree(15, seed), rule);
      const MatrixXd& W = w.weights();
      CHECK((W - W.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(W.minCoeff() >= 0.0);
      CHECK((W.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
      CHECK((W.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
      int positive_off = 0;
      for (int r = 0; r < 15; ++r)
        for (int c = 0; c < 15; ++c)
          if (r != c && W(r, c) > 0) ++positive_off;
      CHECK(positive_off == 2 * 14);  // exactly the tree edges, both directions
      CHECK(w.sigma() >= 0.0);
      CHECK(w.sigma() < 1.0);
      // Consensus is a fixed point.
      const MatrixXd C = VectorXd::Ones(15) * VectorXd::LinSpaced(4, -1, 2).transpose();
      CHECK((W * C - C).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("averaging contraction sampled") {
  const MixingMatrix w(random_tree(12, 7), MixingRule::kMetropolis);
  Rng rng(1);
  for (int s = 0; s < 1000; ++s) {
    VectorXd x(12);
    for (int i = 0; i < 12; ++i) x[i] = rng.uniform(-5, 5);
    const VectorXd centered = x - VectorXd::Constant(12, x.mean());
    const VectorXd wx = w.weights() * x - VectorXd::Constant(12, x.mean());
    CHECK(wx.norm() <= w.sigma() * centered.norm() + 1e-12);
  }
}

TEST_CASE("power iteration agrees with the SVD path") {
  const MixingMatrix w(random_tree(40, 5), MixingRule::kLazyMetropolis);
  const auto sv = oracle::singular_values(to_rows(w.weights()));
  CHECK(std::abs(contraction_factor(w.weights()) - sv[1]) <= 1e-9);

  // n > 512 takes the power-iteration path. Lazy weights are PSD, so the
  // second singular value is the second largest eigenvalue.
  const MixingMatrix big(random_tree(600, 1), MixingRule::kLazyMetropolis);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(big.weights());
  const auto ev = es.eigenvalues();
  CHECK(std::abs(big.sigma() - ev[ev.size() - 2]) <= 1e-8);
}

TEST_CASE("disconnected graphs are rejected") {
  Graph g{4, {{0, 1}, {2, 3}}};
  CHECK_THROWS_AS(MixingMatrix(g, MixingRule::kMetropolis), Error);
  CHECK_FALSE(is_connected(g));
}

TEST_CASE("graph json round trip re-derives W") {
  const MixingMatrix w(random_tree(9, 8), MixingRule::kLazyMetropolis);
  const auto doc = to_json(w.graph(), w.rule());
  CHECK_FALSE(doc.contains("W"));
  const MixingMatrix back = mixing_from_json(nlohmann::json::parse(doc.dump()));
  CHECK(back.weights() == w.weights());
  CHECK(back.rule() == MixingRule::kLazyMetropolis);
}
