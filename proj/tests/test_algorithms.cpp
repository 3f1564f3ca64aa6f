#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nash_adm/algorithms.hpp"
#include "nash_adm/error.hpp"
#include "nash_adm/harness.hpp"
#include "nash_adm/random.hpp"
#include "oracles.hpp"

using namespace nash_adm;

namespace {

Game scalar_identity(double lo = -1, double hi = 1) {
  return Game({1}, Matrix::Identity(1, 1), Vector::Zero(1), BoxSet::uniform(1, lo, hi),
              Monotonicity::kStronglyMonotone, 1.0);
}

Game identity2(Vector h = Vector::Zero(2), double lo = -1, double hi = 1) {
  return Game({1, 1}, Matrix::Identity(2, 2), std::move(h), BoxSet::uniform(2, lo, hi),
              Monotonicity::kStronglyMonotone, 1.0);
}

Game skew_example() {
  Matrix g(2, 2);
  g << 2, 1, 0, 3;
  Vector h(2);
  h << 1, -1;
  return Game({1, 1}, g, h, BoxSet::uniform(2, -10, 10), Monotonicity::kStronglyMonotone, 1.5);
}

oracle::Mat rows(const Matrix& m) {
  oracle::Mat out = oracle::zeros(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

bool throws_code(ErrorCode code, auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

}  // namespace

TEST_CASE("augmented pseudo-gradient places own gradients") {
  const Game g = skew_example();
  Matrix X(2, 2);
  X << 1, 2, 3, 4;
  const Matrix F = augmented_pseudo_gradient(g, X);
  // Row 0: 2*1 + 1*2 + 1 = 5 in column 0. Row 1: 0*3 + 3*4 - 1 = 11 in column 1.
  CHECK(F(0, 0) == doctest::Approx(5));
  CHECK(F(0, 1) == 0);
  CHECK(F(1, 0) == 0);
  CHECK(F(1, 1) == doctest::Approx(11));

  // Consensus rows recover the pseudo-gradient on the owner blocks.
  Vector x(2);
  x << 0.3, -0.7;
  const Matrix C = Vector::Ones(2) * x.transpose();
  const Matrix Fc = augmented_pseudo_gradient(g, C);
  CHECK(Fc.diagonal().isApprox(g.pseudo_gradient(x)));
}

TEST_CASE("augmented projection clips only owner blocks") {
  const Game g = identity2();
  Matrix X(2, 2);
  X << 3, 5, -7, -0.5;
  const Matrix P = project_augmented(g, X);
  CHECK(P(0, 0) == 1);
  CHECK(P(0, 1) == 5);
  CHECK(P(1, 0) == -7);
  CHECK(P(1, 1) == -0.5);
  CHECK(project_augmented(g, P) == P);
}

TEST_CASE("projection satisfies the three-point inequality") {
  GeneratorOptions opt;
  opt.players = 4;
  opt.dim = 2;
  opt.seed = 4;
  const Game game = generate_game(opt);
  Rng rng(8);
  for (int s = 0; s < 50; ++s) {
    Matrix x(4, 8), g(4, 8);
    for (Index r = 0; r < 4; ++r)
      for (Index c = 0; c < 8; ++c) {
        x(r, c) = rng.uniform(-3, 3);
        g(r, c) = rng.uniform(-3, 3);
      }
    x = project_augmented(game, x);
    const double alpha = rng.uniform(0.01, 1.0);
    const Matrix z = project_augmented(game, x - alpha * g);
    for (int k = 0; k < 100; ++k) {
      Matrix y(4, 8);
      for (Index r = 0; r < 4; ++r)
        for (Index c = 0; c < 8; ++c) y(r, c) = rng.uniform(-3, 3);
      y = project_augmented(game, y);
      const double lhs = alpha * (g.array() * (z - y).array()).sum() + 0.5 * (z - y).squaredNorm();
      const double rhs = 0.5 * (x - y).squaredNorm() - 0.5 * (x - z).squaredNorm();
      CHECK(lhs <= rhs + 1e-10);
    }
  }
}

TEST_CASE("initialisation") {
  const Game g = identity2();
  Matrix W(2, 2);
  W << 0.5, 0.5, 0.5, 0.5;
  Matrix X0(2, 2);
  X0 << 1, 0, 0, 1;
  GradientCounter counter;
  const AdmState st = init_state(g, W, X0, &counter);
  CHECK(st.Xhat_prev.isApprox(Matrix::Constant(2, 2, 0.5)));
  CHECK(st.X.isApprox(Matrix::Constant(2, 2, 0.5)));
  CHECK(st.k == 1);
  CHECK(counter.full == 1);

  const AdmState zero = init_state(g, W, Matrix::Zero(2, 2));
  CHECK(zero.X == Matrix::Zero(2, 2));

  CHECK(throws_code(ErrorCode::kInput, [&] { init_state(g, W, Matrix::Zero(3, 2)); }));
}

TEST_CASE("single player step") {
  const Game g = scalar_identity();
  const Matrix W = Matrix::Identity(1, 1);
  const AdmState st = init_state(g, W, Matrix::Constant(1, 1, 0.5));
  for (double lambda : {0.1, 1.0, 7.0}) {
    const AdmState next = adm_step(st, g, W, 0.1, lambda);
    CHECK(next.X(0, 0) == doctest::Approx(0.45));
    CHECK(next.k == 2);
  }
  CHECK(throws_code(ErrorCode::kInput, [&] { adm_step(st, g, W, 0.0, 1.0); }));
}

TEST_CASE("consensus equilibrium is a fixed point") {
  const MixingMatrix w(random_tree(2, 0), MixingRule::kMetropolis);
  // Interior: G x + h = 0 at x* = (-0.5, 1/3).
  Matrix G(2, 2);
  G << 2, 0, 0, 3;
  Vector h(2);
  h << 1, -1;
  const Game interior({1, 1}, G, h, BoxSet::uniform(2, -10, 10), Monotonicity::kStronglyMonotone, 2.0);
  Vector xs(2);
  xs << -0.5, 1.0 / 3.0;
  // Boundary: unconstrained solution (5, 0) clipped to (1, 0).
  Vector hb(2);
  hb << -5, 0;
  const Game boundary = identity2(hb);
  Vector xb(2);
  xb << 1, 0;
  for (const auto& [game, x] : {std::pair{interior, xs}, std::pair{boundary, xb}}) {
    const Matrix C = Vector::Ones(2) * x.transpose();
    AdmState st = init_state(game, w.weights(), C);
    CHECK((st.X - C).norm() <= 1e-14);
    for (int k = 0; k < 5; ++k) {
      advance(st, game, w.weights(), 0.1, 0.7);
      CHECK((st.X - C).norm() <= 1e-12);
    }
  }
}

TEST_CASE("one step against a straight-line oracle") {
  const Game g = skew_example();
  const MixingMatrix w(complete_graph(2), MixingRule::kMetropolis);
  Matrix X0(2, 2);
  X0 << 1.0, -2.0, 0.5, 3.0;
  AdmState st = init_state(g, w.weights(), X0);
  const Matrix X1 = st.X;
  const Matrix Xhat0 = st.Xhat_prev;
  advance(st, g, w.weights(), 0.05, 1.0);
  const oracle::Mat expected = oracle::adm_step_scalar(
      {{2, 1}, {0, 3}}, {1, -1}, {-10, -10}, {10, 10}, rows(w.weights()), rows(X1),
      rows(Xhat0), 0.05, 1.0);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(std::abs(st.X(r, c) - expected[r][c]) <= 1e-14);

  // A second step exercises a non-zero extrapolation term.
  const Matrix X2 = st.X, Xhat1 = st.Xhat_prev;
  advance(st, g, w.weights(), 0.05, 0.8);
  const oracle::Mat second = oracle::adm_step_scalar(
      {{2, 1}, {0, 3}}, {1, -1}, {-10, -10}, {10, 10}, rows(w.weights()), rows(X2),
      rows(Xhat1), 0.05, 0.8);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(std::abs(st.X(r, c) - second[r][c]) <= 1e-13);
}

TEST_CASE("cached gradients match fresh evaluation") {
  GeneratorOptions opt;
  opt.players = 6;
  opt.dim = 2;
  opt.seed = 2;
  const Game game = generate_game(opt);
  const MixingMatrix w(random_tree(6, 2), MixingRule::kMetropolis);
  AdmState st = init_state(game, w.weights(), random_estimates(game, 3));
  for (int k = 0; k < 30; ++k) {
    advance(st, game, w.weights(), 0.05, 0.9);
    CHECK((st.F_cur - augmented_pseudo_gradient(game, st.X)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((st.F_hat_prev - augmented_pseudo_gradient(game, st.Xhat_prev)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("one full gradient per step") {
  GeneratorOptions opt;
  opt.players = 5;
  opt.seed = 3;
  const Game game = generate_game(opt);
  const MixingMatrix w(random_tree(5, 3), MixingRule::kMetropolis);
  RunOptions ro;
  ro.K = 200;
  ro.gap_every = 0;
  const Schedule s = ConstantSchedule{0.05, 0.9};
  const RunTrace t = run_adm(game, w, s, random_estimates(game, 1), ro);
  CHECK(t.gradient_evaluations == 201);
  CHECK(t.owner_corrections == 201);  // the initial projection also refreshes
}

TEST_CASE("iterates stay feasible") {
  GeneratorOptions opt;
  opt.players = 5;
  opt.dim = 2;
  opt.seed = 5;
  opt.box_lo = -0.2;
  opt.box_hi = 0.2;
  const Game game = generate_game(opt);
  const MixingMatrix w(random_tree(5, 5), MixingRule::kMetropolis);
  AdmState st = init_state(game, w.weights(), random_estimates(game, 5));
  for (int k = 0; k < 100; ++k) {
    advance(st, game, w.weights(), 0.3, 1.0);
    CHECK(game.boxes().contains(game.owner_actions(st.X), 0.0));
  }
}

TEST_CASE("DDP step and fixed point") {
  const Game g = scalar_identity();
  const MixingMatrix w(Graph{1, {}}, MixingRule::kMetropolis);
  RunOptions ro;
  ro.K = 1;
  ro.gap_every = 0;
  ro.store_actions = true;
  const RunTrace t = run_ddp(g, w, 0.1, Matrix::Constant(1, 1, 0.5), ro);
  REQUIRE(t.actions.size() == 1);
  CHECK(t.actions[0][0] == doctest::Approx(0.45));

  Vector hb(2);
  hb << -5, 0;
  const Game boundary = identity2(hb);
  const MixingMatrix w2(complete_graph(2), MixingRule::kMetropolis);
  Vector xb(2);
  xb << 1, 0;
  ro.K = 10;
  const RunTrace f = run_ddp(boundary, w2, 0.2, Vector::Ones(2) * xb.transpose(), ro);
  CHECK((f.final_action - xb).norm() <= 1e-14);
}

TEST_CASE("DDP error decreases on a strong game for alpha below 1/L") {
  GeneratorOptions opt;
  opt.players = 10;
  opt.seed = 1;
  const Game game = generate_game(opt);
  const MixingMatrix w(random_tree(10, 1), MixingRule::kMetropolis);
  RunOptions ro;
  ro.K = 3000;
  ro.gap_every = 0;
  ro.x_star = reference_solution(game);
  const double L = lipschitz_constant(game);
  const RunTrace t = run_ddp(game, w, 0.5 / L, random_estimates(game, 1), ro);
  CHECK(t.records.back().rel_error < 0.01 * t.records.front().rel_error);
}

TEST_CASE("centralized gradient play") {
  Vector ones = Vector::Ones(2);
  RunOptions ro;
  ro.gap_every = 0;
  ro.store_actions = true;
  const CentralizedResult r = run_centralized(identity2(), 0.5, 10, ones, ro);
  CHECK(r.x_star[0] == doctest::Approx(std::pow(0.5, 10)));
  CHECK(r.x_star[1] == doctest::Approx(std::pow(0.5, 10)));

  Matrix G(2, 2);
  G << 2, 0, 0, 3;
  Vector h(2);
  h << 1, -1;
  const Game g({1, 1}, G, h, BoxSet::uniform(2, -10, 10), Monotonicity::kStronglyMonotone, 2.0);
  const Vector xs = reference_solution(g);
  CHECK(xs[0] == doctest::Approx(-0.5));
  CHECK(xs[1] == doctest::Approx(1.0 / 3.0));

  Vector hb(2);
  hb << -5, 0;
  const Vector xb = reference_solution(identity2(hb));
  CHECK(xb[0] == doctest::Approx(1.0));
  CHECK(std::abs(xb[1]) <= 1e-14);

  CHECK(throws_code(ErrorCode::kInput, [&] { run_centralized(g, 5.0, 10, Vector::Zero(2)); }));
}

TEST_CASE("expanding gradient play is reported") {
  Matrix rot(2, 2);
  rot << 0, 1, -1, 0;
  const Game g({1, 1}, rot, Vector::Zero(2), BoxSet::uniform(2, -1e6, 1e6),
               Monotonicity::kMerelyMonotone);
  Vector x0(2);
  x0 << 1, 0;
  CHECK(throws_code(ErrorCode::kNonContraction, [&] { run_centralized(g, 0.1, 5000, x0); }));
}

TEST_CASE("K = 0 keeps only the initial record") {
  const Game g = identity2();
  const MixingMatrix w(complete_graph(2), MixingRule::kMetropolis);
  RunOptions ro;
  ro.K = 0;
  const RunTrace t = run_adm(g, w, Schedule(ConstantSchedule{0.1, 1.0}), Matrix::Constant(2, 2, 0.3), ro);
  REQUIRE(t.records.size() == 1);
  CHECK(t.records[0].iter == 0);
}

TEST_CASE("runs are deterministic") {
  GeneratorOptions opt;
  opt.players = 6;
  opt.dim = 2;
  opt.seed = 6;
  const Game game = generate_game(opt);
  const MixingMatrix w(random_tree(6, 6), MixingRule::kMetropolis);
  RunOptions ro;
  ro.K = 300;
  ro.gap_every = 50;
  ro.x_star = reference_solution(game);
  const Schedule s = ConstantSchedule{0.05, 0.5};
  std::ostringstream a, b;
  run_adm(game, w, s, random_estimates(game, 2), ro).write_csv(a, false);
  run_adm(game, w, s, random_estimates(game, 2), ro).write_csv(b, false);
  CHECK(a.str() == b.str());
  CHECK(a.str().size() > 100);
}
