#pragma once

#include <optional>

#include "nash_adm/game.hpp"
#include "nash_adm/network.hpp"
#include "nash_adm/schedules.hpp"
#include "nash_adm/trace.hpp"

namespace nash_adm {

/// Row i holds player i's own gradient, evaluated at row i, in player i's
/// columns; every other entry is zero.
Matrix augmented_pseudo_gradient(const Game& game, const Matrix& X);

/// Clips the owner block of each row into its box; other entries pass
/// through. This is the exact Euclidean projection onto the feasible set of
/// estimation matrices.
Matrix project_augmented(const Matrix& X, const BoxSet& boxes,
                         const std::vector<int>& dims);
Matrix project_augmented(const Game& game, const Matrix& X);

/// Counts full evaluations of the augmented gradient, and the cheap
/// owner-block corrections that refresh it after a projection.
struct GradientCounter {
  long full = 0;
  long owner_corrections = 0;
};

struct AdmState {
  long k = 1;
  Matrix X;           // x^k
  Matrix Xhat_prev;   // x_hat^{k-1}
  Matrix F_cur;       // F(x^k)
  Matrix F_hat_prev;  // F(x_hat^{k-1})
};

/// Mixes X0 once and projects: x^1 = P(W X0), x_hat^0 = W X0. X0 is projected
/// first if its owner blocks are infeasible.
AdmState init_state(const Game& game, const Matrix& W, const Matrix& X0,
                    GradientCounter* counter = nullptr);

/// Inputs of the projection performed by a step: x^{k+1} = P(center - alpha g).
struct StepDetail {
  Matrix center;
  Matrix direction;
  double alpha = 0.0;
};

/// One iteration in place. Computes F(W x^k) afresh; F(x^{k+1}) is then the
/// same matrix plus A_i times the owner-block change, since projection only
/// moves owner blocks.
void advance(AdmState& state, const Game& game, const Matrix& W, double alpha,
             double lambda, GradientCounter* counter = nullptr,
             StepDetail* detail = nullptr);

AdmState adm_step(const AdmState& state, const Game& game, const Matrix& W,
                  double alpha, double lambda);

struct RunOptions {
  long K = 1000;
  /// Metric record cadence in steps; the first and last steps always record.
  long record_every = 1;
  /// Gap cadence in steps; 0 disables the gap column.
  long gap_every = 25;
  long snapshot_every = 50;
  /// Reference point for rel_error; NaN column when absent.
  std::optional<Vector> x_star;
  /// Gap of the weighted average (true) or of the current action (false).
  /// Defaults to the average for the sublinear schedule.
  std::optional<bool> gap_of_average;
  double gap_tol = 1e-9;
  bool store_actions = false;
  /// Stop early once rel_error drops to this value (checked each step).
  std::optional<double> stop_below;
};

RunTrace run_adm(const Game& game, const MixingMatrix& W,
                 const Schedule& schedule, const Matrix& X0,
                 const RunOptions& options);

/// Mix-then-gradient baseline: X^{k+1} = P(W X^k - alpha F(W X^k)).
RunTrace run_ddp(const Game& game, const MixingMatrix& W, double alpha,
                 const Matrix& X0, const RunOptions& options);

struct CentralizedResult {
  Vector x_star;
  RunTrace trace;
};

/// Projected gradient play x <- P(x - alpha F(x)). For strongly monotone games
/// alpha must lie in (0, 2 mu / L^2]; the default is mu / ||G||^2.
CentralizedResult run_centralized(const Game& game, std::optional<double> alpha,
                                  long K, const Vector& x0,
                                  const RunOptions& options = {});

/// Default reference solve: 20000 iterations from the box midpoint.
Vector reference_solution(const Game& game, long K = 20000);

}  // namespace nash_adm
