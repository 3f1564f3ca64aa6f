#pragma once

#include <optional>
#include <vector>

#include "nash_adm/game.hpp"
#include "nash_adm/schedules.hpp"
#include "nash_adm/trace.hpp"

namespace nash_adm {

struct ConsensusDecomposition {
  Matrix parallel;       // every row equals the column mean of X
  Matrix perpendicular;  // X - parallel
};

ConsensusDecomposition consensus_decompose(const Matrix& X);

/// Frobenius norm of the perpendicular part, without forming the split.
double consensus_residual(const Matrix& X);

struct GapOptions {
  double tol = 1e-9;
  long max_iterations = 100000;
  std::optional<Vector> warm_start;
};

struct GapResult {
  double value = 0.0;
  Vector maximizer;
  long iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// max over the box of <G x + h, y - x>, by projected gradient ascent with
/// step 1/(2||G|| + 1). The setup (monotonicity check, norm) is done once so
/// repeated solves on one game stay cheap.
class GapSolver {
 public:
  GapSolver(Matrix G, Vector h, BoxSet boxes);
  explicit GapSolver(const Game& game);

  GapResult operator()(const Vector& y, const GapOptions& options = {}) const;

 private:
  Matrix g_;
  Matrix sym_;
  Vector h_;
  BoxSet boxes_;
  double step_ = 0.0;
};

GapResult gap_function(const Game& game, const Vector& y,
                       const GapOptions& options = {});
GapResult gap_function(const Game& game, const BoxSet& boxes, const Vector& y,
                       const GapOptions& options = {});
/// Raw form; rejects matrices whose symmetric part has lambda_min < -1e-8.
GapResult gap_function(const Matrix& G, const Vector& h, const BoxSet& boxes,
                       const Vector& y, const GapOptions& options = {});

struct RelativeError {
  double value = 0.0;
  bool absolute = false;  // reference was zero; value is ||x - x*||
};

RelativeError relative_error(const Vector& x, const Vector& x_star);

/// Running weighted mean with weights given by their logarithm. Rescales on
/// the fly so geometric weights never overflow.
class AveragedIterate {
 public:
  void add(double log_weight, const Vector& x);
  bool empty() const { return count_ == 0; }
  long count() const { return count_; }
  Vector value() const;

 private:
  Vector numerator_;
  double denominator_ = 0.0;
  double log_scale_ = 0.0;
  long count_ = 0;
};

/// x_bar^k for k = 1..actions.size(), where actions[t-1] is x^{t+1} and its
/// weight is theta_t alpha_t.
std::vector<Vector> averaged_iterate(const std::vector<Vector>& actions,
                                     const Schedule& schedule);
/// Same, from a trace recorded with per-step actions.
std::vector<Vector> averaged_iterate(const RunTrace& trace,
                                     const Schedule& schedule);

/// max_i [J_i(y) - min_{z in Omega_i} J_i(z, y_-i)]. Exact per coordinate
/// when A_i is diagonal; otherwise a small box QP solved by projected
/// gradient.
double best_response_gap(const Game& game, const Vector& y);

}  // namespace nash_adm
