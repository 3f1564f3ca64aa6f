#include "nash_adm/algorithms.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "nash_adm/error.hpp"
#include "nash_adm/metrics.hpp"

namespace nash_adm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
using Clock = std::chrono::steady_clock;

[[noreturn]] void input_error(const std::string& what) {
  throw Error(ErrorCode::kInput, what);
}

void check_shape(const Game& game, const Matrix& X, const char* who) {
  if (X.rows() != game.num_players() || X.cols() != game.dim())
    input_error(std::string(who) + ": estimation matrix must be n x m");
}

void check_mixing(const Game& game, const Matrix& W) {
  if (W.rows() != game.num_players() || W.cols() != game.num_players())
    input_error("mixing matrix size differs from the number of players");
}

// Shared bookkeeping for the iterative runs: cadence, metrics, timing.
class Recorder {
 public:
  Recorder(const Game& game, const RunOptions& options, bool average_gap)
      : game_(game), options_(options), average_gap_(average_gap),
        start_(Clock::now()) {
    if (options_.K < 0) input_error("iteration budget K must be >= 0");
    if (options_.gap_every > 0) solver_.emplace(game_);
  }

  bool gap_due(long iter) const {
    if (options_.gap_every <= 0) return false;
    if (average_gap_ && iter == 0) return false;
    return iter % options_.gap_every == 0 || iter == options_.K;
  }

  bool record_due(long iter) const {
    const long every = std::max<long>(1, options_.record_every);
    return iter == 0 || iter == options_.K || iter % every == 0 || gap_due(iter);
  }

  /// Returns true when the early-stop threshold has been reached.
  bool record(RunTrace& trace, long iter, const Matrix& X, const Vector& action,
              const AveragedIterate* average) {
    const bool due = record_due(iter);
    double rel = kNaN;
    if (options_.x_star && (due || options_.stop_below)) {
      const RelativeError r = relative_error(action, *options_.x_star);
      rel = r.value;
      trace.absolute_error = r.absolute;
    }
    if (due) {
      TraceRecord rec;
      rec.iter = iter;
      rec.rel_error = rel;
      rec.consensus_residual = consensus_residual(X);
      if (gap_due(iter)) {
        Vector y = average_gap_ && average && !average->empty() ? average->value() : action;
        y = game_.boxes().clip(y);  // round-off only; y is a convex combination
        GapOptions go;
        go.tol = options_.gap_tol;
        go.warm_start = warm_;
        const GapResult g = (*solver_)(y, go);
        warm_ = g.maximizer;
        rec.gap = g.value;
      }
      rec.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                           Clock::now() - start_).count();
      trace.records.push_back(rec);
    }
    if (options_.snapshot_every > 0 &&
        (iter % options_.snapshot_every == 0 || iter == options_.K))
      trace.snapshots.push_back({iter, X});
    return options_.stop_below && std::isfinite(rel) && rel <= *options_.stop_below;
  }

  void finish(RunTrace& trace) const {
    trace.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        Clock::now() - start_).count();
  }

 private:
  const Game& game_;
  const RunOptions& options_;
  bool average_gap_;
  Clock::time_point start_;
  std::optional<GapSolver> solver_;
  std::optional<Vector> warm_;
};

}  // namespace

Matrix augmented_pseudo_gradient(const Game& game, const Matrix& X) {
  check_shape(game, X, "augmented_pseudo_gradient");
  Matrix F = Matrix::Zero(X.rows(), X.cols());
  for (int i = 0; i < game.num_players(); ++i) {
    const Index s = game.block_start(i);
    const int d = game.block_size(i);
    F.block(i, s, 1, d) = game.player_gradient(i, X.row(i).transpose()).transpose();
  }
  return F;
}

Matrix project_augmented(const Matrix& X, const BoxSet& boxes,
                         const std::vector<int>& dims) {
  if (static_cast<Index>(dims.size()) != X.rows() || boxes.size() != X.cols())
    input_error("project_augmented: shape does not match the block structure");
  Matrix out = X;
  Index s = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const int d = dims[i];
    const Index r = static_cast<Index>(i);
    out.block(r, s, 1, d) = X.block(r, s, 1, d)
                                .cwiseMax(boxes.lo().segment(s, d).transpose())
                                .cwiseMin(boxes.hi().segment(s, d).transpose());
    s += d;
  }
  return out;
}

Matrix project_augmented(const Game& game, const Matrix& X) {
  check_shape(game, X, "project_augmented");
  return project_augmented(X, game.boxes(), game.dims());
}

namespace {

// F at `projected`, given F at `base` where the two differ only in owner
// blocks: row i changes by A_i times the owner-block difference.
void owner_correction(const Game& game, const Matrix& base, const Matrix& projected,
                      Matrix& F, GradientCounter* counter) {
  for (int i = 0; i < game.num_players(); ++i) {
    const Index s = game.block_start(i);
    const int d = game.block_size(i);
    const Vector delta = (projected.block(i, s, 1, d) - base.block(i, s, 1, d)).transpose();
    if (delta.isZero(0.0)) continue;
    F.block(i, s, 1, d) += (game.diagonal_block(i) * delta).transpose();
  }
  if (counter) ++counter->owner_corrections;
}

}  // namespace

AdmState init_state(const Game& game, const Matrix& W, const Matrix& X0,
                    GradientCounter* counter) {
  check_shape(game, X0, "init_state");
  check_mixing(game, W);
  if (!X0.allFinite()) input_error("init_state: X0 must be finite");
  AdmState st;
  st.k = 1;
  const Matrix start = project_augmented(game, X0);
  st.Xhat_prev = W * start;
  st.F_hat_prev = augmented_pseudo_gradient(game, st.Xhat_prev);
  if (counter) ++counter->full;
  // Mixed owner entries are convex combinations of feasible values; the
  // projection only guards round-off.
  st.X = project_augmented(game, st.Xhat_prev);
  st.F_cur = st.F_hat_prev;
  owner_correction(game, st.Xhat_prev, st.X, st.F_cur, counter);
  return st;
}

void advance(AdmState& state, const Game& game, const Matrix& W, double alpha,
             double lambda, GradientCounter* counter, StepDetail* detail) {
  if (!(alpha > 0.0) || !(lambda > 0.0))
    input_error("adm_step: alpha and lambda must be positive");
  Matrix xhat = W * state.X;
  Matrix f_hat = augmented_pseudo_gradient(game, xhat);
  if (counter) ++counter->full;
  Matrix direction = f_hat + lambda * (state.F_cur - state.F_hat_prev);
  Matrix next = project_augmented(game, xhat - alpha * direction);
  Matrix f_next = f_hat;
  owner_correction(game, xhat, next, f_next, counter);
  if (!next.allFinite() || !f_next.allFinite())
    throw NumericError(state.k, "non-finite estimate in ADM step");
  if (detail) {
    detail->center = xhat;
    detail->direction = direction;
    detail->alpha = alpha;
  }
  state.Xhat_prev = std::move(xhat);
  state.F_hat_prev = std::move(f_hat);
  state.X = std::move(next);
  state.F_cur = std::move(f_next);
  ++state.k;
}

AdmState adm_step(const AdmState& state, const Game& game, const Matrix& W,
                  double alpha, double lambda) {
  AdmState out = state;
  advance(out, game, W, alpha, lambda);
  return out;
}

RunTrace run_adm(const Game& game, const MixingMatrix& W,
                 const Schedule& schedule, const Matrix& X0,
                 const RunOptions& options) {
  const bool average_gap =
      options.gap_of_average.value_or(schedule.regime() == "monotone");
  Recorder rec(game, options, average_gap);
  RunTrace trace;
  trace.algorithm = "adm";
  trace.schedule = to_json(schedule);
  GradientCounter counter;
  const Matrix& w = W.weights();
  AdmState st = init_state(game, w, X0, &counter);
  AveragedIterate average;

  bool stop = rec.record(trace, 0, st.X, game.owner_actions(st.X), &average);
  for (long t = 1; t <= options.K && !stop; ++t) {
    const double alpha = schedule.alpha(st.k);
    const double lambda = schedule.lambda(st.k);
    if (!std::isfinite(alpha) || !std::isfinite(lambda))
      throw NumericError(st.k, "non-finite schedule value");
    advance(st, game, w, alpha, lambda, &counter);
    const Vector action = game.owner_actions(st.X);
    // x^{t+1} enters the average with weight theta_t alpha_t.
    average.add(schedule.log_theta(t) + std::log(alpha), action);
    if (options.store_actions) trace.actions.push_back(action);
    stop = rec.record(trace, t, st.X, action, &average);
  }
  trace.final_state = st.X;
  trace.final_action = game.owner_actions(st.X);
  trace.final_average = average.value();
  trace.gradient_evaluations = counter.full;
  trace.owner_corrections = counter.owner_corrections;
  rec.finish(trace);
  return trace;
}

RunTrace run_ddp(const Game& game, const MixingMatrix& W, double alpha,
                 const Matrix& X0, const RunOptions& options) {
  if (!(alpha > 0.0)) input_error("run_ddp: alpha must be positive");
  check_shape(game, X0, "run_ddp");
  check_mixing(game, W.weights());
  Recorder rec(game, options, options.gap_of_average.value_or(false));
  RunTrace trace;
  trace.algorithm = "ddp";
  trace.schedule = {{"regime", "constant"}, {"alpha", alpha}};
  const Matrix& w = W.weights();
  Matrix X = project_augmented(game, X0);
  AveragedIterate average;

  bool stop = rec.record(trace, 0, X, game.owner_actions(X), &average);
  for (long t = 1; t <= options.K && !stop; ++t) {
    const Matrix mixed = w * X;
    const Matrix F = augmented_pseudo_gradient(game, mixed);
    ++trace.gradient_evaluations;
    X = project_augmented(game, mixed - alpha * F);
    if (!X.allFinite()) throw NumericError(t, "non-finite estimate in DDP step");
    const Vector action = game.owner_actions(X);
    average.add(std::log(alpha), action);
    if (options.store_actions) trace.actions.push_back(action);
    stop = rec.record(trace, t, X, action, &average);
  }
  trace.final_state = X;
  trace.final_action = game.owner_actions(X);
  trace.final_average = average.value();
  rec.finish(trace);
  return trace;
}

CentralizedResult run_centralized(const Game& game, std::optional<double> alpha,
                                  long K, const Vector& x0,
                                  const RunOptions& options) {
  if (x0.size() != game.dim()) input_error("run_centralized: x0 has the wrong length");
  const double L = lipschitz_constant(game);
  const double mu = strong_monotonicity_constant(game);
  const double gnorm = spectral_norm(game.interaction());
  double step;
  if (game.kind() == Monotonicity::kStronglyMonotone) {
    step = alpha.value_or(mu / (gnorm * gnorm));
    if (!(step > 0.0) || step > 2.0 * mu / (L * L))
      input_error("run_centralized: alpha must lie in (0, 2 mu / L^2] for a strongly monotone game");
  } else {
    step = alpha.value_or(gnorm > 0.0 ? 1.0 / gnorm : 1.0);
    if (!(step > 0.0)) input_error("run_centralized: alpha must be positive");
  }

  RunOptions opt = options;
  opt.K = K;
  Recorder rec(game, opt, false);
  CentralizedResult out;
  out.trace.algorithm = "centralized";
  out.trace.schedule = {{"regime", "constant"}, {"alpha", step}};
  Vector x = game.boxes().clip(x0);
  Matrix as_row = x.transpose();
  bool stop = rec.record(out.trace, 0, as_row, x, nullptr);

  double prev_move = -1.0;
  int rising = 0;
  for (long t = 1; t <= K && !stop; ++t) {
    const Vector next = game.boxes().clip(x - step * game.pseudo_gradient(x));
    ++out.trace.gradient_evaluations;
    if (!next.allFinite()) throw NumericError(t, "non-finite iterate in gradient play");
    const double move = (next - x).norm();
    if (move > 1e-14 && prev_move >= 0.0 && move > prev_move) {
      if (++rising >= 100)
        throw Error(ErrorCode::kNonContraction,
                    "gradient play step length grew for 100 consecutive iterations "
                    "(at iteration " + std::to_string(t) + "); reduce alpha");
    } else {
      rising = 0;
    }
    prev_move = move;
    x = next;
    as_row = x.transpose();
    stop = rec.record(out.trace, t, as_row, x, nullptr);
  }
  out.x_star = x;
  out.trace.final_state = as_row;
  out.trace.final_action = x;
  rec.finish(out.trace);
  return out;
}

Vector reference_solution(const Game& game, long K) {
  RunOptions opt;
  opt.gap_every = 0;
  opt.snapshot_every = 0;
  opt.record_every = K > 0 ? K : 1;
  const Vector mid = 0.5 * (game.boxes().lo() + game.boxes().hi());
  return run_centralized(game, std::nullopt, K, mid, opt).x_star;
}

}  // namespace nash_adm
