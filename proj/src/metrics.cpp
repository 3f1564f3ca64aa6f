#include "nash_adm/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "nash_adm/error.hpp"

namespace nash_adm {

namespace {

[[noreturn]] void input_error(const std::string& what) {
  throw Error(ErrorCode::kInput, what);
}

}  // namespace

ConsensusDecomposition consensus_decompose(const Matrix& X) {
  ConsensusDecomposition out;
  out.parallel = X.colwise().mean().replicate(X.rows(), 1);
  out.perpendicular = X - out.parallel;
  return out;
}

double consensus_residual(const Matrix& X) {
  if (X.rows() == 0) return 0.0;
  return (X.rowwise() - X.colwise().mean()).norm();
}

GapSolver::GapSolver(Matrix G, Vector h, BoxSet boxes)
    : g_(std::move(G)), h_(std::move(h)), boxes_(std::move(boxes)) {
  if (g_.rows() != g_.cols() || g_.rows() != h_.size() || h_.size() != boxes_.size())
    input_error("gap_function: dimension mismatch");
  if (symmetric_min_eigenvalue(g_) < -1e-8)
    input_error("gap_function: operator is not monotone, the inner problem is not concave");
  step_ = 1.0 / (2.0 * spectral_norm(g_) + 1.0);
  sym_ = g_ + g_.transpose();
}

GapSolver::GapSolver(const Game& game)
    : GapSolver(game.interaction(), game.offset(), game.boxes()) {}

GapResult GapSolver::operator()(const Vector& y, const GapOptions& options) const {
  if (y.size() != h_.size()) input_error("gap_function: y has the wrong length");
  const Vector lin = g_.transpose() * y - h_;  // gradient is lin - sym * x

  Vector x = options.warm_start && options.warm_start->size() == y.size()
                 ? boxes_.clip(*options.warm_start)
                 : boxes_.clip(y);
  GapResult out;
  for (long it = 1; it <= options.max_iterations; ++it) {
    const Vector next = boxes_.clip(x + step_ * (lin - sym_ * x));
    out.residual = (next - x).norm() / step_;
    out.iterations = it;
    x = next;
    if (out.residual <= options.tol) {
      out.converged = true;
      break;
    }
  }
  out.value = (g_ * x + h_).dot(y - x);
  out.maximizer = x;
  // x = y is feasible with objective 0; never report less than that.
  const Vector y_in = boxes_.clip(y);
  const double at_y = (g_ * y_in + h_).dot(y - y_in);
  if (at_y > out.value) {
    out.value = at_y;
    out.maximizer = y_in;
  }
  return out;
}

GapResult gap_function(const Game& game, const Vector& y, const GapOptions& options) {
  return GapSolver(game)(y, options);
}

GapResult gap_function(const Game& game, const BoxSet& boxes, const Vector& y,
                       const GapOptions& options) {
  return GapSolver(game.interaction(), game.offset(), boxes)(y, options);
}

GapResult gap_function(const Matrix& G, const Vector& h, const BoxSet& boxes,
                       const Vector& y, const GapOptions& options) {
  return GapSolver(G, h, boxes)(y, options);
}

RelativeError relative_error(const Vector& x, const Vector& x_star) {
  if (x.size() != x_star.size()) input_error("relative_error: dimension mismatch");
  const double ref = x_star.norm();
  const double diff = (x - x_star).norm();
  if (ref == 0.0) return {diff, true};
  return {diff / ref, false};
}

void AveragedIterate::add(double log_weight, const Vector& x) {
  if (count_ == 0) {
    numerator_ = x;
    denominator_ = 1.0;
    log_scale_ = log_weight;
  } else if (log_weight > log_scale_) {
    const double shrink = std::exp(log_scale_ - log_weight);
    numerator_ = numerator_ * shrink + x;
    denominator_ = denominator_ * shrink + 1.0;
    log_scale_ = log_weight;
  } else {
    const double w = std::exp(log_weight - log_scale_);
    numerator_ += w * x;
    denominator_ += w;
  }
  ++count_;
}

Vector AveragedIterate::value() const {
  if (count_ == 0) return Vector();
  return numerator_ / denominator_;
}

std::vector<Vector> averaged_iterate(const std::vector<Vector>& actions,
                                     const Schedule& schedule) {
  std::vector<Vector> out;
  out.reserve(actions.size());
  AveragedIterate acc;
  long t = 1;
  for (const auto& x : actions) {
    acc.add(schedule.log_theta(t) + std::log(schedule.alpha(t)), x);
    out.push_back(acc.value());
    ++t;
  }
  return out;
}

std::vector<Vector> averaged_iterate(const RunTrace& trace, const Schedule& schedule) {
  if (trace.actions.empty() && !trace.records.empty() && trace.records.back().iter > 0)
    input_error("averaged_iterate: trace was recorded without per-step actions");
  return averaged_iterate(trace.actions, schedule);
}

namespace {

// min over [lo, hi] of 0.5 z'Az + q'z.
Vector box_qp_min(const Matrix& A, const Vector& q, const Vector& lo,
                  const Vector& hi, const Vector& start) {
  const Index d = q.size();
  const bool diagonal = d == 1 || (A - Matrix(A.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  if (diagonal) {
    Vector z(d);
    for (Index j = 0; j < d; ++j) {
      const double a = A(j, j);
      if (a > 0.0) {
        z[j] = std::clamp(-q[j] / a, lo[j], hi[j]);
      } else {
        z[j] = q[j] > 0.0 ? lo[j] : (q[j] < 0.0 ? hi[j] : start[j]);
      }
    }
    return z;
  }
  const double norm = spectral_norm(A);
  if (norm == 0.0) {
    Vector z(d);
    for (Index j = 0; j < d; ++j)
      z[j] = q[j] > 0.0 ? lo[j] : (q[j] < 0.0 ? hi[j] : start[j]);
    return z;
  }
  const double step = 1.0 / norm;
  Vector z = start.cwiseMax(lo).cwiseMin(hi);
  for (int it = 0; it < 100000; ++it) {
    const Vector next = (z - step * (A * z + q)).cwiseMax(lo).cwiseMin(hi);
    const double move = (next - z).norm();
    z = next;
    if (move <= 1e-15 * std::max(1.0, z.norm())) break;
  }
  return z;
}

}  // namespace

double best_response_gap(const Game& game, const Vector& y) {
  if (y.size() != game.dim()) input_error("best_response_gap: dimension mismatch");
  double worst = 0.0;
  for (int i = 0; i < game.num_players(); ++i) {
    const Index s = game.block_start(i);
    const int d = game.block_size(i);
    const Matrix A = game.diagonal_block(i);
    const Vector yi = y.segment(s, d);
    // Linear coefficient: b_i plus the coupling with everyone else's action.
    const Vector q = game.row_block(i) * y + game.offset().segment(s, d) - A * yi;
    const Vector z = box_qp_min(A, q, game.boxes().lo().segment(s, d),
                                game.boxes().hi().segment(s, d), yi);
    const double at_y = 0.5 * yi.dot(A * yi) + q.dot(yi);
    const double at_z = 0.5 * z.dot(A * z) + q.dot(z);
    worst = std::max(worst, at_y - at_z);
  }
  return worst;
}

}  // namespace nash_adm
