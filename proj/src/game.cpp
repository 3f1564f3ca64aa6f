#include "nash_adm/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nash_adm/error.hpp"
#include "nash_adm/random.hpp"

namespace nash_adm {

namespace {

constexpr double kPsdSlack = 1e-10;

[[noreturn]] void input_error(const std::string& what) {
  throw Error(ErrorCode::kInput, what);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

BoxSet::BoxSet(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size()) input_error("box bounds differ in length");
  for (Index j = 0; j < lo_.size(); ++j) {
    if (!std::isfinite(lo_[j]) || !std::isfinite(hi_[j]))
      input_error("box bounds must be finite");
    if (lo_[j] > hi_[j]) {
      std::ostringstream os;
      os << "box coordinate " << j << " has lo > hi";
      input_error(os.str());
    }
  }
}

BoxSet BoxSet::uniform(Index dim, double lo, double hi) {
  return BoxSet(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

double BoxSet::squared_diameter() const { return (hi_ - lo_).squaredNorm(); }

bool BoxSet::contains(const Vector& x, double tol) const {
  if (x.size() != size()) return false;
  for (Index j = 0; j < x.size(); ++j) {
    if (x[j] < lo_[j] - tol || x[j] > hi_[j] + tol) return false;
  }
  return true;
}

Vector BoxSet::clip(const Vector& x) const {
  if (x.size() != size()) input_error("clip: dimension mismatch");
  return x.cwiseMax(lo_).cwiseMin(hi_);
}

std::string to_string(Monotonicity kind) {
  return kind == Monotonicity::kStronglyMonotone ? "strongly_monotone"
                                                 : "merely_monotone";
}

Monotonicity parse_monotonicity(std::string_view text) {
  if (text == "strong" || text == "strongly_monotone")
    return Monotonicity::kStronglyMonotone;
  if (text == "merely" || text == "merely_monotone")
    return Monotonicity::kMerelyMonotone;
  input_error("unknown monotonicity class '" + std::string(text) + "'");
}

double symmetric_min_eigenvalue(const Matrix& matrix) {
  if (matrix.rows() != matrix.cols()) input_error("matrix must be square");
  if (matrix.size() == 0) return 0.0;
  const Matrix sym = 0.5 * (matrix + matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double spectral_norm(const Matrix& matrix) {
  if (matrix.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(matrix);
  return svd.singularValues()(0);
}

Game::Game(std::vector<int> dims, Matrix interaction, Vector offset,
           BoxSet boxes, Monotonicity kind, double mu_declared,
           std::optional<std::uint64_t> seed)
    : dims_(std::move(dims)),
      interaction_(std::move(interaction)),
      offset_(std::move(offset)),
      boxes_(std::move(boxes)),
      kind_(kind),
      mu_declared_(mu_declared),
      seed_(seed) {
  if (dims_.empty()) input_error("game needs at least one player");
  Index m = 0;
  for (int d : dims_) {
    if (d < 1) input_error("player dimensions must be positive");
    starts_.push_back(m);
    for (int k = 0; k < d; ++k) owners_.push_back(static_cast<int>(starts_.size()) - 1);
    m += d;
  }
  if (interaction_.rows() != m || interaction_.cols() != m)
    input_error("interaction matrix must be m x m with m = sum of dims");
  if (offset_.size() != m) input_error("offset must have length m");
  if (boxes_.size() != m) input_error("boxes must have length m");
  if (!all_finite(interaction_) || !offset_.allFinite())
    input_error("game data must be finite");

  const double scale = std::max(1.0, interaction_.cwiseAbs().maxCoeff());
  for (int i = 0; i < num_players(); ++i) {
    const Matrix a = diagonal_block(i);
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      input_error("diagonal block of player " + std::to_string(i) +
                  " is not symmetric");
    // Semidefinite is enough for convexity; the zero game is admissible.
    if (symmetric_min_eigenvalue(a) < -kPsdSlack)
      input_error("diagonal block of player " + std::to_string(i) +
                  " is not positive semidefinite");
  }

  const double lmin = symmetric_min_eigenvalue(interaction_);
  if (kind_ == Monotonicity::kStronglyMonotone) {
    if (!(mu_declared_ > 0.0))
      input_error("strongly monotone game needs mu_declared > 0");
    if (lmin < mu_declared_ - kPsdSlack)
      input_error("symmetric part has lambda_min below mu_declared");
  } else {
    if (mu_declared_ != 0.0)
      input_error("merely monotone game must declare mu = 0");
    if (lmin < -kPsdSlack) input_error("game is not monotone");
  }
}

Vector Game::pseudo_gradient(const Vector& x) const {
  if (x.size() != dim()) input_error("pseudo_gradient: dimension mismatch");
  return interaction_ * x + offset_;
}

Vector Game::player_gradient(int player,
                             const Eigen::Ref<const Vector>& x) const {
  const Index s = starts_[player];
  const int d = dims_[player];
  return interaction_.middleRows(s, d) * x + offset_.segment(s, d);
}

double Game::player_cost(int player, const Vector& x) const {
  if (x.size() != dim()) input_error("player_cost: dimension mismatch");
  const Index s = starts_[player];
  const int d = dims_[player];
  const Vector xi = x.segment(s, d);
  const Matrix a = diagonal_block(player);
  // Coupling term: full row product minus the own-block part.
  const Vector coupling = interaction_.middleRows(s, d) * x - a * xi;
  return 0.5 * xi.dot(a * xi) + offset_.segment(s, d).dot(xi) +
         coupling.dot(xi);
}

Vector Game::owner_actions(const Matrix& estimates) const {
  if (estimates.rows() != num_players() || estimates.cols() != dim())
    input_error("estimation matrix must be n x m");
  Vector x(dim());
  for (int i = 0; i < num_players(); ++i)
    x.segment(starts_[i], dims_[i]) =
        estimates.row(i).segment(starts_[i], dims_[i]).transpose();
  return x;
}

namespace {

double block_lipschitz(const Matrix& g, const std::vector<int>& dims) {
  double best = 0.0;
  Index s = 0;
  for (int d : dims) {
    Matrix off = g.middleRows(s, d);
    off.middleCols(s, d).setZero();
    const double li = spectral_norm(Matrix(g.block(s, s, d, d)));
    const double lo = spectral_norm(off);
    best = std::max(best, std::sqrt(li * li + lo * lo));
    s += d;
  }
  return best;
}

}  // namespace

double lipschitz_constant(const Game& game) {
  return block_lipschitz(game.interaction(), game.dims());
}

double strong_monotonicity_constant(const Game& game) {
  return std::max(0.0, symmetric_min_eigenvalue(game.interaction()));
}

GameConstants game_constants(const Game& game) {
  GameConstants c;
  c.L = lipschitz_constant(game);
  c.mu = strong_monotonicity_constant(game);
  c.gamma = c.mu > 0.0 ? c.L / c.mu : std::numeric_limits<double>::infinity();
  c.D = game.boxes().squared_diameter();
  return c;
}

namespace {

// Coupling matrix shared by both classes: diagonal entries a in [1, 3],
// zero within-block off-diagonals, off-block entries in [-1, 1] / n.
Matrix draw_coupling(int n, int d, Rng& rng) {
  const Index m = static_cast<Index>(n) * d;
  Matrix g = Matrix::Zero(m, m);
  for (Index j = 0; j < m; ++j) g(j, j) = rng.uniform(1.0, 3.0);
  for (Index r = 0; r < m; ++r) {
    for (Index c = 0; c < m; ++c) {
      if (r / d == c / d) continue;
      g(r, c) = rng.uniform(-1.0, 1.0) / n;
    }
  }
  return g;
}

}  // namespace

Game generate_game(const GeneratorOptions& opt) {
  if (opt.players < 1) input_error("generate_game: n must be >= 1");
  if (opt.dim < 1) input_error("generate_game: d must be >= 1");
  if (opt.kind == Monotonicity::kMerelyMonotone && opt.players < 2)
    input_error(
        "generate_game: merely monotone construction copies one row of C "
        "into another and needs n >= 2");
  if (!(opt.box_lo <= opt.box_hi)) input_error("generate_game: bad box bounds");

  const int n = opt.players;
  const int d = opt.dim;
  const Index m = static_cast<Index>(n) * d;
  Rng rng(opt.seed);
  Matrix c = draw_coupling(n, d, rng);
  Vector b(m);
  for (Index j = 0; j < m; ++j) b[j] = rng.uniform(-1.0, 1.0);

  std::vector<int> dims(n, d);
  BoxSet boxes = BoxSet::uniform(m, opt.box_lo, opt.box_hi);

  if (opt.kind == Monotonicity::kMerelyMonotone) {
    c.row(1) = c.row(0);
    Matrix g = c.transpose() * c;
    // C'C is symmetric in exact arithmetic; remove round-off asymmetry.
    g = 0.5 * (g + g.transpose()).eval();
    return Game(dims, std::move(g), std::move(b), std::move(boxes),
                Monotonicity::kMerelyMonotone, 0.0, opt.seed);
  }

  const double lambda0 = symmetric_min_eigenvalue(c);
  double shift = opt.mu_target - lambda0;
  if (opt.condition_number) {
    const double target = *opt.condition_number;
    if (!(target > 1.0))
      input_error("generate_game: condition number target must exceed 1");
    // L(s) / (lambda0 + s) decreases monotonically in s on (-lambda0, inf)
    // and tends to 1, so bisection on the shift finds the target.
    auto gamma_at = [&](double s) {
      Matrix g = c;
      g.diagonal().array() += s;
      return block_lipschitz(g, dims) / (lambda0 + s);
    };
    double lo = -lambda0 + 1e-12;
    double hi = std::max(1.0, std::abs(lambda0));
    while (gamma_at(hi) > target) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (gamma_at(mid) > target) lo = mid; else hi = mid;
    }
    shift = hi;
  }
  Matrix g = c;
  g.diagonal().array() += shift;
  const double mu = symmetric_min_eigenvalue(g);
  if (!(mu > 0.0)) input_error("generate_game: shift failed to give mu > 0");
  return Game(dims, std::move(g), std::move(b), std::move(boxes),
              Monotonicity::kStronglyMonotone, mu, opt.seed);
}

nlohmann::json to_json(const Game& game) {
  nlohmann::json doc;
  doc["n"] = game.num_players();
  doc["dims"] = game.dims();
  const Matrix& g = game.interaction();
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(g.size()));
  for (Index r = 0; r < g.rows(); ++r)
    for (Index c = 0; c < g.cols(); ++c) flat.push_back(g(r, c));
  doc["G"] = flat;
  doc["h"] = std::vector<double>(game.offset().begin(), game.offset().end());
  doc["lo"] = std::vector<double>(game.boxes().lo().begin(), game.boxes().lo().end());
  doc["hi"] = std::vector<double>(game.boxes().hi().begin(), game.boxes().hi().end());
  doc["kind"] = to_string(game.kind());
  doc["mu_declared"] = game.mu_declared();
  if (game.seed())
    doc["seed"] = *game.seed();
  else
    doc["seed"] = nullptr;
  return doc;
}

namespace {

Vector vector_field(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array())
    input_error(std::string("game json: missing array '") + key + "'");
  const auto values = doc[key].get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace

Game game_from_json(const nlohmann::json& doc) {
  try {
    const int n = doc.at("n").get<int>();
    std::vector<int> dims = doc.contains("dims")
                                ? doc["dims"].get<std::vector<int>>()
                                : std::vector<int>(static_cast<std::size_t>(n), 1);
    if (static_cast<int>(dims.size()) != n)
      input_error("game json: dims length differs from n");
    Index m = 0;
    for (int d : dims) m += d;
    const Vector flat = vector_field(doc, "G");
    if (flat.size() != m * m) input_error("game json: G must hold m*m values");
    Matrix g(m, m);
    for (Index r = 0; r < m; ++r)
      for (Index c = 0; c < m; ++c) g(r, c) = flat[r * m + c];
    std::optional<std::uint64_t> seed;
    if (doc.contains("seed") && !doc["seed"].is_null())
      seed = doc["seed"].get<std::uint64_t>();
    return Game(std::move(dims), std::move(g), vector_field(doc, "h"),
                BoxSet(vector_field(doc, "lo"), vector_field(doc, "hi")),
                parse_monotonicity(doc.at("kind").get<std::string>()),
                doc.value("mu_declared", 0.0), seed);
  } catch (const nlohmann::json::exception& e) {
    input_error(std::string("game json: ") + e.what());
  }
}

}  // namespace nash_adm
