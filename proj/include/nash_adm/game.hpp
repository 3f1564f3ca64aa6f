#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace nash_adm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Per-coordinate box [lo_j, hi_j] over the joint action space.
class BoxSet {
 public:
  BoxSet() = default;
  BoxSet(Vector lo, Vector hi);

  static BoxSet uniform(Index dim, double lo, double hi);

  Index size() const { return lo_.size(); }
  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }

  /// Squared Euclidean diameter: sum_j (hi_j - lo_j)^2.
  double squared_diameter() const;

  bool contains(const Vector& x, double tol = 0.0) const;
  Vector clip(const Vector& x) const;

  bool operator==(const BoxSet&) const = default;

 private:
  Vector lo_;
  Vector hi_;
};

enum class Monotonicity { kMerelyMonotone, kStronglyMonotone };

std::string to_string(Monotonicity kind);
/// Accepts "merely", "merely_monotone", "strong", "strongly_monotone".
Monotonicity parse_monotonicity(std::string_view text);

/// Quadratic game with affine pseudo-gradient F(x) = G x + h.
///
/// Player i owns the coordinate block [start(i), start(i) + d_i). Its cost is
///   J_i(x) = 0.5 x_i' A_i x_i + b_i' x_i + (sum_{j != i} C_ij x_j)' x_i
/// where A_i is the diagonal block of G on player i's coordinates, C_ij the
/// off-diagonal blocks of player i's rows and b_i the matching slice of h.
/// Construction validates every structural and monotonicity invariant, so a
/// Game value is always consistent.
class Game {
 public:
  Game(std::vector<int> dims, Matrix interaction, Vector offset, BoxSet boxes,
       Monotonicity kind, double mu_declared = 0.0,
       std::optional<std::uint64_t> seed = std::nullopt);

  int num_players() const { return static_cast<int>(dims_.size()); }
  Index dim() const { return offset_.size(); }
  const std::vector<int>& dims() const { return dims_; }
  Index block_start(int player) const { return starts_[player]; }
  int block_size(int player) const { return dims_[player]; }
  int owner(Index coordinate) const { return owners_[coordinate]; }

  const Matrix& interaction() const { return interaction_; }
  const Vector& offset() const { return offset_; }
  const BoxSet& boxes() const { return boxes_; }
  Monotonicity kind() const { return kind_; }
  double mu_declared() const { return mu_declared_; }
  const std::optional<std::uint64_t>& seed() const { return seed_; }

  /// F(x) = G x + h. Defined on all of R^m.
  Vector pseudo_gradient(const Vector& x) const;

  /// Gradient of J_i with respect to player i's own block, at joint point x.
  Vector player_gradient(int player, const Eigen::Ref<const Vector>& x) const;

  double player_cost(int player, const Vector& x) const;

  auto diagonal_block(int player) const {
    return interaction_.block(starts_[player], starts_[player], dims_[player],
                              dims_[player]);
  }
  auto row_block(int player) const {
    return interaction_.middleRows(starts_[player], dims_[player]);
  }

  /// Joint action assembled from owner blocks: x_i taken from row i's block.
  Vector owner_actions(const Matrix& estimates) const;

 private:
  std::vector<int> dims_;
  std::vector<Index> starts_;
  std::vector<int> owners_;
  Matrix interaction_;
  Vector offset_;
  BoxSet boxes_;
  Monotonicity kind_;
  double mu_declared_;
  std::optional<std::uint64_t> seed_;
};

struct GameConstants {
  double L = 0.0;
  double mu = 0.0;
  double gamma = 0.0;  // +inf when mu == 0
  double D = 0.0;
};

/// max_i sqrt(L_i^2 + L_{-i}^2), with L_i the spectral norm of A_i and L_{-i}
/// the spectral norm of the off-block part of player i's rows. This is the
/// Lipschitz constant of the augmented (per-row) pseudo-gradient.
double lipschitz_constant(const Game& game);

/// lambda_min((G + G')/2), clamped below at 0.
double strong_monotonicity_constant(const Game& game);

/// Smallest eigenvalue of the symmetric part of a square matrix (unclamped).
double symmetric_min_eigenvalue(const Matrix& matrix);

double spectral_norm(const Matrix& matrix);

GameConstants game_constants(const Game& game);

struct GeneratorOptions {
  int players = 2;
  int dim = 1;
  Monotonicity kind = Monotonicity::kStronglyMonotone;
  std::uint64_t seed = 0;
  double box_lo = -1.0;
  double box_hi = 1.0;
  /// Strong games: the diagonal shift makes lambda_min of the symmetric part
  /// equal to this value.
  double mu_target = 0.5;
  /// Strong games: if set, the shift is chosen so that L / mu hits this value
  /// instead of mu_target.
  std::optional<double> condition_number;
};

/// Seeded generator for the quadratic game family. Strong games shift the
/// diagonal of a random coupling matrix; merely monotone games use G = C'C
/// with the second row of C overwritten by the first.
Game generate_game(const GeneratorOptions& options);

nlohmann::json to_json(const Game& game);
Game game_from_json(const nlohmann::json& doc);

}  // namespace nash_adm
