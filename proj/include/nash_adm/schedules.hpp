#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace nash_adm {

/// Which closed form supplies lambda_k in the sublinear regime.
enum class LambdaForm {
  /// ((k+1)/k)^(a+b): the form for which theta_{t+1} alpha_{t+1} lambda_{t+1}
  /// equals theta_t alpha_t. Default.
  kRatio,
  /// (k/(k+1))^(a+b), the reciprocal form. Breaks the identity. Opt-in.
  kPrinted,
};

/// Exponent of theta_t = 1/(t+1)^e in the sublinear regime.
enum class ThetaForm {
  kPaired,     // e = b, consistent with the lambda exponent a + b. Default.
  kEpsilon,    // e = epsilon. Opt-in comparison only.
};

/// alpha_k = A/(k+1)^a, theta_k = 1/(k+1)^b, lambda_k per LambdaForm.
struct MonotoneSchedule {
  double L = 0.0;
  double epsilon = 0.0;
  double A = 0.0;
  double a = 0.0;
  double b = 0.0;
  LambdaForm lambda_form = LambdaForm::kRatio;
  ThetaForm theta_form = ThetaForm::kPaired;

  /// Strict upper bound on A: 1/(2L) * 2^-(a + b/2).
  double step_bound() const;

  double alpha(long k) const;
  double lambda(long k) const;
  double log_theta(long k) const;
};

struct StrongSchedule {
  double L = 0.0;
  double mu = 0.0;
  int n = 0;
  double sigma = 0.0;
  double norm_iw = 0.0;

  double g1 = 0.0, g2 = 0.0, g3 = 0.0, g4 = 0.0;
  double guard_mono = 0.0;   // mu / (4 (L mu + 2 n L^2))
  double guard_sqrt3 = 0.0;  // sqrt(3) / (4 L)
  double guard_sqrt7 = 0.0;  // sqrt(7) / (8 L)

  double alpha = 0.0;
  double lambda = 0.0;
  double eta = 0.0;
  double epsilon_alpha = 0.0;
  /// Geometric base of theta_t = c^t; equals 1 + epsilon_alpha.
  double c = 0.0;
};

/// User-fixed alpha and lambda. theta_t = lambda^-t keeps the product
/// identity exact.
struct ConstantSchedule {
  double alpha = 0.0;
  double lambda = 1.0;
};

struct MonotoneOptions {
  std::optional<double> A_override;
  LambdaForm lambda_form = LambdaForm::kRatio;
  ThetaForm theta_form = ThetaForm::kPaired;
};

MonotoneSchedule monotone_schedule(double L, double epsilon,
                                   const MonotoneOptions& options = {});

/// General sublinear parameters with a > 1/2, b > 0, a + b < 1.
MonotoneSchedule monotone_schedule_ab(double L, double a, double b, double A,
                                      LambdaForm lambda_form = LambdaForm::kRatio);

StrongSchedule strong_schedule(double L, double mu, int n, double sigma,
                               double norm_iw);

/// eta(alpha) = (1 - sqrt(1 - 4 L^2 alpha^2)) / 2 in cancellation-free form.
double eta_of_alpha(double L, double alpha);

/// Per-step contraction margin epsilon(alpha) of the constant-step regime.
double epsilon_of_alpha(double alpha, double L, double mu, int n, double norm_iw);

/// Value type over the three regimes with uniform accessors. A lambda scale
/// other than one perturbs every lambda_k; it exists for validator checks.
class Schedule {
 public:
  using Variant = std::variant<MonotoneSchedule, StrongSchedule, ConstantSchedule>;

  Schedule(MonotoneSchedule s) : v_(std::move(s)) {}
  Schedule(StrongSchedule s) : v_(std::move(s)) {}
  Schedule(ConstantSchedule s) : v_(std::move(s)) {}

  const Variant& variant() const { return v_; }
  std::string regime() const;

  double alpha(long k) const;
  double lambda(long k) const;
  double log_theta(long k) const;
  double theta(long k) const;

  Schedule with_lambda_scale(double scale) const;
  double lambda_scale() const { return lambda_scale_; }

 private:
  Variant v_;
  double lambda_scale_ = 1.0;
};

nlohmann::json to_json(const Schedule& schedule);

/// Unresolved schedule as written in a run config. Strong constants depend on
/// the game and graph and are filled in by resolve().
struct ScheduleSpec {
  std::string regime = "strong";  // monotone | strong | constant
  double epsilon = 0.25;
  std::optional<double> A;
  std::optional<double> alpha;
  std::optional<double> lambda;
  LambdaForm lambda_form = LambdaForm::kRatio;
  ThetaForm theta_form = ThetaForm::kPaired;

  bool operator==(const ScheduleSpec&) const = default;
};

Schedule resolve(const ScheduleSpec& spec, double L, double mu, int n,
                 double sigma, double norm_iw);

nlohmann::json to_json(const ScheduleSpec& spec);
ScheduleSpec schedule_spec_from_json(const nlohmann::json& doc);

struct ScheduleValidatorRow {
  long t = 0;
  double product_residual = 0.0;  // relative: |th+ a+ l+ - th a| / (th a)
  double prop1_lhs = 0.0;         // theta_{t-1} eta_t (1 - eta_{t-1})
  double prop1_rhs = 0.0;         // theta_t L^2 alpha_t^2 lambda_t^2
  double eta = 0.0;
  double c1 = 0.0, c2 = 0.0;
  double b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;      // NaN when mu == 0
};

struct ScheduleValidatorReport {
  std::string regime;
  long K = 0;
  double product_tolerance = 1e-12;
  std::vector<ScheduleValidatorRow> rows;

  bool product_identity_ok = true;
  std::optional<long> first_product_failure;
  double max_product_residual = 0.0;
  bool prop1_ok = true;
  std::optional<long> first_prop1_failure;

  /// Sublinear regime: first t after which theta_{t-1} c_{.,t-1} >=
  /// theta_t b_{.,t} holds for every later t up to K.
  std::optional<long> threshold;

  // Geometric regime.
  double c_min = 0.0;              // min(a1/b1, a2/b2)
  bool c_above_one = true;
  bool ratio_applicable = false;   // alpha <= g1
  bool ratio_ok = true;            // a1/b1 <= a2/b2 (+1e-10)
  bool a2_applicable = false;      // guard conditions hold
  bool a2_ok = true;               // a2 >= 1/8 (-1e-10)
  bool epsilon_positive = true;

  bool passed() const;
  void write_csv(std::ostream& out) const;
};

/// Evaluates every side condition for t = 1..K. Failures are report entries.
ScheduleValidatorReport validate_schedule(const Schedule& schedule, double L,
                                          double mu, double sigma,
                                          double norm_iw, int n, long K);

}  // namespace nash_adm
