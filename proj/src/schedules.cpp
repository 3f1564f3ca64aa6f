#include "nash_adm/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "nash_adm/error.hpp"

namespace nash_adm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void input_error(const std::string& what) {
  throw Error(ErrorCode::kInput, what);
}

double theta_exponent(const MonotoneSchedule& s) {
  return s.theta_form == ThetaForm::kPaired ? s.b : s.epsilon;
}

}  // namespace

double MonotoneSchedule::step_bound() const {
  return 1.0 / (2.0 * L) / std::pow(2.0, a + b / 2.0);
}

double MonotoneSchedule::alpha(long k) const {
  return A / std::pow(static_cast<double>(k + 1), a);
}

double MonotoneSchedule::lambda(long k) const {
  const double kk = static_cast<double>(k);
  if (lambda_form == LambdaForm::kRatio)
    return std::pow((kk + 1.0) / kk, a + b);
  return std::pow(kk / (kk + 1.0), a + b);
}

double MonotoneSchedule::log_theta(long k) const {
  return -theta_exponent(*this) * std::log(static_cast<double>(k + 1));
}

MonotoneSchedule monotone_schedule_ab(double L, double a, double b, double A,
                                      LambdaForm lambda_form) {
  if (!(L > 0.0) || !std::isfinite(L)) input_error("monotone schedule: L must be positive");
  if (!(a > 0.5) || !(b > 0.0) || !(a + b < 1.0))
    input_error("monotone schedule: need a > 1/2, b > 0, a + b < 1");
  MonotoneSchedule s;
  s.L = L;
  s.a = a;
  s.b = b;
  s.epsilon = 2.0 * a - 1.0;
  s.lambda_form = lambda_form;
  const double bound = s.step_bound();
  if (!(A > 0.0) || !(A < bound)) {
    std::ostringstream os;
    os << std::setprecision(17) << "monotone schedule: A = " << A
       << " violates 0 < A < 1/(2L) * 2^-(a+b/2) = " << bound;
    input_error(os.str());
  }
  s.A = A;
  return s;
}

MonotoneSchedule monotone_schedule(double L, double epsilon,
                                   const MonotoneOptions& options) {
  if (!(L > 0.0) || !std::isfinite(L)) input_error("monotone schedule: L must be positive");
  if (!(epsilon > 0.0 && epsilon < 0.5))
    input_error("monotone schedule: epsilon must lie in (0, 1/2)");
  MonotoneSchedule s;
  s.L = L;
  s.epsilon = epsilon;
  s.a = 0.5 + epsilon / 2.0;
  s.b = epsilon / 2.0;
  s.lambda_form = options.lambda_form;
  s.theta_form = options.theta_form;
  const double bound = s.step_bound();
  if (options.A_override) {
    const double A = *options.A_override;
    if (!(A > 0.0) || !(A < bound)) {
      std::ostringstream os;
      os << std::setprecision(17) << "monotone schedule: A = " << A
         << " violates 0 < A < 1/(2L) * 2^-(a+b/2) = " << bound;
      input_error(os.str());
    }
    s.A = A;
  } else {
    s.A = 0.99 * bound;
  }
  return s;
}

double eta_of_alpha(double L, double alpha) {
  const double q = 4.0 * L * L * alpha * alpha;
  if (!(q < 1.0)) return kNaN;
  // (1 - s)/2 with s = sqrt(1 - q) equals (q/2)/(1 + s) without cancellation.
  return 0.5 * q / (1.0 + std::sqrt(1.0 - q));
}

double epsilon_of_alpha(double alpha, double L, double mu, int n, double norm_iw) {
  const double eta = eta_of_alpha(L, alpha);
  if (std::isnan(eta)) return kNaN;
  const double nn = norm_iw * norm_iw;
  const double one_minus_s = 2.0 * eta;
  return (2.0 * mu * alpha / n - (1.0 + nn) * one_minus_s) / (2.0 + nn * one_minus_s);
}

StrongSchedule strong_schedule(double L, double mu, int n, double sigma,
                               double norm_iw) {
  if (!(L > 0.0) || !std::isfinite(L)) input_error("strong schedule: L must be positive");
  if (!(mu > 0.0) || !std::isfinite(mu))
    input_error("strong schedule: mu must be positive (strongly monotone game)");
  if (n < 1) input_error("strong schedule: n must be >= 1");
  if (!(sigma >= 0.0 && sigma < 1.0)) input_error("strong schedule: sigma must lie in [0, 1)");
  if (!(norm_iw >= 0.0 && norm_iw <= 2.0 + 1e-12))
    input_error("strong schedule: ||I - W|| must lie in [0, 2]");

  StrongSchedule s;
  s.L = L;
  s.mu = mu;
  s.n = n;
  s.sigma = sigma;
  s.norm_iw = norm_iw;
  const double nn = norm_iw * norm_iw;
  const double dn = static_cast<double>(n);
  s.g1 = dn * mu * (1.0 - sigma * sigma) /
         (4.0 * std::pow(mu + 2.0 * dn * L, 2) * (1.0 + nn));
  s.g2 = dn * (1.0 + nn) / (2.0 * mu);
  s.g3 = mu * dn * (1.0 + nn) /
         (mu * mu + L * L * std::pow(1.0 + nn, 2) * dn * dn);
  s.g4 = mu / std::sqrt(4.0 * L * L * mu * mu +
                        16.0 * std::pow(L * mu + 2.0 * dn * L * L, 2));
  s.guard_mono = mu / (4.0 * (L * mu + 2.0 * dn * L * L));
  s.guard_sqrt3 = std::sqrt(3.0) / (4.0 * L);
  s.guard_sqrt7 = std::sqrt(7.0) / (8.0 * L);
  s.alpha = std::min({s.g1, s.g2, s.g3, s.g4, s.guard_mono, s.guard_sqrt3,
                      s.guard_sqrt7});
  s.eta = eta_of_alpha(L, s.alpha);
  s.epsilon_alpha = epsilon_of_alpha(s.alpha, L, mu, n, norm_iw);
  if (!(s.epsilon_alpha > 0.0))
    throw Error(ErrorCode::kInvariant,
                "strong schedule: epsilon(alpha) <= 0 at the selected step");
  s.lambda = 1.0 / (1.0 + s.epsilon_alpha);
  s.c = 1.0 + s.epsilon_alpha;
  return s;
}

std::string Schedule::regime() const {
  switch (v_.index()) {
    case 0: return "monotone";
    case 1: return "strong";
    default: return "constant";
  }
}

double Schedule::alpha(long k) const {
  return std::visit(
      [k](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MonotoneSchedule>) return s.alpha(k);
        else return s.alpha;
      },
      v_);
}

double Schedule::lambda(long k) const {
  const double base = std::visit(
      [k](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MonotoneSchedule>) return s.lambda(k);
        else return s.lambda;
      },
      v_);
  return lambda_scale_ * base;
}

double Schedule::log_theta(long k) const {
  return std::visit(
      [k](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        const double kk = static_cast<double>(k);
        if constexpr (std::is_same_v<T, MonotoneSchedule>) return s.log_theta(k);
        else if constexpr (std::is_same_v<T, StrongSchedule>)
          return kk * std::log1p(s.epsilon_alpha);
        else return -kk * std::log(s.lambda);
      },
      v_);
}

double Schedule::theta(long k) const { return std::exp(log_theta(k)); }

Schedule Schedule::with_lambda_scale(double scale) const {
  Schedule out = *this;
  out.lambda_scale_ = scale;
  return out;
}

namespace {

const char* to_string(LambdaForm f) {
  return f == LambdaForm::kRatio ? "ratio" : "printed";
}
const char* to_string(ThetaForm f) {
  return f == ThetaForm::kPaired ? "paired" : "epsilon";
}
LambdaForm parse_lambda_form(const std::string& s) {
  if (s == "ratio") return LambdaForm::kRatio;
  if (s == "printed") return LambdaForm::kPrinted;
  input_error("unknown lambda_form '" + s + "'");
}
ThetaForm parse_theta_form(const std::string& s) {
  if (s == "paired") return ThetaForm::kPaired;
  if (s == "epsilon") return ThetaForm::kEpsilon;
  input_error("unknown theta_form '" + s + "'");
}

}  // namespace

nlohmann::json to_json(const Schedule& schedule) {
  nlohmann::json doc;
  doc["regime"] = schedule.regime();
  std::visit(
      [&doc](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MonotoneSchedule>) {
          doc["epsilon"] = s.epsilon;
          doc["A"] = s.A;
          doc["a"] = s.a;
          doc["b"] = s.b;
          doc["lambda_form"] = to_string(s.lambda_form);
          doc["theta_form"] = to_string(s.theta_form);
        } else if constexpr (std::is_same_v<T, StrongSchedule>) {
          doc["alpha"] = s.alpha;
          doc["lambda"] = s.lambda;
          doc["epsilon_alpha"] = s.epsilon_alpha;
          doc["eta"] = s.eta;
          doc["g"] = {s.g1, s.g2, s.g3, s.g4};
          doc["guards"] = {s.guard_mono, s.guard_sqrt3, s.guard_sqrt7};
        } else {
          doc["alpha"] = s.alpha;
          doc["lambda"] = s.lambda;
        }
      },
      schedule.variant());
  if (schedule.lambda_scale() != 1.0) doc["lambda_scale"] = schedule.lambda_scale();
  return doc;
}

Schedule resolve(const ScheduleSpec& spec, double L, double mu, int n,
                 double sigma, double norm_iw) {
  if (spec.regime == "monotone") {
    MonotoneOptions opt;
    opt.A_override = spec.A;
    opt.lambda_form = spec.lambda_form;
    opt.theta_form = spec.theta_form;
    return monotone_schedule(L, spec.epsilon, opt);
  }
  if (spec.regime == "strong") {
    if (!(mu > 0.0))
      throw Error(ErrorCode::kConfig,
                  "strong schedule requires a strongly monotone game (mu > 0)");
    return strong_schedule(L, mu, n, sigma, norm_iw);
  }
  if (spec.regime == "constant") {
    if (!spec.alpha || !(*spec.alpha > 0.0))
      throw Error(ErrorCode::kConfig, "constant schedule needs alpha > 0");
    const double lambda = spec.lambda.value_or(1.0);
    if (!(lambda > 0.0)) throw Error(ErrorCode::kConfig, "constant schedule needs lambda > 0");
    return ConstantSchedule{*spec.alpha, lambda};
  }
  throw Error(ErrorCode::kConfig, "unknown schedule regime '" + spec.regime + "'");
}

nlohmann::json to_json(const ScheduleSpec& spec) {
  nlohmann::json doc;
  doc["regime"] = spec.regime;
  doc["epsilon"] = spec.epsilon;
  if (spec.A) doc["A"] = *spec.A;
  if (spec.alpha) doc["alpha"] = *spec.alpha;
  if (spec.lambda) doc["lambda"] = *spec.lambda;
  doc["lambda_form"] = to_string(spec.lambda_form);
  doc["theta_form"] = to_string(spec.theta_form);
  return doc;
}

ScheduleSpec schedule_spec_from_json(const nlohmann::json& doc) {
  try {
    ScheduleSpec spec;
    spec.regime = doc.value("regime", spec.regime);
    spec.epsilon = doc.value("epsilon", spec.epsilon);
    if (doc.contains("A") && !doc["A"].is_null()) spec.A = doc["A"].get<double>();
    if (doc.contains("alpha") && !doc["alpha"].is_null())
      spec.alpha = doc["alpha"].get<double>();
    if (doc.contains("lambda") && !doc["lambda"].is_null())
      spec.lambda = doc["lambda"].get<double>();
    if (doc.contains("lambda_form"))
      spec.lambda_form = parse_lambda_form(doc["lambda_form"].get<std::string>());
    if (doc.contains("theta_form"))
      spec.theta_form = parse_theta_form(doc["theta_form"].get<std::string>());
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("schedule json: ") + e.what());
  }
}

bool ScheduleValidatorReport::passed() const {
  bool ok = product_identity_ok && prop1_ok;
  // The dominance threshold exists asymptotically but can lie far beyond K
  // (around 1e10 for the default epsilon), so it is reported, not required.
  if (regime == "monotone") return ok;
  ok = ok && c_above_one && epsilon_positive;
  if (ratio_applicable) ok = ok && ratio_ok;
  if (a2_applicable) ok = ok && a2_ok;
  return ok;
}

void ScheduleValidatorReport::write_csv(std::ostream& out) const {
  auto put = [&out](double v) {
    if (std::isfinite(v)) out << v;
  };
  out << "t,product_residual,prop1_lhs,prop1_rhs,eta,c1,c2,b1,b2,a1,a2\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.t << ',';
    put(r.product_residual); out << ',';
    put(r.prop1_lhs); out << ',';
    put(r.prop1_rhs); out << ',';
    put(r.eta); out << ',';
    put(r.c1); out << ',';
    put(r.c2); out << ',';
    put(r.b1); out << ',';
    put(r.b2); out << ',';
    put(r.a1); out << ',';
    put(r.a2); out << '\n';
  }
}

ScheduleValidatorReport validate_schedule(const Schedule& schedule, double L,
                                          double mu, double sigma,
                                          double norm_iw, int n, long K) {
  if (K < 2) input_error("validate_schedule: K must be >= 2");
  ScheduleValidatorReport rep;
  rep.regime = schedule.regime();
  rep.K = K;
  const double nn = norm_iw * norm_iw;
  const double s2 = sigma * sigma;
  const double dn = static_cast<double>(n);
  const auto* mono = std::get_if<MonotoneSchedule>(&schedule.variant());

  // Sublinear regime uses the decaying eta_t, zeta_t of the convergence
  // proof; constant regimes use the fixed eta(alpha).
  double eps_prime = 0.0;
  if (mono) eps_prime = std::min(mono->epsilon / 2.0, (2.0 * mono->a - 1.0) / 4.0);
  auto eta_at = [&](long t) {
    if (mono)
      return 0.5 / std::pow(static_cast<double>(t + 1), 2.0 * mono->a - 2.0 * eps_prime);
    return eta_of_alpha(L, schedule.alpha(t));
  };
  auto zeta_at = [&](long t) {
    return 1.0 / std::pow(static_cast<double>(t + 1), mono->a - 2.0 * eps_prime);
  };

  rep.rows.reserve(static_cast<std::size_t>(K));
  for (long t = 1; t <= K; ++t) {
    ScheduleValidatorRow r;
    r.t = t;
    const double log_ratio_next =
        schedule.log_theta(t + 1) - schedule.log_theta(t) +
        std::log(schedule.alpha(t + 1)) - std::log(schedule.alpha(t)) +
        std::log(schedule.lambda(t + 1));
    r.product_residual = std::abs(std::expm1(log_ratio_next));

    // Normalized by theta_{t-1} so geometric thetas never overflow.
    const double theta_step = std::exp(schedule.log_theta(t) - schedule.log_theta(t - 1));
    const double eta_t = eta_at(t);
    const double eta_prev = eta_at(t - 1);
    const double at = schedule.alpha(t);
    const double lt = schedule.lambda(t);
    r.eta = eta_t;
    r.prop1_lhs = eta_t * (1.0 - eta_prev);
    r.prop1_rhs = theta_step * L * L * at * at * lt * lt;

    r.b1 = (1.0 + eta_t * nn) / 2.0;
    r.b2 = ((1.0 - eta_t) * s2 + eta_t * (1.0 + nn)) / 2.0;
    if (mono) {
      const double z = zeta_at(t);
      r.c1 = (1.0 - eta_t) / 2.0 - at * z;
      r.c2 = (1.0 - eta_t) / 2.0 - at * (L + L * L / z);
    } else {
      r.c1 = kNaN;
      r.c2 = kNaN;
    }
    if (mu > 0.0) {
      r.a1 = (1.0 - eta_t) / 2.0 + mu / (2.0 * dn) * at;
      r.a2 = (1.0 - eta_t) / 2.0 - (L + 2.0 * dn * L * L / mu) * at;
    } else {
      r.a1 = kNaN;
      r.a2 = kNaN;
    }

    rep.max_product_residual = std::max(rep.max_product_residual, r.product_residual);
    if (!(r.product_residual <= rep.product_tolerance)) {
      if (rep.product_identity_ok) rep.first_product_failure = t;
      rep.product_identity_ok = false;
    }
    if (!(r.prop1_lhs >= r.prop1_rhs)) {
      if (rep.prop1_ok) rep.first_prop1_failure = t;
      rep.prop1_ok = false;
    }
    rep.rows.push_back(r);
  }

  if (mono) {
    // Scan backwards for the longest suffix on which dominance holds.
    long start = K + 1;
    for (long t = K; t >= 2; --t) {
      const auto& prev = rep.rows[static_cast<std::size_t>(t - 2)];
      const auto& cur = rep.rows[static_cast<std::size_t>(t - 1)];
      const double step = std::exp(schedule.log_theta(t) - schedule.log_theta(t - 1));
      const bool holds = prev.c1 >= step * cur.b1 && prev.c2 >= step * cur.b2;
      if (!holds) break;
      start = t;
    }
    if (start <= K) rep.threshold = start;
  } else {
    const auto& r = rep.rows.front();
    const double alpha = schedule.alpha(1);
    if (mu > 0.0) {
      rep.c_min = std::min(r.a1 / r.b1, r.a2 / r.b2);
      rep.c_above_one = rep.c_min > 1.0;
      const double g1 = dn * mu * (1.0 - s2) /
                        (4.0 * std::pow(mu + 2.0 * dn * L, 2) * (1.0 + nn));
      rep.ratio_applicable = alpha <= g1;
      rep.ratio_ok = r.a1 / r.b1 <= r.a2 / r.b2 + 1e-10;
      const double guard_mono = mu / (4.0 * (L * mu + 2.0 * dn * L * L));
      rep.a2_applicable = alpha <= guard_mono && alpha <= std::sqrt(3.0) / (4.0 * L);
      rep.a2_ok = r.a2 >= 0.125 - 1e-10;
      rep.epsilon_positive = epsilon_of_alpha(alpha, L, mu, n, norm_iw) > 0.0;
    } else {
      rep.c_above_one = false;
      rep.epsilon_positive = false;
    }
  }
  return rep;
}

}  // namespace nash_adm
