#include "nash_adm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "nash_adm/error.hpp"
#include "nash_adm/metrics.hpp"
#include "nash_adm/random.hpp"

namespace nash_adm {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::kConfig, what);
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, "cannot parse " + path.string() + ": " + e.what());
  }
}

fs::path resolve_path(const std::string& p, const fs::path& base) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double json_number(double v) { return std::isfinite(v) ? v : kNaN; }

nlohmann::json maybe_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json doc;
  doc["label"] = c.label;
  doc["game"] = c.game;
  doc["graph"] = c.graph;
  doc["algorithm"] = c.algorithm;
  doc["schedule"] = to_json(c.schedule);
  doc["K"] = c.K;
  doc["seed"] = c.seed;
  doc["gap_every"] = c.gap_every;
  doc["snapshot_every"] = c.snapshot_every;
  doc["record_every"] = c.record_every;
  doc["reference_K"] = c.reference_K;
  if (c.reference_file) doc["reference_file"] = *c.reference_file;
  if (c.stop_below) doc["stop_below"] = *c.stop_below;
  doc["output_dir"] = c.output_dir;
  return doc;
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) config_error("config must be a JSON object");
  try {
    ExperimentConfig c;
    c.label = doc.value("label", c.label);
    if (doc.contains("game")) c.game = doc["game"];
    if (doc.contains("graph")) c.graph = doc["graph"];
    c.algorithm = doc.value("algorithm", c.algorithm);
    if (doc.contains("schedule")) c.schedule = schedule_spec_from_json(doc["schedule"]);
    c.K = doc.value("K", c.K);
    c.seed = doc.value("seed", c.seed);
    c.gap_every = doc.value("gap_every", c.gap_every);
    c.snapshot_every = doc.value("snapshot_every", c.snapshot_every);
    c.record_every = doc.value("record_every", c.record_every);
    c.reference_K = doc.value("reference_K", c.reference_K);
    if (doc.contains("reference_file") && !doc["reference_file"].is_null())
      c.reference_file = doc["reference_file"].get<std::string>();
    if (doc.contains("stop_below") && !doc["stop_below"].is_null())
      c.stop_below = doc["stop_below"].get<double>();
    c.output_dir = doc.value("output_dir", c.output_dir);
    return c;
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const fs::path& path) {
  return config_from_json(read_json(path));
}

Game resolve_game(const nlohmann::json& spec, const fs::path& base) {
  if (!spec.is_object() || spec.empty()) config_error("config has no game");
  try {
    if (spec.contains("file"))
      return game_from_json(read_json(resolve_path(spec["file"].get<std::string>(), base)));
    if (spec.contains("generate")) {
      const auto& g = spec["generate"];
      GeneratorOptions opt;
      opt.players = g.value("n", opt.players);
      opt.dim = g.value("d", opt.dim);
      opt.kind = parse_monotonicity(g.value("kind", std::string("strong")));
      opt.seed = g.value("seed", opt.seed);
      opt.box_lo = g.value("box_lo", opt.box_lo);
      opt.box_hi = g.value("box_hi", opt.box_hi);
      opt.mu_target = g.value("mu", opt.mu_target);
      if (g.contains("condition_number") && !g["condition_number"].is_null())
        opt.condition_number = g["condition_number"].get<double>();
      return generate_game(opt);
    }
    return game_from_json(spec);
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("game spec: ") + e.what());
  }
}

MixingMatrix resolve_graph(const nlohmann::json& spec, int n, const fs::path& base) {
  try {
    const MixingRule rule = parse_mixing_rule(spec.value("rule", std::string("metropolis")));
    MixingMatrix w = [&]() -> MixingMatrix {
      if (spec.contains("file"))
        return mixing_from_json(read_json(resolve_path(spec["file"].get<std::string>(), base)));
      if (spec.contains("tree"))
        return MixingMatrix(random_tree(n, spec["tree"].value("seed", std::uint64_t{1})), rule);
      if (spec.value("complete", false)) return MixingMatrix(complete_graph(n), rule);
      if (spec.value("path", false)) return MixingMatrix(path_graph(n), rule);
      if (spec.contains("edges")) return mixing_from_json(spec);
      config_error("config has no graph");
    }();
    if (w.size() != n)
      config_error("graph has " + std::to_string(w.size()) + " nodes but the game has " +
                   std::to_string(n) + " players");
    return w;
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("graph spec: ") + e.what());
  }
}

std::uint64_t game_hash(const Game& game) { return fnv1a(to_json(game).dump()); }

Matrix random_estimates(const Game& game, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X(game.num_players(), game.dim());
  for (Index r = 0; r < X.rows(); ++r)
    for (Index c = 0; c < X.cols(); ++c)
      X(r, c) = rng.uniform(game.boxes().lo()[c], game.boxes().hi()[c]);
  return X;
}

namespace {

Vector load_reference(const fs::path& path, Index m) {
  const auto doc = read_json(path);
  const auto& arr = doc.is_object() ? doc.at("x_star") : doc;
  const auto values = arr.get<std::vector<double>>();
  if (static_cast<Index>(values.size()) != m)
    config_error("reference point in " + path.string() + " has the wrong length");
  return Eigen::Map<const Vector>(values.data(), m);
}

std::optional<double> final_gap(const RunTrace& trace) {
  for (auto it = trace.records.rbegin(); it != trace.records.rend(); ++it)
    if (it->gap) return it->gap;
  return std::nullopt;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& base) {
  // Everything that can be rejected is rejected before the first iteration.
  if (config.K < 1) config_error("K must be >= 1");
  if (config.algorithm != "adm" && config.algorithm != "ddp" &&
      config.algorithm != "centralized")
    config_error("unknown algorithm '" + config.algorithm + "'");
  const Game game = resolve_game(config.game, base);
  const GameConstants gc = game_constants(game);

  ExperimentResult result;
  result.config = config;
  result.game_hash = game_hash(game);

  RunOptions opt;
  opt.K = config.K;
  opt.gap_every = config.gap_every;
  opt.snapshot_every = config.snapshot_every;
  opt.record_every = config.record_every;
  opt.stop_below = config.stop_below;

  nlohmann::json summary;
  summary["label"] = config.label;
  summary["algorithm"] = config.algorithm;
  summary["game_hash"] = hex(result.game_hash);
  summary["constants"] = {{"L", gc.L}, {"mu", gc.mu}, {"gamma", maybe_number(gc.gamma)},
                          {"D", gc.D}};

  if (config.algorithm == "centralized") {
    std::optional<double> alpha;
    if (config.schedule.regime == "constant") alpha = config.schedule.alpha;
    const Vector mid = 0.5 * (game.boxes().lo() + game.boxes().hi());
    CentralizedResult c = run_centralized(game, alpha, config.K, mid, opt);
    result.trace = std::move(c.trace);
    result.x_star = c.x_star;
    summary["x_star"] = std::vector<double>(c.x_star.begin(), c.x_star.end());
    summary["schedule"] = result.trace.schedule;
  } else {
    const MixingMatrix w = resolve_graph(config.graph, game.num_players(), base);
    result.graph_hash = fnv1a(to_json(w.graph(), w.rule()).dump());
    summary["graph_hash"] = hex(result.graph_hash);
    summary["constants"]["sigma"] = w.sigma();
    summary["constants"]["norm_i_minus_w"] = w.norm_i_minus_w();
    std::optional<Schedule> schedule;
    double ddp_alpha = 0.0;
    if (config.algorithm == "adm") {
      if (config.schedule.regime == "strong" && !(gc.mu > 0.0))
        config_error("strong schedule requires a strongly monotone game (mu > 0)");
      try {
        schedule = resolve(config.schedule, gc.L, gc.mu, game.num_players(), w.sigma(),
                           w.norm_i_minus_w());
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kInput) config_error(e.what());
        throw;
      }
    } else {
      if (!config.schedule.alpha || !(*config.schedule.alpha > 0.0))
        config_error("ddp needs schedule.alpha > 0");
      ddp_alpha = *config.schedule.alpha;
    }
    result.x_star = config.reference_file
                        ? load_reference(resolve_path(*config.reference_file, base), game.dim())
                        : reference_solution(game, config.reference_K);
    opt.x_star = result.x_star;
    const Matrix X0 = random_estimates(game, config.seed);
    result.trace = config.algorithm == "adm"
                       ? run_adm(game, w, *schedule, X0, opt)
                       : run_ddp(game, w, ddp_alpha, X0, opt);
    summary["schedule"] = result.trace.schedule;
  }

  const auto& last = result.trace.records.back();
  summary["iterations"] = last.iter;
  summary["final_rel_error"] = maybe_number(last.rel_error);
  summary["absolute_error"] = result.trace.absolute_error;
  summary["final_consensus_residual"] = json_number(last.consensus_residual);
  if (auto g = final_gap(result.trace)) summary["final_gap"] = *g;
  summary["gradient_evaluations"] = result.trace.gradient_evaluations;
  summary["wall_time_s"] = static_cast<double>(result.trace.wall_ns) * 1e-9;
  result.summary = std::move(summary);
  return result;
}

void write_outputs(const ExperimentResult& result, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
    return out;
  };
  {
    auto out = open(dir / "trace.csv");
    result.trace.write_csv(out);
  }
  {
    auto out = open(dir / "summary.json");
    out << result.summary.dump(2) << '\n';
  }
  if (!result.trace.snapshots.empty()) {
    auto out = open(dir / "snapshots.json");
    out << result.trace.snapshots_json().dump() << '\n';
  }
  if (result.config.algorithm == "centralized") {
    auto out = open(dir / "x_star.json");
    nlohmann::json doc;
    doc["x_star"] = std::vector<double>(result.x_star.begin(), result.x_star.end());
    out << doc.dump(2) << '\n';
  }
}

unsigned worker_count() {
  if (const char* env = std::getenv("NASH_ADM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void Comparison::write_csv(std::ostream& out) const {
  out << "iter";
  for (const auto& r : runs) out << ',' << r.config.label;
  out << '\n';
  for (std::size_t row = 0; row < iters.size(); ++row) {
    out << iters[row];
    for (const auto& col : columns) {
      out << ',';
      if (std::isfinite(col[row])) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", col[row]);
        out << buf;
      }
    }
    out << '\n';
  }
}

Comparison compare(const std::vector<ExperimentConfig>& configs,
                   const std::vector<fs::path>& bases) {
  if (configs.empty()) config_error("compare needs at least one config");
  if (bases.size() != configs.size()) config_error("compare: one base path per config");

  // Hash check first so mismatched inputs never start a run.
  std::optional<std::uint64_t> hash;
  std::optional<nlohmann::json> graph;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const Game g = resolve_game(configs[i].game, bases[i]);
    const std::uint64_t h = game_hash(g);
    if (hash && *hash != h) config_error("compare: configs resolve to different games");
    hash = h;
    if (configs[i].algorithm != "centralized") {
      const MixingMatrix w = resolve_graph(configs[i].graph, g.num_players(), bases[i]);
      const auto gj = to_json(w.graph(), w.rule());
      if (graph && *graph != gj) config_error("compare: configs resolve to different graphs");
      graph = gj;
    }
  }

  Comparison cmp;
  cmp.runs.resize(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        cmp.runs[i] = run_experiment(configs[i], bases[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(configs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Unique, non-empty column labels.
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < cmp.runs.size(); ++i) {
    auto& label = cmp.runs[i].config.label;
    if (label.empty()) label = cmp.runs[i].config.algorithm;
    if (seen[label]++ > 0) label += "_" + std::to_string(i);
  }

  cmp.monotone_regime = std::any_of(configs.begin(), configs.end(), [](const auto& c) {
    return c.algorithm == "adm" && c.schedule.regime == "monotone";
  });
  std::map<long, std::vector<double>> table;
  for (std::size_t i = 0; i < cmp.runs.size(); ++i) {
    for (const auto& r : cmp.runs[i].trace.records) {
      const double v = cmp.monotone_regime ? (r.gap ? *r.gap : kNaN) : r.rel_error;
      if (!std::isfinite(v)) continue;
      auto& row = table[r.iter];
      row.resize(cmp.runs.size(), kNaN);
      row[i] = v;
    }
  }
  cmp.columns.assign(cmp.runs.size(), {});
  for (const auto& [iter, row] : table) {
    cmp.iters.push_back(iter);
    for (std::size_t i = 0; i < row.size(); ++i) cmp.columns[i].push_back(row[i]);
  }
  return cmp;
}

}  // namespace nash_adm
