// Command-line front end: generate, run, compare, validate-schedule, gap.
// Exit codes: 0 success, 2 configuration or input error, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nash_adm/error.hpp"
#include "nash_adm/harness.hpp"
#include "nash_adm/metrics.hpp"

namespace fs = std::filesystem;
using namespace nash_adm;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, "cannot parse " + path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

struct GenerateArgs {
  int n = 20;
  int d = 1;
  std::string kind = "strong";
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> graph_seed;
  std::string rule = "metropolis";
  double box_lo = -1.0;
  double box_hi = 1.0;
  double mu = 0.5;
  std::optional<double> condition_number;
  std::string out = ".";
};

int cmd_generate(const GenerateArgs& a) {
  GeneratorOptions opt;
  opt.players = a.n;
  opt.dim = a.d;
  opt.kind = parse_monotonicity(a.kind);
  opt.seed = a.seed;
  opt.box_lo = a.box_lo;
  opt.box_hi = a.box_hi;
  opt.mu_target = a.mu;
  opt.condition_number = a.condition_number;
  const Game game = generate_game(opt);
  const MixingMatrix w(random_tree(a.n, a.graph_seed.value_or(a.seed)), parse_mixing_rule(a.rule));
  const fs::path dir(a.out);
  write_text(dir / "game.json", to_json(game).dump(2) + "\n");
  write_text(dir / "graph.json", to_json(w.graph(), w.rule()).dump(2) + "\n");
  const GameConstants c = game_constants(game);
  std::cout << "wrote " << (dir / "game.json").string() << " and " << (dir / "graph.json").string()
            << "\nL = " << c.L << ", mu = " << c.mu << ", sigma = " << w.sigma()
            << ", ||I-W|| = " << w.norm_i_minus_w() << "\n";
  return 0;
}

struct RunArgs {
  std::string config;
  std::optional<long> K;
  std::optional<std::string> algorithm;
  std::optional<std::uint64_t> seed;
  std::optional<long> gap_every;
  std::optional<std::string> out;
};

ExperimentConfig apply_overrides(ExperimentConfig c, const RunArgs& a) {
  if (a.K) c.K = *a.K;
  if (a.algorithm) c.algorithm = *a.algorithm;
  if (a.seed) c.seed = *a.seed;
  if (a.gap_every) c.gap_every = *a.gap_every;
  if (a.out) c.output_dir = *a.out;
  return c;
}

int cmd_run(const RunArgs& a) {
  const fs::path path(a.config);
  const ExperimentConfig config = apply_overrides(load_config(path), a);
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  const ExperimentResult result = run_experiment(config, base);
  const fs::path out = config.output_dir.empty() ? fs::path("run") : fs::path(config.output_dir);
  write_outputs(result, out);
  std::cout << result.summary.dump(2) << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& files, const std::string& out_dir) {
  std::vector<ExperimentConfig> configs;
  std::vector<fs::path> bases;
  for (const auto& f : files) {
    const fs::path p(f);
    configs.push_back(load_config(p));
    bases.push_back(p.parent_path().empty() ? fs::path(".") : p.parent_path());
  }
  const Comparison cmp = compare(configs, bases);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  for (const auto& run : cmp.runs) write_outputs(run, dir / run.config.label);
  std::ostringstream csv;
  cmp.write_csv(csv);
  write_text(dir / "compare.csv", csv.str());

  std::vector<PlotSeries> series;
  for (std::size_t i = 0; i < cmp.runs.size(); ++i) {
    PlotSeries s;
    s.label = cmp.runs[i].config.label;
    for (std::size_t r = 0; r < cmp.iters.size(); ++r) {
      s.x.push_back(static_cast<double>(std::max<long>(cmp.iters[r], 1)));
      s.y.push_back(cmp.columns[i][r]);
    }
    series.push_back(std::move(s));
  }
  std::ostringstream svg;
  write_svg_plot(svg, series, cmp.monotone_regime, true,
                 cmp.monotone_regime ? "gap of the averaged iterate" : "relative error",
                 cmp.monotone_regime ? "gap" : "relative error");
  write_text(dir / "compare.svg", svg.str());
  std::cout << "wrote " << (dir / "compare.csv").string() << " and "
            << (dir / "compare.svg").string() << "\n";
  return 0;
}

struct ValidateArgs {
  std::string regime = "monotone";
  std::optional<std::string> game;
  std::optional<std::string> graph;
  double L = 1.0;
  double mu = 0.0;
  int n = 1;
  double sigma = 0.0;
  double norm_iw = 0.0;
  double epsilon = 0.25;
  std::optional<double> A;
  std::string lambda_form = "ratio";
  double lambda_scale = 1.0;
  long K = 10000;
  std::optional<std::string> csv;
};

int cmd_validate(ValidateArgs a) {
  if (a.game) {
    const Game game = game_from_json(read_json_file(*a.game));
    const GameConstants c = game_constants(game);
    a.L = c.L;
    a.mu = c.mu;
    a.n = game.num_players();
    if (a.graph) {
      const MixingMatrix w = mixing_from_json(read_json_file(*a.graph));
      if (w.size() != a.n) throw Error(ErrorCode::kConfig, "graph and game sizes differ");
      a.sigma = w.sigma();
      a.norm_iw = w.norm_i_minus_w();
    }
  }
  ScheduleSpec spec;
  spec.regime = a.regime;
  spec.epsilon = a.epsilon;
  spec.A = a.A;
  nlohmann::json form = {{"lambda_form", a.lambda_form}};
  spec.lambda_form = schedule_spec_from_json(form).lambda_form;
  if (a.regime == "strong" && !(a.mu > 0.0))
    throw Error(ErrorCode::kConfig, "strong schedule needs mu > 0");
  const Schedule schedule =
      resolve(spec, a.L, a.mu, a.n, a.sigma, a.norm_iw).with_lambda_scale(a.lambda_scale);
  const ScheduleValidatorReport rep =
      validate_schedule(schedule, a.L, a.mu, a.sigma, a.norm_iw, a.n, a.K);
  if (a.csv) {
    std::ostringstream os;
    rep.write_csv(os);
    write_text(*a.csv, os.str());
  }
  nlohmann::json doc;
  doc["schedule"] = to_json(schedule);
  doc["K"] = rep.K;
  doc["passed"] = rep.passed();
  doc["product_identity_ok"] = rep.product_identity_ok;
  doc["max_product_residual"] = rep.max_product_residual;
  if (rep.first_product_failure) doc["first_product_failure"] = *rep.first_product_failure;
  doc["prop1_ok"] = rep.prop1_ok;
  if (rep.first_prop1_failure) doc["first_prop1_failure"] = *rep.first_prop1_failure;
  if (rep.regime == "monotone") {
    doc["threshold"] = rep.threshold ? nlohmann::json(*rep.threshold) : nlohmann::json(nullptr);
  } else {
    doc["c_min"] = rep.c_min;
    doc["c_above_one"] = rep.c_above_one;
    doc["ratio_ok"] = rep.ratio_ok;
    doc["a2_ok"] = rep.a2_ok;
    doc["epsilon_positive"] = rep.epsilon_positive;
  }
  std::cout << doc.dump(2) << "\n";
  return rep.passed() ? 0 : kExitNumeric;
}

int cmd_gap(const std::string& game_file, const std::string& point_file, double tol) {
  const Game game = game_from_json(read_json_file(game_file));
  const auto doc = read_json_file(point_file);
  const auto& arr = doc.is_object() ? (doc.contains("x") ? doc["x"] : doc.at("x_star")) : doc;
  const auto values = arr.get<std::vector<double>>();
  if (static_cast<Index>(values.size()) != game.dim())
    throw Error(ErrorCode::kInput, "point has the wrong length");
  const Vector y = Eigen::Map<const Vector>(values.data(), game.dim());
  if (!game.boxes().contains(y, 1e-12))
    throw Error(ErrorCode::kInput, "point lies outside the action boxes");
  GapOptions opt;
  opt.tol = tol;
  const GapResult g = gap_function(game, y, opt);
  nlohmann::json out;
  out["gap"] = g.value;
  out["maximizer"] = std::vector<double>(g.maximizer.begin(), g.maximizer.end());
  out["iterations"] = g.iterations;
  out["residual"] = g.residual;
  out["converged"] = g.converged;
  out["best_response_gap"] = best_response_gap(game, y);
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed Nash equilibrium seeking: accelerated direct method"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write game.json and graph.json");
  g->add_option("--n", gen.n, "number of players");
  g->add_option("--d", gen.d, "action dimension per player");
  g->add_option("--kind", gen.kind, "strong | merely");
  g->add_option("--seed", gen.seed, "game seed");
  g->add_option("--graph-seed", gen.graph_seed, "tree seed (defaults to --seed)");
  g->add_option("--rule", gen.rule, "metropolis | lazy_metropolis");
  g->add_option("--box-lo", gen.box_lo);
  g->add_option("--box-hi", gen.box_hi);
  g->add_option("--mu", gen.mu, "target strong-monotonicity modulus");
  g->add_option("--condition-number", gen.condition_number, "target L/mu instead of --mu");
  g->add_option("--out", gen.out, "output directory");

  RunArgs run;
  auto* r = app.add_subcommand("run", "run one experiment config");
  r->add_option("--config", run.config, "config JSON")->required();
  r->add_option("--K", run.K);
  r->add_option("--algorithm", run.algorithm, "adm | ddp | centralized");
  r->add_option("--seed", run.seed, "seed of the initial estimates");
  r->add_option("--gap-every", run.gap_every);
  r->add_option("--out", run.out, "output directory");

  std::vector<std::string> compare_files;
  std::string compare_out = "compare";
  auto* c = app.add_subcommand("compare", "run configs on one game and plot them together");
  c->add_option("--config", compare_files, "config JSON (repeatable)")->required();
  c->add_option("--out", compare_out, "output directory");

  ValidateArgs val;
  auto* v = app.add_subcommand("validate-schedule", "check schedule side conditions");
  v->add_option("--regime", val.regime, "monotone | strong");
  v->add_option("--game", val.game, "derive L, mu, n from a game file");
  v->add_option("--graph", val.graph, "derive sigma, ||I-W|| from a graph file");
  v->add_option("--L", val.L);
  v->add_option("--mu", val.mu);
  v->add_option("--n", val.n);
  v->add_option("--sigma", val.sigma);
  v->add_option("--norm-iw", val.norm_iw);
  v->add_option("--epsilon", val.epsilon);
  v->add_option("--A", val.A);
  v->add_option("--lambda-form", val.lambda_form, "ratio | printed");
  v->add_option("--lambda-scale", val.lambda_scale, "perturb every lambda_k");
  v->add_option("--K", val.K);
  v->add_option("--csv", val.csv, "write the per-t report");

  std::string gap_game, gap_point;
  double gap_tol = 1e-9;
  auto* gp = app.add_subcommand("gap", "gap function and best-response gap at a point");
  gp->add_option("--game", gap_game)->required();
  gp->add_option("--point", gap_point, "JSON array or {\"x\": [...]}")->required();
  gp->add_option("--tol", gap_tol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*r) return cmd_run(run);
    if (*c) return cmd_compare(compare_files, compare_out);
    if (*v) return cmd_validate(val);
    if (*gp) return cmd_gap(gap_game, gap_point, gap_tol);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kNumericOverflow:
      case ErrorCode::kNonContraction:
      case ErrorCode::kInvariant:
        return kExitNumeric;
      default:
        return kExitConfig;
    }
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error (i/o): " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
