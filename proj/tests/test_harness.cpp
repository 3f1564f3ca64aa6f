#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nash_adm/error.hpp"
#include "nash_adm/harness.hpp"

using namespace nash_adm;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(std::uint64_t game_seed = 4) {
  ExperimentConfig c;
  c.label = "adm";
  c.game = {{"generate", {{"n", 6}, {"d", 2}, {"kind", "strong"}, {"seed", game_seed}}}};
  c.graph = {{"tree", {{"seed", 2}}}, {"rule", "metropolis"}};
  c.schedule.regime = "constant";
  c.schedule.alpha = 0.05;
  c.schedule.lambda = 0.5;
  c.K = 200;
  c.gap_every = 50;
  c.reference_K = 5000;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nash_adm_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config round trip") {
  ExperimentConfig c = small_config();
  c.stop_below = 1e-3;
  c.reference_file = "ref.json";
  c.schedule.lambda_form = LambdaForm::kPrinted;
  CHECK(config_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
  CHECK(config_from_json(to_json(ExperimentConfig{})) == ExperimentConfig{});
}

TEST_CASE("config errors surface before compute") {
  ExperimentConfig c = small_config();
  c.game["generate"]["kind"] = "merely";
  c.schedule = ScheduleSpec{};  // strong regime needs mu > 0
  try {
    run_experiment(c);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }
  ExperimentConfig k = small_config();
  k.K = 0;
  CHECK_THROWS_AS(run_experiment(k), Error);
}

TEST_CASE("identical configs give identical csv bytes") {
  const ExperimentConfig c = small_config();
  const ExperimentResult a = run_experiment(c);
  const ExperimentResult b = run_experiment(c);
  std::ostringstream sa, sb;
  a.trace.write_csv(sa, false);
  b.trace.write_csv(sb, false);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("iter,rel_error,consensus_residual,gap,elapsed_ns\n", 0) == 0);
  CHECK(a.game_hash == b.game_hash);
  CHECK(a.summary.contains("final_rel_error"));
}

TEST_CASE("outputs are written") {
  const fs::path dir = scratch("outputs");
  write_outputs(run_experiment(small_config()), dir);
  CHECK(fs::exists(dir / "trace.csv"));
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "snapshots.json"));
  std::ifstream in(dir / "summary.json");
  const auto doc = nlohmann::json::parse(in);
  CHECK(doc.at("algorithm") == "adm");
  fs::remove_all(dir);
}

TEST_CASE("compare rejects mismatched games") {
  const std::vector<ExperimentConfig> cs = {small_config(4), small_config(5)};
  try {
    compare(cs, {".", "."});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }
}

TEST_CASE("compare aligns columns") {
  ExperimentConfig adm = small_config();
  ExperimentConfig ddp = small_config();
  ddp.label = "ddp";
  ddp.algorithm = "ddp";
  const Comparison one = compare({adm}, {"."});
  CHECK(one.columns.size() == 1);
  const Comparison two = compare({adm, ddp}, {".", "."});
  REQUIRE(two.columns.size() == 2);
  CHECK(two.columns[0].size() == two.iters.size());
  CHECK_FALSE(two.monotone_regime);
  std::ostringstream os;
  two.write_csv(os);
  CHECK(os.str().rfind("iter,adm,ddp", 0) == 0);
}

TEST_CASE("svg plot is self-contained") {
  std::ostringstream os;
  write_svg_plot(os, {{"a", {1, 10, 100}, {1, 0.1, 0.01}}, {"b", {1, 10, 100}, {1, 0.5, -1}}},
                 true, true, "demo", "gap");
  const std::string svg = os.str();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("worker count honours the environment") {
  CHECK(worker_count() >= 1u);
}
