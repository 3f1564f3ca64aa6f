#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nash_adm/algorithms.hpp"
#include "nash_adm/game.hpp"
#include "nash_adm/network.hpp"
#include "nash_adm/schedules.hpp"

namespace nash_adm {

/// One run, as stored in a JSON config file.
///
/// `game` is either an inline game document, {"file": path} or
/// {"generate": {n, d, kind, seed, box_lo, box_hi, mu, condition_number}}.
/// `graph` is an inline graph document, {"file": path} or
/// {"tree": {"seed": s}, "rule": ...}; also {"complete": true}.
struct ExperimentConfig {
  std::string label;
  nlohmann::json game = nlohmann::json::object();
  nlohmann::json graph = nlohmann::json::object();
  std::string algorithm = "adm";  // adm | ddp | centralized
  ScheduleSpec schedule;
  long K = 1000;
  std::uint64_t seed = 1;  // initial estimates
  long gap_every = 25;
  long snapshot_every = 50;
  long record_every = 1;
  long reference_K = 20000;
  std::optional<std::string> reference_file;
  std::optional<double> stop_below;
  std::string output_dir;

  bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& doc);
/// Relative paths inside the document are resolved against the file's folder.
ExperimentConfig load_config(const std::filesystem::path& path);

Game resolve_game(const nlohmann::json& spec, const std::filesystem::path& base);
MixingMatrix resolve_graph(const nlohmann::json& spec, int n,
                           const std::filesystem::path& base);

/// 64-bit FNV-1a of the canonical game document.
std::uint64_t game_hash(const Game& game);

/// Estimation matrix with every entry drawn uniformly from its column's box.
Matrix random_estimates(const Game& game, std::uint64_t seed);

struct ExperimentResult {
  ExperimentConfig config;
  RunTrace trace;
  std::uint64_t game_hash = 0;
  std::uint64_t graph_hash = 0;
  Vector x_star;
  nlohmann::json summary;
};

/// Validates compatibility before any compute (config error on mismatch),
/// then runs. Writes nothing.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& base = ".");

/// trace.csv, summary.json and snapshots.json into `dir` (created if needed).
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

struct Comparison {
  std::vector<ExperimentResult> runs;
  bool monotone_regime = false;  // gap columns on log-log axes
  std::vector<long> iters;
  std::vector<std::vector<double>> columns;  // NaN where a run has no value
  void write_csv(std::ostream& out) const;
};

/// Runs configs in parallel (NASH_ADM_THREADS caps the worker count). All
/// configs must resolve to the same game and graph.
Comparison compare(const std::vector<ExperimentConfig>& configs,
                   const std::vector<std::filesystem::path>& bases);

/// Worker cap from NASH_ADM_THREADS, else hardware concurrency (at least 1).
unsigned worker_count();

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained SVG line plot. Non-positive values are dropped on log axes.
void write_svg_plot(std::ostream& out, const std::vector<PlotSeries>& series,
                    bool log_x, bool log_y, const std::string& title,
                    const std::string& y_label);

}  // namespace nash_adm
