#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace nash_adm {

struct TraceRecord {
  /// Steps taken so far. For ADM the record at iter j describes X^{j+1}.
  long iter = 0;
  double rel_error = 0.0;  // NaN when no reference point was supplied
  double consensus_residual = 0.0;
  std::optional<double> gap;
  std::int64_t elapsed_ns = 0;
};

struct Snapshot {
  long iter = 0;
  Eigen::MatrixXd X;
};

struct RunTrace {
  std::string algorithm;
  nlohmann::json schedule;
  std::vector<TraceRecord> records;
  std::vector<Snapshot> snapshots;
  /// Owner-block joint action after every step; filled only on request.
  std::vector<Eigen::VectorXd> actions;

  Eigen::MatrixXd final_state;
  Eigen::VectorXd final_action;
  /// Weighted average of the actions (empty when not tracked).
  Eigen::VectorXd final_average;

  /// rel_error fell back to the absolute error because the reference is 0.
  bool absolute_error = false;
  long gradient_evaluations = 0;
  long owner_corrections = 0;
  std::int64_t wall_ns = 0;

  /// `iter,rel_error,consensus_residual,gap,elapsed_ns`. With timing off the
  /// last column is left empty so equal runs give equal bytes.
  void write_csv(std::ostream& out, bool timing = true) const;
  nlohmann::json snapshots_json() const;
};

}  // namespace nash_adm
