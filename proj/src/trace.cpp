#include "nash_adm/trace.hpp"

#include <cmath>
#include <cstdio>

namespace nash_adm {

namespace {

void put_number(std::ostream& out, double v) {
  if (!std::isfinite(v)) return;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void RunTrace::write_csv(std::ostream& out, bool timing) const {
  out << "iter,rel_error,consensus_residual,gap,elapsed_ns\n";
  for (const auto& r : records) {
    out << r.iter << ',';
    put_number(out, r.rel_error);
    out << ',';
    put_number(out, r.consensus_residual);
    out << ',';
    if (r.gap) put_number(out, *r.gap);
    out << ',';
    if (timing) out << r.elapsed_ns;
    out << '\n';
  }
}

nlohmann::json RunTrace::snapshots_json() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& s : snapshots) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < s.X.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(s.X.cols()));
      for (Eigen::Index c = 0; c < s.X.cols(); ++c) row[static_cast<std::size_t>(c)] = s.X(r, c);
      rows.push_back(row);
    }
    doc.push_back({{"iter", s.iter}, {"X", rows}});
  }
  return doc;
}

}  // namespace nash_adm
