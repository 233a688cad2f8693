#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rogat/graph.hpp"
#include "rogat/io.hpp"

// =============================================================================
/// @file report.hpp
/// @brief Machine-readable experiment reports: per-run CSV rows plus an
/// aggregate JSON, mean and sample standard deviation recomputable from rows.
// =============================================================================

namespace rogat {

struct RunRow {
  std::map<std::string, std::string> cell;  ///< grid coordinates (rate, model, ...)
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double runtime_s = 0.0;
  std::int64_t n_same = 0, n_diff = 0;      ///< link stats of the trained-on graph
  double fake_real_final = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> ratio_trace;
  bool partial = false;                     ///< runtime guard tripped
};

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double sample_std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

struct Report {
  std::string command;
  std::map<std::string, std::string> config;  ///< fully resolved key=value view
  std::vector<RunRow> rows;

  struct Aggregate {
    std::map<std::string, std::string> cell;
    int n = 0;
    double mean = 0.0;
    double stddev = 0.0;
  };

  /// Accuracy mean and sample std per cell, rows grouped by their exact cell
  /// map, in first-appearance order.
  std::vector<Aggregate> aggregates() const {
    std::vector<Aggregate> out;
    std::vector<std::vector<double>> buckets;
    for (const auto& row : rows) {
      std::size_t k = 0;
      for (; k < out.size(); ++k)
        if (out[k].cell == row.cell) break;
      if (k == out.size()) {
        out.push_back({row.cell, 0, 0.0, 0.0});
        buckets.emplace_back();
      }
      buckets[k].push_back(row.accuracy);
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k].n = static_cast<int>(buckets[k].size());
      out[k].mean = mean_of(buckets[k]);
      out[k].stddev = sample_std_of(buckets[k]);
    }
    return out;
  }

  bool all_complete() const {
    for (const auto& row : rows)
      if (row.partial) return false;
    return true;
  }

  void write_csv(const std::string& path) const {
    std::vector<std::string> keys;
    for (const auto& row : rows)
      for (const auto& [k, v] : row.cell)
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    std::ofstream out(path);
    ROGAT_REQUIRE(out.good(), "report: cannot write " + path);
    for (const auto& k : keys) out << k << ',';
    out << "seed,accuracy,runtime_s,n_same,n_diff,fake_real_final,partial\n";
    for (const auto& row : rows) {
      for (const auto& k : keys) {
        const auto it = row.cell.find(k);
        out << (it == row.cell.end() ? "" : it->second) << ',';
      }
      out << row.seed << ',' << detail::format_double(row.accuracy) << ','
          << detail::format_double(row.runtime_s) << ',' << row.n_same << ',' << row.n_diff
          << ',';
      if (std::isfinite(row.fake_real_final))
        out << detail::format_double(row.fake_real_final);
      out << ',' << (row.partial ? 1 : 0) << '\n';
    }
  }

  void write_json(const std::string& path) const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config;
    auto& jrows = j["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json jr;
      jr["cell"] = row.cell;
      jr["seed"] = row.seed;
      jr["accuracy"] = row.accuracy;
      jr["runtime_s"] = row.runtime_s;
      jr["n_same"] = row.n_same;
      jr["n_diff"] = row.n_diff;
      if (std::isfinite(row.fake_real_final)) jr["fake_real_final"] = row.fake_real_final;
      if (!row.ratio_trace.empty()) jr["ratio_trace"] = row.ratio_trace;
      jr["partial"] = row.partial;
      jrows.push_back(std::move(jr));
    }
    auto& jagg = j["aggregates"] = nlohmann::json::array();
    for (const auto& a : aggregates()) {
      nlohmann::json ja;
      ja["cell"] = a.cell;
      ja["n"] = a.n;
      ja["mean"] = a.mean;
      ja["std"] = a.stddev;
      jagg.push_back(std::move(ja));
    }
    j["all_complete"] = all_complete();
    std::ofstream out(path);
    ROGAT_REQUIRE(out.good(), "report: cannot write " + path);
    out << j.dump(2) << '\n';
  }

  /// Short fixed-width table for terminal output.
  std::string summary() const {
    std::string s;
    for (const auto& a : aggregates()) {
      std::string cell;
      for (const auto& [k, v] : a.cell) cell += k + "=" + v + " ";
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%-40s n=%-3d acc=%.4f +/- %.4f\n", cell.c_str(), a.n,
                    a.mean, a.stddev);
      s += buf;
    }
    return s;
  }
};

}  // namespace rogat
