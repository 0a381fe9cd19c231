// Copyright 2026 replan_kit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/utsname.h>

#include <nlohmann/json.hpp>

#include "replan_kit/costmap.hpp"
#include "replan_kit/sim.hpp"

namespace replan_kit
{

/// One planner x gating combination averaged over the scenario's runs.
struct BenchRow
{
  std::string planner;
  std::string gating;
  AggregateStats initial_time;
  std::vector<AggregateStats> replanning_times;  // one column per event
  AggregateStats total_time;
  AggregateStats expansions_total;
  int runs{0};
  bool all_reached{false};
  // Determinism surface: identical across repeated executions with the same
  // scenario and seed.
  nlohmann::json outcome_counts;
  std::vector<std::uint64_t> expansions_per_run;
  std::string path_digest;
  std::size_t path_cells{0};
};

struct BenchReport
{
  std::vector<BenchRow> rows;
  std::string scenario_path;
  std::string scenario_hash;
  std::string environment;
};

namespace detail
{

inline std::uint64_t fnv1a_bytes(const void * data, std::size_t n,
                                 std::uint64_t h = 1469598103934665603ULL)
{
  const auto * p = static_cast<const unsigned char *>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string digest_paths(const std::vector<RunMetrics> & runs)
{
  std::uint64_t h = 1469598103934665603ULL;
  for (const RunMetrics & m : runs) {
    for (const Cell & c : m.path_travelled) {
      h = fnv1a_bytes(&c.row, sizeof(c.row), h);
      h = fnv1a_bytes(&c.col, sizeof(c.col), h);
    }
  }
  return hex64(h);
}

}  // namespace detail

inline std::string file_content_hash(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  return detail::hex64(detail::fnv1a_bytes(bytes.data(), bytes.size()));
}

inline std::string environment_description()
{
  utsname u{};
  std::string desc = "unknown";
  if (uname(&u) == 0) {
    desc = std::string(u.sysname) + " " + u.release + " " + u.machine;
  }
#if defined(__clang__)
  desc += " clang " __clang_version__;
#elif defined(__GNUC__)
  desc += " gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__);
#endif
  return desc;
}

/// Cartesian product of planners x gatings over one scenario; each cell of
/// the report is averaged over the scenario's run count.
inline BenchReport run_bench(const Scenario & base, const std::vector<std::string> & planners,
                             const std::vector<std::string> & gatings,
                             const std::string & scenario_path = "")
{
  BenchReport report;
  report.scenario_path = scenario_path;
  report.scenario_hash = scenario_path.empty() ? "" : file_content_hash(scenario_path);
  report.environment = environment_description();

  for (const std::string & planner : planners) {
    for (const std::string & gating : gatings) {
      Scenario s = base;
      s.planner = planner;
      if (gating == "proposed") {
        s.gating = GatingMode::proposed;
      } else if (gating == "always_replan") {
        s.gating = GatingMode::always_replan;
      } else {
        throw std::invalid_argument("unknown gating mode: " + gating);
      }

      const std::vector<RunMetrics> runs = run_scenario(s);

      BenchRow row;
      row.planner = planner;
      row.gating = gating;
      row.runs = static_cast<int>(runs.size());
      row.all_reached = true;
      std::vector<double> initial, total, expansions;
      std::vector<std::vector<double>> per_event(base.events.size());
      for (const RunMetrics & m : runs) {
        initial.push_back(m.initial_planning_time);
        total.push_back(m.total_planning_time);
        expansions.push_back(static_cast<double>(m.expansions_total));
        row.expansions_per_run.push_back(m.expansions_total);
        row.all_reached = row.all_reached && m.goal_reached;
        for (std::size_t e = 0; e < per_event.size() && e < m.replanning_times.size(); ++e) {
          per_event[e].push_back(m.replanning_times[e]);
        }
      }
      row.initial_time = mean_sd(initial);
      row.total_time = mean_sd(total);
      row.expansions_total = mean_sd(expansions);
      for (const auto & samples : per_event) {
        row.replanning_times.push_back(mean_sd(samples));
      }
      nlohmann::json counts = nlohmann::json::object();
      if (!runs.empty()) {
        for (const auto & [kind, count] : runs.front().outcome_counts) {
          counts[std::string(to_string(kind))] = count;
        }
      }
      row.outcome_counts = std::move(counts);
      row.path_digest = detail::digest_paths(runs);
      row.path_cells = runs.empty() ? 0 : runs.front().path_travelled.size();
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

inline nlohmann::json bench_report_to_json(const BenchReport & report)
{
  nlohmann::json rows = nlohmann::json::array();
  for (const BenchRow & row : report.rows) {
    nlohmann::json replans = nlohmann::json::array();
    for (const AggregateStats & r : row.replanning_times) {
      replans.push_back({{"mean", r.mean}, {"sd", r.sd}});
    }
    rows.push_back({
      {"planner", row.planner},
      {"gating", row.gating},
      {"initial_time", {{"mean", row.initial_time.mean}, {"sd", row.initial_time.sd}}},
      {"replanning_times", std::move(replans)},
      {"total_time", {{"mean", row.total_time.mean}, {"sd", row.total_time.sd}}},
      {"expansions_total",
       {{"mean", row.expansions_total.mean}, {"sd", row.expansions_total.sd}}},
      {"runs", row.runs},
      {"all_reached", row.all_reached},
      {"outcome_counts", row.outcome_counts},
      {"expansions_per_run", row.expansions_per_run},
      {"path_digest", row.path_digest},
      {"path_cells", row.path_cells},
    });
  }
  return nlohmann::json{
    {"scenario", {{"path", report.scenario_path}, {"hash", report.scenario_hash}}},
    {"environment", report.environment},
    {"rows", std::move(rows)},
  };
}

namespace detail
{

inline std::string format_seconds(const AggregateStats & s)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f +-%.2f", s.mean, s.sd);
  return buf;
}

inline std::string format_count(const AggregateStats & s)
{
  char buf[64];
  if (s.sd == 0.0) {
    std::snprintf(buf, sizeof(buf), "%.0f", s.mean);
  } else {
    std::snprintf(buf, sizeof(buf), "%.0f +-%.1f", s.mean, s.sd);
  }
  return buf;
}

}  // namespace detail

/// Aligned text table mirroring the paper-style columns: initial time,
/// per-obstacle replanning time, total time, plus total expansions as the
/// hardware-independent column. Values are the same doubles serialized to
/// the JSON report.
inline std::string format_table(const BenchReport & report)
{
  std::size_t n_events = 0;
  for (const BenchRow & row : report.rows) {
    n_events = std::max(n_events, row.replanning_times.size());
  }

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"planner", "gating", "initial (s)"};
  for (std::size_t e = 0; e < n_events; ++e) {
    header.push_back("replan " + std::to_string(e + 1) + " (s)");
  }
  header.insert(header.end(), {"total (s)", "expansions"});
  grid.push_back(header);

  for (const BenchRow & row : report.rows) {
    std::vector<std::string> line{row.planner, row.gating,
                                  detail::format_seconds(row.initial_time)};
    for (std::size_t e = 0; e < n_events; ++e) {
      line.push_back(e < row.replanning_times.size()
        ? detail::format_seconds(row.replanning_times[e]) : "-");
    }
    line.push_back(detail::format_seconds(row.total_time));
    line.push_back(detail::format_count(row.expansions_total));
    grid.push_back(std::move(line));
  }

  std::vector<std::size_t> widths(grid.front().size(), 0);
  for (const auto & line : grid) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      widths[i] = std::max(widths[i], line[i].size());
    }
  }
  std::string out;
  for (const auto & line : grid) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      out += line[i];
      if (i + 1 < line.size()) {
        out.append(widths[i] - line[i].size() + 2, ' ');
      }
    }
    out += '\n';
  }
  return out;
}

inline std::string format_csv(const BenchReport & report)
{
  std::size_t n_events = 0;
  for (const BenchRow & row : report.rows) {
    n_events = std::max(n_events, row.replanning_times.size());
  }
  std::string out = "planner,gating,initial_mean,initial_sd";
  for (std::size_t e = 0; e < n_events; ++e) {
    out += ",replan" + std::to_string(e + 1) + "_mean,replan" + std::to_string(e + 1) + "_sd";
  }
  out += ",total_mean,total_sd,expansions_mean,expansions_sd\n";
  for (const BenchRow & row : report.rows) {
    out += row.planner + "," + row.gating + "," +
           detail::format_double(row.initial_time.mean) + "," +
           detail::format_double(row.initial_time.sd);
    for (std::size_t e = 0; e < n_events; ++e) {
      if (e < row.replanning_times.size()) {
        out += "," + detail::format_double(row.replanning_times[e].mean) + "," +
               detail::format_double(row.replanning_times[e].sd);
      } else {
        out += ",,";
      }
    }
    out += "," + detail::format_double(row.total_time.mean) + "," +
           detail::format_double(row.total_time.sd) + "," +
           detail::format_double(row.expansions_total.mean) + "," +
           detail::format_double(row.expansions_total.sd) + "\n";
  }
  return out;
}

}  // namespace replan_kit
