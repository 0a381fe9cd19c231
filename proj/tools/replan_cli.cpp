// Copyright 2026 replan_kit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: run scripted scenarios, benchmark planner/gating
// combinations, and diff two map files through the replanning gate.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "replan_kit/replan_kit.hpp"

namespace
{

namespace fs = std::filesystem;
using namespace replan_kit;

constexpr int kExitOk = 0;
constexpr int kExitRunFailed = 1;
constexpr int kExitBadInput = 2;

fs::path default_out_dir()
{
  if (const char * env = std::getenv("REPLAN_KIT_OUT")) {
    return env;
  }
  return "out";
}

std::string slurp(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw MapFormatError("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct ScenarioOverrides
{
  std::string planner;
  std::string gating;
  int runs{-1};
  std::int64_t seed{-1};
  double frequency{-1.0};
  int threshold{-1};

  void apply(Scenario & s) const
  {
    if (!planner.empty()) s.planner = planner;
    if (gating == "proposed") s.gating = GatingMode::proposed;
    if (gating == "always_replan") s.gating = GatingMode::always_replan;
    if (runs > 0) s.runs = runs;
    if (seed >= 0) s.seed = static_cast<std::uint64_t>(seed);
    if (frequency > 0.0) s.planner_frequency = frequency;
    if (threshold >= 0) s.noise_threshold = threshold;
  }
};

int cmd_run(const std::string & scenario_path, const ScenarioOverrides & overrides,
            const fs::path & out_dir)
{
  Scenario scenario = load_scenario(scenario_path);
  overrides.apply(scenario);
  fs::create_directories(out_dir);

  bool all_reached = true;
  for (int run = 0; run < scenario.runs; ++run) {
    const RunMetrics metrics = run_once(scenario);
    all_reached = all_reached && metrics.goal_reached;

    const std::string stem = "run" + std::to_string(run);
    std::ofstream trace(out_dir / (stem + "_trace.jsonl"));
    write_trace_jsonl(trace, metrics);
    std::ofstream csv(out_dir / (stem + "_path.csv"));
    write_path_csv(csv, metrics);

    std::cout << "run " << run << ": planner=" << scenario.planner
              << " gating=" << to_string(scenario.gating)
              << " goal_reached=" << (metrics.goal_reached ? "yes" : "no");
    if (!metrics.goal_reached) {
      std::cout << " (" << metrics.failure_reason << ")";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), " total_planning_time=%.4fs expansions=%zu",
                  metrics.total_planning_time, metrics.expansions_total);
    std::cout << buf << '\n';
  }
  std::cout << "traces written to " << out_dir.string() << '\n';
  return all_reached ? kExitOk : kExitRunFailed;
}

int cmd_bench(const std::string & scenario_path, std::vector<std::string> planners,
              std::vector<std::string> gatings, const ScenarioOverrides & overrides,
              const fs::path & out_dir, const std::string & format)
{
  Scenario scenario = load_scenario(scenario_path);
  overrides.apply(scenario);
  if (planners.empty()) {
    planners = {scenario.planner};
  }
  if (gatings.empty()) {
    gatings = {std::string(to_string(scenario.gating))};
  }

  const BenchReport report = run_bench(scenario, planners, gatings, scenario_path);

  fs::create_directories(out_dir);
  std::ofstream json_out(out_dir / "bench_report.json");
  json_out << bench_report_to_json(report).dump(2) << '\n';
  if (format == "csv") {
    std::ofstream csv_out(out_dir / "bench_report.csv");
    csv_out << format_csv(report);
  }

  std::cout << "scenario: " << report.scenario_path << " (hash " << report.scenario_hash
            << ")\nenvironment: " << report.environment << "\n\n"
            << format_table(report)
            << "\nreport written to " << (out_dir / "bench_report.json").string() << '\n';

  for (const BenchRow & row : report.rows) {
    if (!row.all_reached) {
      return kExitRunFailed;
    }
  }
  return kExitOk;
}

int cmd_diffmap(const std::string & path_a, const std::string & path_b, int threshold)
{
  const Costmap a = load_map(slurp(path_a));
  const Costmap b = load_map(slurp(path_b));
  const CostmapDelta delta = cost_diff(b, a, threshold);

  if (delta.empty()) {
    std::cout << "0 changed cells\n";
    return kExitOk;
  }
  int rmin = delta.changed.front().cell.row, rmax = rmin;
  int cmin = delta.changed.front().cell.col, cmax = cmin;
  for (const CellChange & ch : delta.changed) {
    rmin = std::min(rmin, ch.cell.row);
    rmax = std::max(rmax, ch.cell.row);
    cmin = std::min(cmin, ch.cell.col);
    cmax = std::max(cmax, ch.cell.col);
  }
  std::cout << delta.changed.size() << " changed cell"
            << (delta.changed.size() == 1 ? "" : "s") << ", magnitude " << delta.magnitude
            << ", bbox rows [" << rmin << "," << rmax << "] cols [" << cmin << "," << cmax
            << "]\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"replan_kit: change-gated global replanning on grid costmaps"};
  app.require_subcommand(1);

  ScenarioOverrides overrides;
  std::string scenario_path;
  fs::path out_dir = default_out_dir();

  auto add_common = [&](CLI::App * cmd) {
    cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    cmd->add_option("--runs", overrides.runs, "Override repetition count");
    cmd->add_option("--seed", overrides.seed, "Override scenario seed");
    cmd->add_option("--out", out_dir, "Output directory (default $REPLAN_KIT_OUT or ./out)");
    cmd->add_option("--frequency", overrides.frequency, "Override planner frequency (Hz)");
    cmd->add_option("--threshold", overrides.threshold, "Override noise threshold");
  };

  CLI::App * run = app.add_subcommand("run", "Run a scenario and write traces");
  add_common(run);
  run->add_option("--planner", overrides.planner, "Planner id")
    ->check(CLI::IsMember({"dijkstra", "a_star", "dstar_lite"}));
  run->add_option("--gating", overrides.gating, "Gating mode")
    ->check(CLI::IsMember({"proposed", "always_replan"}));

  CLI::App * bench = app.add_subcommand("bench", "Benchmark planner/gating combinations");
  add_common(bench);
  std::vector<std::string> planners;
  std::vector<std::string> gatings;
  std::string format = "table";
  bench->add_option("--planner", planners, "Planner ids (repeatable)")
    ->check(CLI::IsMember({"dijkstra", "a_star", "dstar_lite"}));
  bench->add_option("--gating", gatings, "Gating modes (repeatable)")
    ->check(CLI::IsMember({"proposed", "always_replan"}));
  bench->add_option("--format", format, "Also emit CSV with --format csv")
    ->check(CLI::IsMember({"table", "csv"}));

  CLI::App * diffmap = app.add_subcommand("diffmap", "Diff two map files");
  std::string map_a, map_b;
  int diff_threshold = 0;
  diffmap->add_option("map_a", map_a, "Previous map")->required();
  diffmap->add_option("map_b", map_b, "Current map")->required();
  diffmap->add_option("--threshold", diff_threshold, "Per-cell noise threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(scenario_path, overrides, out_dir);
    }
    if (bench->parsed()) {
      return cmd_bench(scenario_path, planners, gatings, overrides, out_dir, format);
    }
    if (diffmap->parsed()) {
      return cmd_diffmap(map_a, map_b, diff_threshold);
    }
  } catch (const ScenarioError & e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const MapFormatError & e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const DimensionMismatch & e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const UnreachableGoal & e) {
    std::cerr << "error: unreachable: " << e.what() << '\n';
    return kExitRunFailed;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  return kExitOk;
}
