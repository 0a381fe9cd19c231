// Copyright 2026 replan_kit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "replan_kit/costmap.hpp"
#include "replan_kit/errors.hpp"
#include "replan_kit/replanner.hpp"
#include "replan_kit/search.hpp"

namespace replan_kit
{

enum class EventAction
{
  add,
  remove,
};

enum class GatingMode
{
  proposed,       // Algorithm-1 gating (goal change / costmap change)
  always_replan,  // from-scratch search on every planner tick
};

inline std::string_view to_string(GatingMode mode)
{
  return mode == GatingMode::proposed ? "proposed" : "always_replan";
}

/// Scripted obstacle change. Triggered either at an absolute simulation time
/// or when the robot has covered the given fraction of the initial plan.
struct ObstacleEvent
{
  std::optional<double> time;
  std::optional<double> progress;
  Cell top_left;
  int width{1};
  int height{1};
  EventAction action{EventAction::add};

  bool covers(Cell c) const
  {
    return c.row >= top_left.row && c.row < top_left.row + height &&
           c.col >= top_left.col && c.col < top_left.col + width;
  }
};

struct Scenario
{
  std::string map_path;  // resolved; empty when map_text is inline
  std::string map_text;
  double robot_radius{0.0};
  Cell start;
  Cell goal;
  double planner_frequency{2.0};  // plans requested per second
  double robot_speed{4.0};        // cells per second
  std::vector<ObstacleEvent> events;
  std::string planner{"dstar_lite"};
  GatingMode gating{GatingMode::proposed};
  int runs{5};
  std::uint64_t seed{0};
  int noise_threshold{0};
};

/// Mutable world state: the raw obstacle map plus its inflated view. The
/// planner only ever sees snapshots of the inflated map.
struct SimWorld
{
  Costmap base;
  Costmap inflated;
  double robot_radius{0.0};

  SimWorld(Costmap base_map, double radius)
  : base(std::move(base_map)), inflated(inflate(base, radius)), robot_radius(radius)
  {
  }
};

/// One planner tick as logged to the JSONL trace.
struct TickRecord
{
  double time{0.0};
  OutcomeKind outcome{OutcomeKind::fresh_plan};
  std::size_t expansions{0};
  double planning_time{0.0};
  double row{0.0};
  double col{0.0};
};

/// The planning request that first saw an obstacle event, with enough
/// context to rerun a from-scratch search on the identical post-event map.
struct EventReplan
{
  std::size_t event_index{0};
  OutcomeKind outcome{OutcomeKind::incremental_replan};
  std::size_t expansions{0};
  double planning_time{0.0};
  Cell start;
  Costmap map_snapshot;
};

struct RunMetrics
{
  double initial_planning_time{0.0};
  std::vector<double> replanning_times;  // one per event-following replan
  double total_planning_time{0.0};
  std::map<OutcomeKind, int> outcome_counts;
  std::vector<Cell> path_travelled;
  bool goal_reached{false};
  std::string failure_reason;
  std::size_t expansions_total{0};

  double initial_plan_length{0.0};  // meters
  std::vector<TickRecord> ticks;
  std::vector<std::pair<double, std::array<double, 2>>> trace_positions;
  std::vector<EventReplan> event_replans;
  std::vector<std::pair<std::size_t, Plan>> plans;  // (tick index, plan) per search
};

// ---------------------------------------------------------------------------
//  Scenario I/O
// ---------------------------------------------------------------------------

inline Scenario scenario_from_json(const nlohmann::json & j,
                                   const std::filesystem::path & base_dir)
{
  if (!j.is_object()) {
    throw ScenarioError("scenario: expected a JSON object");
  }
  Scenario s;
  try {
    if (j.contains("map_text")) {
      s.map_text = j.at("map_text").get<std::string>();
    } else {
      auto rel = std::filesystem::path(j.at("map").get<std::string>());
      s.map_path = (rel.is_absolute() ? rel : base_dir / rel).string();
    }
    s.start = {j.at("start").at(0).get<int>(), j.at("start").at(1).get<int>()};
    s.goal = {j.at("goal").at(0).get<int>(), j.at("goal").at(1).get<int>()};
    s.robot_radius = j.value("robot_radius", 0.0);
    s.planner_frequency = j.value("planner_frequency", 2.0);
    s.robot_speed = j.value("robot_speed", 4.0);
    s.planner = j.value("planner", std::string("dstar_lite"));
    s.runs = j.value("runs", 5);
    s.seed = j.value("seed", std::uint64_t{0});
    s.noise_threshold = j.value("threshold", 0);
    const std::string gating = j.value("gating", std::string("proposed"));
    if (gating == "proposed") {
      s.gating = GatingMode::proposed;
    } else if (gating == "always_replan") {
      s.gating = GatingMode::always_replan;
    } else {
      throw ScenarioError("scenario: unknown gating mode '" + gating + "'");
    }
    for (const auto & ev : j.value("events", nlohmann::json::array())) {
      ObstacleEvent e;
      if (ev.contains("progress")) {
        e.progress = ev.at("progress").get<double>();
      }
      if (ev.contains("time")) {
        e.time = ev.at("time").get<double>();
      }
      if (!e.progress && !e.time) {
        throw ScenarioError("scenario event: needs 'progress' or 'time'");
      }
      const auto & rect = ev.at("rect");
      e.top_left = {rect.at(0).get<int>(), rect.at(1).get<int>()};
      e.width = rect.at(2).get<int>();
      e.height = rect.at(3).get<int>();
      const std::string action = ev.value("action", std::string("add"));
      if (action == "add") {
        e.action = EventAction::add;
      } else if (action == "remove") {
        e.action = EventAction::remove;
      } else {
        throw ScenarioError("scenario event: unknown action '" + action + "'");
      }
      s.events.push_back(e);
    }
  } catch (const nlohmann::json::exception & ex) {
    throw ScenarioError(std::string("scenario: ") + ex.what());
  }
  if (s.planner_frequency <= 0.0 || s.robot_speed <= 0.0) {
    throw ScenarioError("scenario: planner_frequency and robot_speed must be positive");
  }
  if (s.runs < 1) {
    throw ScenarioError("scenario: runs must be >= 1");
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError("scenario: cannot open " + path.string());
  }
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ScenarioError("scenario: invalid JSON in " + path.string());
  }
  return scenario_from_json(j, path.parent_path());
}

inline Costmap load_scenario_map(const Scenario & s)
{
  if (!s.map_text.empty()) {
    return load_map(s.map_text);
  }
  std::ifstream in(s.map_path);
  if (!in) {
    throw ScenarioError("scenario: cannot open map " + s.map_path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_map(buf.str());
}

// ---------------------------------------------------------------------------
//  World mutation
// ---------------------------------------------------------------------------

/// Applies an obstacle event to the base map and re-derives the inflated
/// view. Returns the delta induced on the inflated map (what the planner
/// will observe at the next tick).
inline CostmapDelta apply_event(SimWorld & world, const ObstacleEvent & event)
{
  const Cell last{event.top_left.row + event.height - 1,
                  event.top_left.col + event.width - 1};
  if (event.width < 1 || event.height < 1 || !world.base.in_bounds(event.top_left) ||
      !world.base.in_bounds(last)) {
    throw std::invalid_argument("apply_event: footprint out of bounds");
  }
  const std::uint8_t cost = event.action == EventAction::add ? kLethalCost : 0;
  for (int r = event.top_left.row; r <= last.row; ++r) {
    for (int c = event.top_left.col; c <= last.col; ++c) {
      world.base.set({r, c}, cost);
    }
  }
  Costmap next = inflate(world.base, world.robot_radius);
  CostmapDelta delta = cost_diff(next, world.inflated, 0);
  world.inflated = std::move(next);
  return delta;
}

// ---------------------------------------------------------------------------
//  Robot motion
// ---------------------------------------------------------------------------

using Position = std::array<double, 2>;  // (row, col) in cell units

inline double position_distance(const Position & a, const Position & b)
{
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

inline Position cell_center(Cell c)
{
  return {static_cast<double>(c.row), static_cast<double>(c.col)};
}

inline Cell nearest_cell(const Position & p)
{
  return {static_cast<int>(std::llround(p[0])), static_cast<int>(std::llround(p[1]))};
}

namespace detail
{

struct PlanProjection
{
  double arc{0.0};   // arc length from the plan head to the projected point
  double dist{0.0};  // distance from the position to the projected point
};

inline PlanProjection project_on_plan(const Position & pos, const Plan & plan)
{
  PlanProjection best{0.0, position_distance(pos, cell_center(plan.cells.front()))};
  double arc = 0.0;
  for (std::size_t i = 1; i < plan.cells.size(); ++i) {
    const Position a = cell_center(plan.cells[i - 1]);
    const Position b = cell_center(plan.cells[i]);
    const double seg_len = position_distance(a, b);
    const double t = seg_len == 0.0 ? 0.0 :
      std::clamp(((pos[0] - a[0]) * (b[0] - a[0]) + (pos[1] - a[1]) * (b[1] - a[1])) /
                 (seg_len * seg_len), 0.0, 1.0);
    const Position p{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
    const double d = position_distance(pos, p);
    if (d < best.dist) {
      best = {arc + t * seg_len, d};
    }
    arc += seg_len;
  }
  return best;
}

inline double plan_length_cells(const Plan & plan)
{
  double len = 0.0;
  for (std::size_t i = 1; i < plan.cells.size(); ++i) {
    len += position_distance(cell_center(plan.cells[i - 1]), cell_center(plan.cells[i]));
  }
  return len;
}

inline Position point_at_arc(const Plan & plan, double arc)
{
  for (std::size_t i = 1; i < plan.cells.size(); ++i) {
    const Position a = cell_center(plan.cells[i - 1]);
    const Position b = cell_center(plan.cells[i]);
    const double seg_len = position_distance(a, b);
    if (arc <= seg_len) {
      const double t = seg_len == 0.0 ? 0.0 : arc / seg_len;
      return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
    }
    arc -= seg_len;
  }
  return cell_center(plan.cells.back());
}

}  // namespace detail

/// Advances the robot `distance` cells along the plan's polyline, clamping at
/// the goal. A robot off the plan (the post-suffix-reuse gap) first closes
/// the gap by heading straight at the plan's first cell.
inline Position step_robot(Position position, const Plan & plan, double distance)
{
  if (plan.empty()) {
    throw std::invalid_argument("step_robot: empty plan");
  }
  constexpr double kOnPlanEps = 1e-6;
  const auto proj = detail::project_on_plan(position, plan);
  if (proj.dist > kOnPlanEps) {
    const Position target = cell_center(plan.cells.front());
    const double gap = position_distance(position, target);
    if (distance < gap) {
      const double t = distance / gap;
      return {position[0] + t * (target[0] - position[0]),
              position[1] + t * (target[1] - position[1])};
    }
    position = target;
    distance -= gap;
    return step_robot(position, plan, distance);
  }
  const double total = detail::plan_length_cells(plan);
  const double arc = std::min(proj.arc + distance, total);
  return detail::point_at_arc(plan, arc);
}

// ---------------------------------------------------------------------------
//  Scenario engine
// ---------------------------------------------------------------------------

namespace detail
{

/// Robot motion is sub-sampled at 5 steps per planner period.
inline constexpr int kSubstepsPerTick = 5;

inline void validate_scenario(const Scenario & s, const SimWorld & world)
{
  if (!world.inflated.in_bounds(s.start) || !world.inflated.in_bounds(s.goal)) {
    throw ScenarioError("scenario: start or goal out of bounds");
  }
  if (world.inflated.lethal(s.start)) {
    throw ScenarioError("scenario: start not traversable after inflation");
  }
  if (world.inflated.lethal(s.goal)) {
    throw ScenarioError("scenario: goal not traversable after inflation");
  }
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const ObstacleEvent & e = s.events[i];
    const Cell last{e.top_left.row + e.height - 1, e.top_left.col + e.width - 1};
    if (e.width < 1 || e.height < 1 || !world.base.in_bounds(e.top_left) ||
        !world.base.in_bounds(last)) {
      throw ScenarioError("scenario: event " + std::to_string(i) + " footprint out of bounds");
    }
    if (e.covers(s.goal)) {
      throw ScenarioError("scenario: event " + std::to_string(i) + " covers the goal");
    }
    if (e.progress && (*e.progress < 0.0 || *e.progress > 1.0)) {
      throw ScenarioError("scenario: event " + std::to_string(i) + " progress outside [0,1]");
    }
  }
  // Triggers must be listed in firing order (per trigger kind).
  double last_time = -kInfCost;
  double last_progress = -kInfCost;
  for (const ObstacleEvent & e : s.events) {
    if (e.time) {
      if (*e.time < last_time) {
        throw ScenarioError("scenario: time-triggered events out of order");
      }
      last_time = *e.time;
    }
    if (e.progress) {
      if (*e.progress < last_progress) {
        throw ScenarioError("scenario: progress-triggered events out of order");
      }
      last_progress = *e.progress;
    }
  }
}

}  // namespace detail

/// One deterministic simulation run: the robot follows the current global
/// plan at robot_speed while the planner is polled at planner_frequency and
/// scripted events mutate the world. Planning time is measured but does not
/// consume simulation time. Progress-triggered events fire on commanded
/// travel distance as a fraction of the initial plan, which keeps the
/// snapshot sequence identical across planner choices.
inline RunMetrics run_once(const Scenario & scenario)
{
  SimWorld world(load_scenario_map(scenario), scenario.robot_radius);
  detail::validate_scenario(scenario, world);

  PlannerMemory memory(make_backend(scenario.planner), scenario.noise_threshold);
  std::unique_ptr<PlannerBackend> direct_backend;  // always_replan bypasses the gate
  if (scenario.gating == GatingMode::always_replan) {
    direct_backend = make_backend(scenario.planner);
  }

  RunMetrics metrics;
  const double dt = 1.0 / (scenario.planner_frequency * detail::kSubstepsPerTick);
  const double step_cells = scenario.robot_speed * dt;

  Position pos = cell_center(scenario.start);
  Plan current_plan;
  double t = 0.0;
  double travelled = 0.0;       // commanded distance, cells
  double initial_len_cells = 0.0;
  double timeout = kInfCost;
  std::size_t tick_index = 0;
  std::vector<char> applied(scenario.events.size(), 0);
  std::vector<std::size_t> pending_events;  // applied but not yet seen by the planner

  metrics.path_travelled.push_back(scenario.start);
  metrics.trace_positions.push_back({t, pos});

  for (std::size_t substep = 0;; ++substep) {
    if (substep % detail::kSubstepsPerTick == 0) {
      const Cell robot_cell = nearest_cell(pos);
      if (world.inflated.lethal(robot_cell)) {
        throw ScenarioError("scenario: robot cell became lethal at t=" + std::to_string(t));
      }
      RequestOutcome outcome;
      try {
        if (scenario.gating == GatingMode::proposed) {
          current_plan = memory.make_plan({robot_cell, scenario.goal, world.inflated});
          outcome = memory.last_outcome();
        } else {
          const auto t0 = std::chrono::steady_clock::now();
          SearchResult r = direct_backend->plan(world.inflated, robot_cell, scenario.goal);
          outcome.kind = OutcomeKind::fresh_plan;
          outcome.planning_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          outcome.expansions = r.stats.expansions;
          outcome.plan_length = r.plan.total_cost;
          current_plan = std::move(r.plan);
        }
      } catch (const UnreachableGoal &) {
        metrics.outcome_counts[OutcomeKind::failure] += 1;
        metrics.goal_reached = false;
        metrics.failure_reason = "unreachable";
        return metrics;
      }

      metrics.outcome_counts[outcome.kind] += 1;
      metrics.total_planning_time += outcome.planning_time;
      metrics.expansions_total += outcome.expansions;
      metrics.ticks.push_back({t, outcome.kind, outcome.expansions, outcome.planning_time,
                               pos[0], pos[1]});
      if (tick_index == 0) {
        metrics.initial_planning_time = outcome.planning_time;
        metrics.initial_plan_length = current_plan.total_cost;
        initial_len_cells = current_plan.total_cost / world.inflated.resolution();
        timeout = initial_len_cells > 0.0
          ? 10.0 * initial_len_cells / scenario.robot_speed
          : 1.0 / scenario.planner_frequency;
      }
      if (outcome.kind != OutcomeKind::suffix_reuse) {
        metrics.plans.emplace_back(tick_index, current_plan);
      }
      for (std::size_t ev : pending_events) {
        metrics.event_replans.push_back({ev, outcome.kind, outcome.expansions,
                                         outcome.planning_time, robot_cell, world.inflated});
        metrics.replanning_times.push_back(outcome.planning_time);
      }
      pending_events.clear();
      ++tick_index;
    }

    pos = step_robot(pos, current_plan, step_cells);
    travelled += step_cells;
    t = static_cast<double>(substep + 1) * dt;
    metrics.trace_positions.push_back({t, pos});
    const Cell pos_cell = nearest_cell(pos);
    if (pos_cell != metrics.path_travelled.back()) {
      metrics.path_travelled.push_back(pos_cell);
    }

    for (std::size_t i = 0; i < scenario.events.size(); ++i) {
      if (applied[i]) {
        continue;
      }
      const ObstacleEvent & e = scenario.events[i];
      const bool due = (e.time && t >= *e.time) ||
        (e.progress && initial_len_cells > 0.0 &&
         travelled / initial_len_cells >= *e.progress);
      if (!due) {
        continue;
      }
      if (e.covers(nearest_cell(pos))) {
        throw ScenarioError("scenario: event " + std::to_string(i) +
                            " would cover the robot");
      }
      apply_event(world, e);
      applied[i] = 1;
      pending_events.push_back(i);
    }

    if (position_distance(pos, cell_center(scenario.goal)) < 1e-9) {
      metrics.goal_reached = true;
      break;
    }
    if (t > timeout) {
      metrics.goal_reached = false;
      metrics.failure_reason = "timeout";
      break;
    }
  }
  return metrics;
}

/// Runs the scenario `runs` times (the paper-style repetition for timing
/// averages; everything except wall-clock timings is identical across runs).
inline std::vector<RunMetrics> run_scenario(const Scenario & scenario)
{
  std::vector<RunMetrics> out;
  out.reserve(static_cast<std::size_t>(scenario.runs));
  for (int i = 0; i < scenario.runs; ++i) {
    out.push_back(run_once(scenario));
  }
  return out;
}

// ---------------------------------------------------------------------------
//  Aggregates and trace export
// ---------------------------------------------------------------------------

struct AggregateStats
{
  double mean{0.0};
  double sd{0.0};
};

inline AggregateStats mean_sd(const std::vector<double> & samples)
{
  if (samples.empty()) {
    return {};
  }
  double sum = 0.0;
  for (double v : samples) {
    sum += v;
  }
  const double mean = sum / static_cast<double>(samples.size());
  if (samples.size() < 2) {
    return {mean, 0.0};
  }
  double ss = 0.0;
  for (double v : samples) {
    ss += (v - mean) * (v - mean);
  }
  return {mean, std::sqrt(ss / static_cast<double>(samples.size() - 1))};
}

inline nlohmann::json run_metrics_to_json(const RunMetrics & m)
{
  nlohmann::json counts = nlohmann::json::object();
  for (const auto & [kind, count] : m.outcome_counts) {
    counts[std::string(to_string(kind))] = count;
  }
  nlohmann::json path = nlohmann::json::array();
  for (const Cell & c : m.path_travelled) {
    path.push_back({c.row, c.col});
  }
  return nlohmann::json{
    {"initial_planning_time", m.initial_planning_time},
    {"replanning_times", m.replanning_times},
    {"total_planning_time", m.total_planning_time},
    {"outcome_counts", std::move(counts)},
    {"goal_reached", m.goal_reached},
    {"failure_reason", m.failure_reason},
    {"expansions_total", m.expansions_total},
    {"initial_plan_length", m.initial_plan_length},
    {"path_travelled", std::move(path)},
  };
}

/// JSON-lines trace: one record per planner tick, then a final metrics record.
inline void write_trace_jsonl(std::ostream & out, const RunMetrics & m)
{
  for (const TickRecord & tick : m.ticks) {
    out << nlohmann::json{
      {"time", tick.time},
      {"outcome", to_string(tick.outcome)},
      {"expansions", tick.expansions},
      {"planning_time", tick.planning_time},
      {"robot", {tick.row, tick.col}},
    }.dump() << '\n';
  }
  out << nlohmann::json{{"metrics", run_metrics_to_json(m)}}.dump() << '\n';
}

/// CSV path trace: time,row,col per motion substep.
inline void write_path_csv(std::ostream & out, const RunMetrics & m)
{
  out << "time,row,col\n";
  for (const auto & [time, p] : m.trace_positions) {
    out << detail::format_double(time) << ',' << detail::format_double(p[0]) << ','
        << detail::format_double(p[1]) << '\n';
  }
}

}  // namespace replan_kit
