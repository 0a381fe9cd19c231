// Copyright 2026 replan_kit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "replan_kit/costmap.hpp"
#include "replan_kit/errors.hpp"

namespace replan_kit
{

inline constexpr double kInfCost = std::numeric_limits<double>::infinity();

/// Ordered cell sequence from start to goal inclusive, with the summed step
/// cost in meters.
struct Plan
{
  std::vector<Cell> cells;
  double total_cost{0.0};

  bool empty() const { return cells.empty(); }
  std::size_t size() const { return cells.size(); }
  Cell front() const { return cells.front(); }
  Cell back() const { return cells.back(); }
};

struct SearchStats
{
  std::size_t expansions{0};
  std::size_t queue_peak{0};
  double wall_time{0.0};
};

struct SearchResult
{
  Plan plan;
  SearchStats stats;
};

/// Octile distance: resolution * (max(dx,dy) + (sqrt(2)-1) * min(dx,dy)).
/// Admissible and consistent on the 8-connected octile cost model.
inline double octile_heuristic(Cell a, Cell b, double resolution)
{
  const double dr = std::abs(a.row - b.row);
  const double dc = std::abs(a.col - b.col);
  return resolution * (std::max(dr, dc) + (kSqrt2 - 1.0) * std::min(dr, dc));
}

inline nlohmann::json plan_to_json(const Plan & plan)
{
  nlohmann::json cells = nlohmann::json::array();
  for (const Cell & c : plan.cells) {
    cells.push_back({c.row, c.col});
  }
  return nlohmann::json{{"cells", std::move(cells)}, {"total_cost", plan.total_cost}};
}

namespace detail
{

inline void validate_endpoints(const Costmap & map, Cell start, Cell goal)
{
  auto describe = [](Cell c) {
    return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
  };
  if (!map.in_bounds(start)) {
    throw InvalidEndpoint("start " + describe(start) + " out of bounds");
  }
  if (!map.in_bounds(goal)) {
    throw InvalidEndpoint("goal " + describe(goal) + " out of bounds");
  }
  if (map.lethal(start)) {
    throw InvalidEndpoint("start " + describe(start) + " is lethal");
  }
  if (map.lethal(goal)) {
    throw InvalidEndpoint("goal " + describe(goal) + " is lethal");
  }
}

/// Recomputes a plan's cost as the sum of octile step costs, accumulated in
/// path order so identical paths always produce bit-identical totals.
inline double path_cost(const std::vector<Cell> & cells, double resolution)
{
  double total = 0.0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const bool diagonal =
      cells[i].row != cells[i - 1].row && cells[i].col != cells[i - 1].col;
    total += diagonal ? resolution * kSqrt2 : resolution;
  }
  return total;
}

/// Shared best-first core. Dijkstra is the zero-heuristic instantiation so
/// both planners share one tested code path and their expansion counts are
/// directly comparable. Tie-breaking is lexicographic on (f, h, row, col),
/// which makes plans fully deterministic.
inline SearchResult grid_search(const Costmap & map, Cell start, Cell goal,
                                bool use_heuristic)
{
  validate_endpoints(map, start, goal);

  struct QueueEntry
  {
    double f;
    double h;
    Cell cell;
  };
  struct EntryAfter
  {
    bool operator()(const QueueEntry & a, const QueueEntry & b) const
    {
      if (a.f != b.f) return a.f > b.f;
      if (a.h != b.h) return a.h > b.h;
      if (a.cell.row != b.cell.row) return a.cell.row > b.cell.row;
      return a.cell.col > b.cell.col;
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  const double res = map.resolution();

  std::vector<double> g(map.size(), kInfCost);
  std::vector<std::int32_t> parent(map.size(), -1);
  std::vector<char> closed(map.size(), 0);
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, EntryAfter> queue;

  SearchStats stats;
  auto heuristic = [&](Cell c) {
    return use_heuristic ? octile_heuristic(c, goal, res) : 0.0;
  };

  g[map.index(start)] = 0.0;
  queue.push({heuristic(start), heuristic(start), start});
  stats.queue_peak = 1;

  bool found = false;
  while (!queue.empty()) {
    const QueueEntry top = queue.top();
    queue.pop();
    const std::size_t idx = map.index(top.cell);
    if (closed[idx]) {
      continue;  // stale duplicate
    }
    closed[idx] = 1;
    ++stats.expansions;
    if (top.cell == goal) {
      found = true;
      break;
    }
    for_each_neighbor(map, top.cell, [&](Cell n, double step) {
      const std::size_t nidx = map.index(n);
      if (closed[nidx]) {
        return;
      }
      const double cand = g[idx] + step;
      if (cand < g[nidx]) {
        g[nidx] = cand;
        parent[nidx] = static_cast<std::int32_t>(idx);
        const double h = heuristic(n);
        queue.push({cand + h, h, n});
      }
    });
    stats.queue_peak = std::max(stats.queue_peak, queue.size());
  }

  if (!found) {
    throw UnreachableGoal("no path from (" + std::to_string(start.row) + "," +
                          std::to_string(start.col) + ") to (" + std::to_string(goal.row) +
                          "," + std::to_string(goal.col) + ")");
  }

  Plan plan;
  for (std::int32_t idx = static_cast<std::int32_t>(map.index(goal)); idx >= 0;
       idx = parent[static_cast<std::size_t>(idx)]) {
    plan.cells.push_back({idx / map.width(), idx % map.width()});
  }
  std::reverse(plan.cells.begin(), plan.cells.end());
  plan.total_cost = path_cost(plan.cells, res);

  stats.wall_time =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(plan), stats};
}

}  // namespace detail

/// Minimum-cost plan under the octile model; expands by g only.
inline SearchResult dijkstra(const Costmap & map, Cell start, Cell goal)
{
  return detail::grid_search(map, start, goal, false);
}

/// Same cost-optimal plans as dijkstra (octile heuristic is admissible and
/// consistent), usually with far fewer expansions.
inline SearchResult a_star(const Costmap & map, Cell start, Cell goal)
{
  return detail::grid_search(map, start, goal, true);
}

}  // namespace replan_kit
