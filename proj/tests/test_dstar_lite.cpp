// Copyright 2026 replan_kit contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "replan_kit/costmap.hpp"
#include "replan_kit/dstar_lite.hpp"
#include "replan_kit/search.hpp"

using namespace replan_kit;

namespace
{

Costmap random_map(std::mt19937 & rng, int width, int height, double density)
{
  Costmap map(width, height, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (coin(rng) < density) {
        map.set({r, c}, kLethalCost);
      }
    }
  }
  return map;
}

Cell random_free_cell(std::mt19937 & rng, const Costmap & map)
{
  std::uniform_int_distribution<int> row(0, map.height() - 1);
  std::uniform_int_distribution<int> col(0, map.width() - 1);
  for (;;) {
    const Cell c{row(rng), col(rng)};
    if (!map.lethal(c)) {
      return c;
    }
  }
}

// Corridor world: a wall across row 2 with gaps at (2,1) and (2,5). Blocking
// one gap forces the detour through the other.
Costmap corridor_map()
{
  Costmap map(7, 5, 1.0);
  for (int c = 0; c < 7; ++c) {
    map.set({2, c}, kLethalCost);
  }
  map.set({2, 1}, 0);
  map.set({2, 5}, 0);
  return map;
}

}  // namespace

TEST_CASE("initialize queues exactly the goal", "[dstar]")
{
  const Costmap map(5, 5, 1.0);
  DStarLite planner(map, {4, 0}, {0, 4});
  CHECK(planner.queue_size() == 1);
  CHECK(planner.rhs({0, 4}) == 0.0);
  CHECK(planner.g({0, 4}) == kInfCost);
  CHECK(planner.g({4, 0}) == kInfCost);
  CHECK(planner.key_modifier() == 0.0);
}

TEST_CASE("start equals goal", "[dstar]")
{
  const Costmap map(4, 4, 1.0);
  DStarLite planner(map, {2, 2}, {2, 2});
  const auto [plan, stats] = planner.compute_shortest_path({2, 2});
  CHECK(plan.cells == std::vector<Cell>{{2, 2}});
  CHECK(plan.total_cost == 0.0);
}

TEST_CASE("first compute matches a_star on an empty map", "[dstar]")
{
  const Costmap map(3, 3, 1.0);
  DStarLite planner(map, {0, 0}, {2, 2});
  const auto result = planner.compute_shortest_path({0, 0});
  const auto oracle = a_star(map, {0, 0}, {2, 2});
  CHECK(result.plan.total_cost == Catch::Approx(oracle.plan.total_cost).epsilon(1e-12));
  CHECK(result.plan.total_cost == Catch::Approx(2.0 * kSqrt2).epsilon(1e-12));
}

TEST_CASE("walled-in goal is unreachable", "[dstar]")
{
  Costmap map(5, 5, 1.0);
  for (const Cell c : {Cell{1, 1}, Cell{1, 2}, Cell{1, 3}, Cell{2, 1}, Cell{2, 3},
                       Cell{3, 1}, Cell{3, 2}, Cell{3, 3}}) {
    map.set(c, kLethalCost);
  }
  DStarLite planner(map, {0, 0}, {2, 2});
  CHECK_THROWS_AS(planner.compute_shortest_path({0, 0}), UnreachableGoal);
}

TEST_CASE("recompute without changes does no work", "[dstar]")
{
  const Costmap map(6, 6, 1.0);
  DStarLite planner(map, {5, 0}, {0, 5});
  const auto first = planner.compute_shortest_path({5, 0});
  const auto second = planner.compute_shortest_path({5, 0});
  CHECK(second.stats.expansions == 0);
  CHECK(second.plan.cells == first.plan.cells);
  CHECK(second.plan.total_cost == first.plan.total_cost);
}

TEST_CASE("update_node with the existing cost is a no-op", "[dstar]")
{
  const Costmap map(6, 6, 1.0);
  DStarLite planner(map, {5, 0}, {0, 5});
  planner.compute_shortest_path({5, 0});
  const std::size_t queued = planner.queue_size();
  planner.update_node({3, 3}, map.at({3, 3}));
  CHECK(planner.queue_size() == queued);
  CHECK(planner.replan({5, 0}).stats.expansions == 0);
}

TEST_CASE("blocking the active gap forces the detour", "[dstar]")
{
  const Costmap map = corridor_map();
  const Cell start{4, 1};
  const Cell goal{0, 1};
  DStarLite planner(map, start, goal);
  const auto initial = planner.compute_shortest_path(start);
  const auto initial_oracle = a_star(map, start, goal);
  CHECK(initial.plan.total_cost ==
        Catch::Approx(initial_oracle.plan.total_cost).epsilon(1e-9));

  // close the near gap; the only route is now through (2,5)
  planner.update_node({2, 1}, kLethalCost);
  const auto replanned = planner.replan(start);
  Costmap modified = map;
  modified.set({2, 1}, kLethalCost);
  const auto oracle = a_star(modified, start, goal);
  CHECK(replanned.plan.total_cost == Catch::Approx(oracle.plan.total_cost).epsilon(1e-9));
  CHECK(replanned.plan.total_cost > initial.plan.total_cost);
  for (const Cell c : replanned.plan.cells) {
    CHECK_FALSE(modified.lethal(c));
  }
}

TEST_CASE("clearing a lethal cell opens a shortcut", "[dstar]")
{
  Costmap map = corridor_map();
  map.set({2, 1}, kLethalCost);  // start with only the far gap open
  const Cell start{4, 1};
  const Cell goal{0, 1};
  DStarLite planner(map, start, goal);
  const auto initial = planner.compute_shortest_path(start);

  planner.update_node({2, 1}, 0);
  const auto replanned = planner.replan(start);
  Costmap modified = map;
  modified.set({2, 1}, 0);
  const auto oracle = a_star(modified, start, goal);
  CHECK(replanned.plan.total_cost == Catch::Approx(oracle.plan.total_cost).epsilon(1e-9));
  CHECK(replanned.plan.total_cost < initial.plan.total_cost);
}

TEST_CASE("replan after zero updates reports zero expansions", "[dstar]")
{
  const Costmap map(8, 8, 1.0);
  DStarLite planner(map, {7, 0}, {0, 7});
  const auto first = planner.compute_shortest_path({7, 0});
  const auto again = planner.replan({7, 0});
  CHECK(again.stats.expansions == 0);
  CHECK(again.plan.total_cost == first.plan.total_cost);
}

TEST_CASE("start movement along the plan stays optimal", "[dstar]")
{
  const Costmap map(10, 10, 1.0);
  DStarLite planner(map, {9, 0}, {0, 9});
  const auto first = planner.compute_shortest_path({9, 0});

  // advance along the returned plan without any map change
  const Cell moved = first.plan.cells[3];
  const auto replanned = planner.replan(moved);
  CHECK(replanned.stats.expansions == 0);
  const auto oracle = dijkstra(map, moved, {0, 9});
  CHECK(replanned.plan.total_cost == Catch::Approx(oracle.plan.total_cost).epsilon(1e-9));
  CHECK(planner.key_modifier() > 0.0);
}

TEST_CASE("incremental equals fresh across random mutation sequences",
          "[dstar][property]")
{
  // Central correctness property: after any sequence of cell-cost updates and
  // start movements along returned plans, the incremental replan cost equals
  // a from-scratch dijkstra on the current map.
  std::mt19937 rng(977);
  std::uniform_int_distribution<int> mutation_count(1, 5);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  int sequences_done = 0;
  for (int seq = 0; seq < 200; ++seq) {
    Costmap map = random_map(rng, 30, 30, 0.2);
    Cell start = random_free_cell(rng, map);
    const Cell goal = random_free_cell(rng, map);
    map.set(start, 0);
    map.set(goal, 0);

    DStarLite planner(map, start, goal);
    Plan current;
    try {
      current = planner.compute_shortest_path(start).plan;
    } catch (const UnreachableGoal &) {
      CHECK_THROWS_AS(dijkstra(map, start, goal), UnreachableGoal);
      continue;  // unsolvable instance; covered agreement, try next
    }
    ++sequences_done;

    const int mutations = mutation_count(rng);
    for (int m = 0; m < mutations; ++m) {
      // flip a random rectangle, never touching start or goal
      std::uniform_int_distribution<int> row(0, map.height() - 2);
      std::uniform_int_distribution<int> col(0, map.width() - 2);
      std::uniform_int_distribution<int> extent(1, 2);
      const Cell top{row(rng), col(rng)};
      const int h = extent(rng), w = extent(rng);
      const bool add = coin(rng) < 0.6;
      for (int r = top.row; r < top.row + h; ++r) {
        for (int c = top.col; c < top.col + w; ++c) {
          const Cell cell{r, c};
          if (cell == start || cell == goal) {
            continue;
          }
          const std::uint8_t new_cost = add ? kLethalCost : 0;
          if (map.at(cell) != new_cost) {
            map.set(cell, new_cost);
            planner.update_node(cell, new_cost);
          }
        }
      }

      // sometimes advance the robot along the last good plan
      if (!current.empty() && coin(rng) < 0.5) {
        std::uniform_int_distribution<std::size_t> hop(
          0, std::min<std::size_t>(current.cells.size() - 1, 4));
        const Cell candidate = current.cells[hop(rng)];
        if (!map.lethal(candidate)) {
          start = candidate;
        }
      }

      try {
        const auto replanned = planner.replan(start);
        const auto oracle = dijkstra(map, start, goal);
        REQUIRE(replanned.plan.total_cost ==
                Catch::Approx(oracle.plan.total_cost).epsilon(1e-9));
        current = replanned.plan;
        for (const Cell c : current.cells) {
          REQUIRE_FALSE(map.lethal(c));
        }
      } catch (const UnreachableGoal &) {
        CHECK_THROWS_AS(dijkstra(map, start, goal), UnreachableGoal);
        current = Plan{};
      }
      CHECK(planner.rhs(goal) == 0.0);
    }
  }
  CHECK(sequences_done > 100);
}

TEST_CASE("update_node rejects out-of-bounds cells", "[dstar]")
{
  const Costmap map(4, 4, 1.0);
  DStarLite planner(map, {0, 0}, {3, 3});
  CHECK_THROWS_AS(planner.update_node({4, 0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(planner.update_node({0, -1}, 0), std::invalid_argument);
}

TEST_CASE("rhs of the goal survives surrounding updates", "[dstar]")
{
  const Costmap map(6, 6, 1.0);
  DStarLite planner(map, {5, 5}, {2, 2});
  planner.compute_shortest_path({5, 5});
  // box three of the goal's orthogonals; (2,3) stays the only way in, since
  // the corner-cut rule also closes every diagonal entry
  for (const Cell c : {Cell{1, 2}, Cell{2, 1}, Cell{3, 2}}) {
    planner.update_node(c, kLethalCost);
  }
  CHECK(planner.rhs({2, 2}) == 0.0);
  const auto replanned = planner.replan({5, 5});
  const Costmap & updated = planner.map();
  const auto oracle = dijkstra(updated, {5, 5}, {2, 2});
  CHECK(replanned.plan.total_cost == Catch::Approx(oracle.plan.total_cost).epsilon(1e-9));
  // sealing the last entrance makes the goal unreachable while rhs stays 0
  planner.update_node({2, 3}, kLethalCost);
  CHECK_THROWS_AS(planner.replan({5, 5}), UnreachableGoal);
  CHECK(planner.rhs({2, 2}) == 0.0);
}
