// Copyright 2026 replan_kit contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "replan_kit/costmap.hpp"
#include "replan_kit/search.hpp"

using namespace replan_kit;

namespace
{

// Exhaustive oracle for tiny maps: enumerates every simple path by DFS and
// returns the cheapest cost, independent of any priority-queue machinery.
std::optional<double> brute_force_shortest(const Costmap & map, Cell start, Cell goal)
{
  std::optional<double> best;
  std::vector<char> on_path(map.size(), 0);

  auto dfs = [&](auto && self, Cell cur, double cost) -> void {
    if (best && cost >= *best) {
      return;  // cannot improve
    }
    if (cur == goal) {
      best = cost;
      return;
    }
    on_path[map.index(cur)] = 1;
    for (const auto & [next, step] : neighbors(map, cur)) {
      if (!on_path[map.index(next)]) {
        self(self, next, cost + step);
      }
    }
    on_path[map.index(cur)] = 0;
  };
  if (!map.lethal(start) && !map.lethal(goal)) {
    dfs(dfs, start, 0.0);
  }
  return best;
}

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

void check_plan_valid(const Plan & plan, const Costmap & map, Cell start, Cell goal)
{
  REQUIRE_FALSE(plan.empty());
  CHECK(plan.front() == start);
  CHECK(plan.back() == goal);
  double total = 0.0;
  for (std::size_t i = 0; i < plan.cells.size(); ++i) {
    CHECK_FALSE(map.lethal(plan.cells[i]));
    if (i == 0) {
      continue;
    }
    // every step must be one of the legal moves from the previous cell
    bool legal = false;
    double step_cost = 0.0;
    for (const auto & [n, cost] : neighbors(map, plan.cells[i - 1])) {
      if (n == plan.cells[i]) {
        legal = true;
        step_cost = cost;
      }
    }
    CHECK(legal);
    total += step_cost;
  }
  CHECK(plan.total_cost == Catch::Approx(total).epsilon(1e-9));
}

}  // namespace

TEST_CASE("octile heuristic closed form", "[planners]")
{
  CHECK(octile_heuristic({3, 4}, {3, 4}, 1.0) == 0.0);
  CHECK(octile_heuristic({0, 0}, {0, 3}, 1.0) == Catch::Approx(3.0));
  CHECK(octile_heuristic({0, 0}, {2, 2}, 1.0) == Catch::Approx(2.0 * kSqrt2));
  CHECK(octile_heuristic({1, 1}, {4, 6}, 0.5) ==
        Catch::Approx(0.5 * (5.0 + (kSqrt2 - 1.0) * 3.0)));
}

TEST_CASE("dijkstra on trivial queries", "[planners]")
{
  const Costmap map(3, 3, 1.0);

  SECTION("start equals goal")
  {
    const auto [plan, stats] = dijkstra(map, {0, 0}, {0, 0});
    REQUIRE(plan.cells == std::vector<Cell>{{0, 0}});
    CHECK(plan.total_cost == 0.0);
  }
  SECTION("corner to corner is two diagonal steps")
  {
    const auto [plan, stats] = dijkstra(map, {0, 0}, {2, 2});
    CHECK(plan.total_cost == Catch::Approx(2.0 * kSqrt2).epsilon(1e-12));
    const auto oracle = brute_force_shortest(map, {0, 0}, {2, 2});
    REQUIRE(oracle);
    CHECK(plan.total_cost == Catch::Approx(*oracle).epsilon(1e-12));
  }
  SECTION("blocked column separates the map")
  {
    Costmap blocked = map;
    for (int r = 0; r < 3; ++r) {
      blocked.set({r, 1}, kLethalCost);
    }
    CHECK_THROWS_AS(dijkstra(blocked, {0, 0}, {0, 2}), UnreachableGoal);
    CHECK_FALSE(brute_force_shortest(blocked, {0, 0}, {0, 2}));
  }
}

TEST_CASE("invalid endpoints are rejected distinctly", "[planners]")
{
  Costmap map(3, 3, 1.0);
  map.set({1, 1}, kLethalCost);
  CHECK_THROWS_AS(dijkstra(map, {1, 1}, {0, 0}), InvalidEndpoint);
  CHECK_THROWS_AS(dijkstra(map, {0, 0}, {1, 1}), InvalidEndpoint);
  CHECK_THROWS_AS(a_star(map, {0, 0}, {3, 0}), InvalidEndpoint);
  CHECK_THROWS_AS(a_star(map, {-1, 0}, {0, 0}), InvalidEndpoint);
}

TEST_CASE("a_star matches dijkstra and expands no more", "[planners]")
{
  const Costmap map(3, 3, 1.0);
  const auto dj = dijkstra(map, {0, 0}, {2, 2});
  const auto as = a_star(map, {0, 0}, {2, 2});
  CHECK(as.plan.total_cost == Catch::Approx(dj.plan.total_cost).epsilon(1e-9));
  CHECK(as.stats.expansions <= dj.stats.expansions);

  const auto single = a_star(map, {1, 1}, {1, 1});
  CHECK(single.stats.expansions <= 1);
  CHECK(single.plan.cells.size() == 1);
}

TEST_CASE("a_star equals dijkstra cost on random maps", "[planners][property]")
{
  std::mt19937 rng(101);
  int solvable = 0;
  for (int seed = 0; seed < 100; ++seed) {
    const Costmap map = random_map(rng, 50, 50, 0.2);
    const Cell start = random_free_cell(rng, map);
    const Cell goal = random_free_cell(rng, map);
    try {
      const auto dj = dijkstra(map, start, goal);
      const auto as = a_star(map, start, goal);
      ++solvable;
      CHECK(as.plan.total_cost == Catch::Approx(dj.plan.total_cost).epsilon(1e-9));
      check_plan_valid(as.plan, map, start, goal);
      check_plan_valid(dj.plan, map, start, goal);
    } catch (const UnreachableGoal &) {
      CHECK_THROWS_AS(a_star(map, start, goal), UnreachableGoal);
    }
  }
  CHECK(solvable > 50);  // the density leaves most instances solvable
}

TEST_CASE("octile heuristic is admissible on an empty map", "[planners][property]")
{
  // On an empty map the octile distance is exactly the shortest-path cost,
  // so admissibility can be checked exhaustively against dijkstra.
  const Costmap map(12, 12, 1.0);
  for (int r = 0; r < 12; r += 3) {
    for (int c = 0; c < 12; c += 3) {
      const Cell goal{r, c};
      for (int rr = 0; rr < 12; ++rr) {
        for (int cc = 0; cc < 12; ++cc) {
          const auto [plan, stats] = dijkstra(map, {rr, cc}, goal);
          const double h = octile_heuristic({rr, cc}, goal, 1.0);
          CHECK(h <= plan.total_cost + 1e-9);
        }
      }
    }
  }
}

TEST_CASE("plans are deterministic across repeated calls", "[planners]")
{
  std::mt19937 rng(131);
  const Costmap map = random_map(rng, 30, 30, 0.25);
  const Cell start = random_free_cell(rng, map);
  const Cell goal = random_free_cell(rng, map);
  try {
    const auto first = a_star(map, start, goal);
    for (int i = 0; i < 3; ++i) {
      const auto again = a_star(map, start, goal);
      CHECK(again.plan.cells == first.plan.cells);
      CHECK(again.stats.expansions == first.stats.expansions);
    }
  } catch (const UnreachableGoal &) {
    SUCCEED("instance unsolvable; determinism vacuous");
  }
}

TEST_CASE("planners never cut corners", "[planners]")
{
  // A lethal cell adjacent to the straight-line route: the optimal path may
  // not slide diagonally past its corner.
  Costmap map(4, 3, 1.0);
  map.set({1, 1}, kLethalCost);
  map.set({1, 2}, kLethalCost);
  const auto [plan, stats] = a_star(map, {1, 0}, {1, 3});
  check_plan_valid(plan, map, {1, 0}, {1, 3});
  for (std::size_t i = 1; i < plan.cells.size(); ++i) {
    const Cell a = plan.cells[i - 1];
    const Cell b = plan.cells[i];
    if (a.row != b.row && a.col != b.col) {
      CHECK_FALSE(map.lethal({a.row, b.col}));
      CHECK_FALSE(map.lethal({b.row, a.col}));
    }
  }
}

TEST_CASE("plan json export", "[planners]")
{
  const Costmap map(3, 3, 1.0);
  const auto [plan, stats] = a_star(map, {0, 0}, {2, 2});
  const nlohmann::json j = plan_to_json(plan);
  REQUIRE(j.at("cells").size() == plan.cells.size());
  CHECK(j.at("cells")[0] == nlohmann::json({0, 0}));
  CHECK(j.at("total_cost").get<double>() == Catch::Approx(plan.total_cost));
}
