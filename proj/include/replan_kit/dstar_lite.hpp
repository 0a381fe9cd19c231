// Copyright 2026 replan_kit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "replan_kit/costmap.hpp"
#include "replan_kit/errors.hpp"
#include "replan_kit/search.hpp"

namespace replan_kit
{

/// Exact octile path cost: ortho + diag * sqrt(2), in cell units, with an
/// explicit infinity. Every quantity D* lite handles (g, rhs, heuristic, key
/// modifier) has this form on an 8-connected grid, so keys compare exactly.
/// Floating-point keys are not an option here: g + h along an optimal path
/// ties the start key exactly in real arithmetic, and one-ulp rounding
/// differences between cells reorder the queue and strand inconsistent cells
/// behind the termination check.
struct OctileCost
{
  std::int64_t ortho{0};
  std::int64_t diag{0};

  static constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();

  static OctileCost infinity() { return {kInf, 0}; }
  bool is_inf() const { return ortho == kInf; }

  OctileCost operator+(const OctileCost & o) const
  {
    if (is_inf() || o.is_inf()) {
      return infinity();
    }
    return {ortho + o.ortho, diag + o.diag};
  }

  /// Exact three-way comparison of ortho + diag*sqrt(2) values.
  static int compare(const OctileCost & x, const OctileCost & y)
  {
    if (x.is_inf() || y.is_inf()) {
      return (x.is_inf() ? 1 : 0) - (y.is_inf() ? 1 : 0);
    }
    const std::int64_t p = x.ortho - y.ortho;  // x - y = p + q*sqrt(2)
    const std::int64_t q = x.diag - y.diag;
    if (p == 0 && q == 0) return 0;
    if (p >= 0 && q >= 0) return 1;
    if (p <= 0 && q <= 0) return -1;
    const __int128 p2 = static_cast<__int128>(p) * p;
    const __int128 q2 = static_cast<__int128>(q) * q * 2;
    // p2 == q2 cannot happen for nonzero integers (sqrt(2) is irrational)
    if (p > 0) return p2 > q2 ? 1 : -1;
    return q2 > p2 ? 1 : -1;
  }

  bool operator==(const OctileCost & o) const { return compare(*this, o) == 0; }
  bool operator!=(const OctileCost & o) const { return compare(*this, o) != 0; }
  bool operator<(const OctileCost & o) const { return compare(*this, o) < 0; }
  bool operator<=(const OctileCost & o) const { return compare(*this, o) <= 0; }

  static OctileCost min(const OctileCost & a, const OctileCost & b)
  {
    return a <= b ? a : b;
  }

  double to_meters(double resolution) const
  {
    if (is_inf()) {
      return kInfCost;
    }
    return resolution * (static_cast<double>(ortho) + kSqrt2 * static_cast<double>(diag));
  }
};

/// Octile distance as an exact cost pair (cell units).
inline OctileCost octile_cost(Cell a, Cell b)
{
  const std::int64_t dr = std::abs(a.row - b.row);
  const std::int64_t dc = std::abs(a.col - b.col);
  return {std::max(dr, dc) - std::min(dr, dc), std::min(dr, dc)};
}

/// D* lite priority key, lexicographic on (k1, k2):
/// k1 = min(g, rhs) + h(cell, start) + km, k2 = min(g, rhs).
struct DStarKey
{
  OctileCost k1;
  OctileCost k2;

  bool operator<(const DStarKey & o) const
  {
    const int c = OctileCost::compare(k1, o.k1);
    return c < 0 || (c == 0 && OctileCost::compare(k2, o.k2) < 0);
  }
};

/// Incremental D* lite planner over an 8-connected costmap.
///
/// The search is rooted at the goal: g estimates cost-to-goal, rhs is the
/// one-step lookahead, and a cell is locally consistent when the two agree.
/// State persists across requests; update_node repairs only the vertices
/// whose incident edges a cost change touched, and the next
/// compute_shortest_path re-expands just enough of the queue to make the
/// start consistent again. The key modifier km accumulates heuristic drift
/// as the start moves so queued keys stay valid lower bounds (rebased once
/// per planning request, not per updated node).
class DStarLite
{
public:
  DStarLite(Costmap map, Cell start, Cell goal)
  : map_(std::move(map)), goal_(goal), last_start_(start),
    g_(map_.size(), OctileCost::infinity()), rhs_(map_.size(), OctileCost::infinity())
  {
    detail::validate_endpoints(map_, start, goal);
    rhs_[map_.index(goal_)] = {0, 0};
    queue_.push({calculate_key(goal_), goal_});
  }

  const Costmap & map() const { return map_; }
  Cell goal() const { return goal_; }
  std::size_t queue_size() const { return queue_.size(); }

  /// Cost-to-goal estimate / one-step lookahead, in meters.
  double g(Cell c) const { return g_[map_.index(c)].to_meters(map_.resolution()); }
  double rhs(Cell c) const { return rhs_[map_.index(c)].to_meters(map_.resolution()); }
  double key_modifier() const { return km_.to_meters(map_.resolution()); }

  /// Test/debug hook: observes (k1, k2) in meters for every expanded cell.
  void set_expansion_observer(std::function<void(double, double)> observer)
  {
    on_expand_ = std::move(observer);
  }

  /// Applies a cost change at one cell. All edges incident to the cell
  /// change with it, so rhs is recomputed for the cell and its 8 geometric
  /// neighbors (corner-cut edges also stay within that 3x3 block) and any
  /// cell that became inconsistent is queued.
  void update_node(Cell cell, std::uint8_t new_cost)
  {
    if (!map_.in_bounds(cell)) {
      throw std::invalid_argument("update_node: cell out of bounds");
    }
    if (map_.at(cell) == new_cost) {
      return;  // no edge changed
    }
    map_.set(cell, new_cost);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const Cell u{cell.row + dr, cell.col + dc};
        if (!map_.in_bounds(u)) {
          continue;
        }
        if (u != goal_) {
          rhs_[map_.index(u)] = lookahead_rhs(u);
        }
        update_vertex(u);
      }
    }
  }

  /// Expands the queue until the start is locally consistent and its key is
  /// undominated, then extracts the plan by greedy descent over g. With no
  /// pending inconsistencies this performs zero expansions.
  SearchResult compute_shortest_path(Cell start)
  {
    if (!map_.in_bounds(start)) {
      throw InvalidEndpoint("start out of bounds");
    }
    if (map_.lethal(start)) {
      throw InvalidEndpoint("start is lethal");
    }
    if (start != last_start_) {
      km_ = km_ + octile_cost(last_start_, start);
      last_start_ = start;
    }

    const auto t0 = std::chrono::steady_clock::now();
    SearchStats stats;
    stats.queue_peak = queue_.size();

    const std::size_t start_idx = map_.index(start);
    while (!queue_.empty()) {
      const bool start_inconsistent = g_[start_idx] != rhs_[start_idx];
      const Entry top = queue_.top();
      if (!(top.key < calculate_key(start)) && !start_inconsistent) {
        break;
      }
      queue_.pop();
      const Cell u = top.cell;
      const std::size_t uidx = map_.index(u);
      if (g_[uidx] == rhs_[uidx]) {
        continue;  // logically removed
      }
      const DStarKey fresh = calculate_key(u);
      if (top.key < fresh) {
        // Stale entry (km grew or the cell was re-keyed); requeue at the
        // current key.
        queue_.push({fresh, u});
        stats.queue_peak = std::max(stats.queue_peak, queue_.size());
        continue;
      }
      ++stats.expansions;
      if (on_expand_) {
        on_expand_(top.key.k1.to_meters(map_.resolution()),
                   top.key.k2.to_meters(map_.resolution()));
      }
      if (rhs_[uidx] < g_[uidx]) {
        // Overconsistent: commit the improved estimate and relax neighbors.
        g_[uidx] = rhs_[uidx];
        for_each_geometric_neighbor(u, [&](Cell s) {
          if (s != goal_) {
            rhs_[map_.index(s)] = lookahead_rhs(s);
          }
          update_vertex(s);
        });
      } else {
        // Underconsistent: invalidate and let the raise wave propagate.
        g_[uidx] = OctileCost::infinity();
        if (u != goal_) {
          rhs_[uidx] = lookahead_rhs(u);
        }
        update_vertex(u);
        for_each_geometric_neighbor(u, [&](Cell s) {
          if (s != goal_) {
            rhs_[map_.index(s)] = lookahead_rhs(s);
          }
          update_vertex(s);
        });
      }
      stats.queue_peak = std::max(stats.queue_peak, queue_.size());
    }

    if (g_[start_idx].is_inf()) {
      throw UnreachableGoal("d* lite: start disconnected from goal");
    }

    SearchResult result;
    result.plan = extract_plan(start);
    stats.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.stats = stats;
    return result;
  }

  /// Incremental repair after update_node calls and/or start movement.
  SearchResult replan(Cell start) { return compute_shortest_path(start); }

private:
  struct Entry
  {
    DStarKey key;
    Cell cell;
  };
  struct EntryAfter
  {
    bool operator()(const Entry & a, const Entry & b) const
    {
      if (b.key < a.key) return true;
      if (a.key < b.key) return false;
      if (a.cell.row != b.cell.row) return a.cell.row > b.cell.row;
      return a.cell.col > b.cell.col;
    }
  };

  DStarKey calculate_key(Cell c) const
  {
    const std::size_t idx = map_.index(c);
    const OctileCost m = OctileCost::min(g_[idx], rhs_[idx]);
    return {m + octile_cost(c, last_start_) + km_, m};
  }

  /// One-step lookahead: min over traversable successors of step + g.
  /// A lethal cell has no outgoing edges, so its lookahead is infinite.
  OctileCost lookahead_rhs(Cell c) const
  {
    if (map_.lethal(c)) {
      return OctileCost::infinity();
    }
    OctileCost best = OctileCost::infinity();
    for_each_neighbor(map_, c, [&](Cell n, double) {
      const bool diagonal = n.row != c.row && n.col != c.col;
      const OctileCost step{diagonal ? 0 : 1, diagonal ? 1 : 0};
      best = OctileCost::min(best, step + g_[map_.index(n)]);
    });
    return best;
  }

  void update_vertex(Cell u)
  {
    const std::size_t idx = map_.index(u);
    if (g_[idx] != rhs_[idx]) {
      queue_.push({calculate_key(u), u});
    }
  }

  template <typename Fn>
  void for_each_geometric_neighbor(Cell c, Fn && fn) const
  {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) {
          continue;
        }
        const Cell n{c.row + dr, c.col + dc};
        if (map_.in_bounds(n)) {
          fn(n);
        }
      }
    }
  }

  /// Greedy descent from the start, always stepping to the successor that
  /// minimizes step_cost + g (ties by row, then col). A revisited cell means
  /// the g surface is corrupt, which is a bug, not a user error.
  Plan extract_plan(Cell start)
  {
    Plan plan;
    plan.cells.push_back(start);
    std::vector<char> visited(map_.size(), 0);
    visited[map_.index(start)] = 1;

    Cell cur = start;
    while (cur != goal_) {
      Cell best{};
      OctileCost best_val = OctileCost::infinity();
      bool have = false;
      for_each_neighbor(map_, cur, [&](Cell n, double) {
        const bool diagonal = n.row != cur.row && n.col != cur.col;
        const OctileCost step{diagonal ? 0 : 1, diagonal ? 1 : 0};
        const OctileCost val = step + g_[map_.index(n)];
        const int c = have ? OctileCost::compare(val, best_val) : -1;
        if (c < 0 ||
            (c == 0 && (n.row < best.row || (n.row == best.row && n.col < best.col)))) {
          have = true;
          best_val = val;
          best = n;
        }
      });
      if (!have || best_val.is_inf()) {
        throw InternalInconsistency("d* lite: greedy descent hit a dead end");
      }
      if (visited[map_.index(best)]) {
        throw InternalInconsistency("d* lite: greedy descent detected a cycle");
      }
      visited[map_.index(best)] = 1;
      plan.cells.push_back(best);
      cur = best;
    }
    plan.total_cost = detail::path_cost(plan.cells, map_.resolution());
    return plan;
  }

  Costmap map_;
  Cell goal_;
  Cell last_start_;
  OctileCost km_{0, 0};
  std::vector<OctileCost> g_;
  std::vector<OctileCost> rhs_;
  std::priority_queue<Entry, std::vector<Entry>, EntryAfter> queue_;
  std::function<void(double, double)> on_expand_;
};

}  // namespace replan_kit
