// Copyright 2026 replan_kit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "replan_kit/costmap.hpp"
#include "replan_kit/dstar_lite.hpp"
#include "replan_kit/errors.hpp"
#include "replan_kit/search.hpp"

namespace replan_kit
{

struct PlanRequest
{
  Cell start;
  Cell goal;
  Costmap costmap;
};

enum class OutcomeKind
{
  fresh_plan,
  incremental_replan,
  suffix_reuse,
  failure,
};

inline std::string_view to_string(OutcomeKind kind)
{
  switch (kind) {
    case OutcomeKind::fresh_plan: return "fresh_plan";
    case OutcomeKind::incremental_replan: return "incremental_replan";
    case OutcomeKind::suffix_reuse: return "suffix_reuse";
    case OutcomeKind::failure: return "failure";
  }
  return "unknown";
}

struct RequestOutcome
{
  OutcomeKind kind{OutcomeKind::fresh_plan};
  double planning_time{0.0};
  std::size_t expansions{0};
  double plan_length{0.0};
};

// ---------------------------------------------------------------------------
//  Planner backends
// ---------------------------------------------------------------------------

/// Uniform interface the replanning service drives: a from-scratch plan, a
/// per-cell change notification, and an incremental (or wrapped full) replan.
class PlannerBackend
{
public:
  virtual ~PlannerBackend() = default;

  virtual SearchResult plan(const Costmap & map, Cell start, Cell goal) = 0;
  virtual void update_node(Cell cell, std::uint8_t new_cost) = 0;
  virtual SearchResult replan(Cell start) = 0;
  virtual std::string_view name() const = 0;
};

class DStarLiteBackend : public PlannerBackend
{
public:
  SearchResult plan(const Costmap & map, Cell start, Cell goal) override
  {
    engine_.emplace(map, start, goal);
    return engine_->compute_shortest_path(start);
  }

  void update_node(Cell cell, std::uint8_t new_cost) override
  {
    require_engine();
    engine_->update_node(cell, new_cost);
  }

  SearchResult replan(Cell start) override
  {
    require_engine();
    return engine_->replan(start);
  }

  std::string_view name() const override { return "dstar_lite"; }

  DStarLite * engine() { return engine_ ? &*engine_ : nullptr; }

private:
  void require_engine() const
  {
    if (!engine_) {
      throw InternalInconsistency("dstar_lite backend used before first plan");
    }
  }

  std::optional<DStarLite> engine_;
};

/// Adapts a static planner (dijkstra or a_star) to the backend interface:
/// update_node edits a working copy of the map and marks it dirty; replan is
/// a full from-scratch search on that copy. This is what lets the gating
/// algorithm drive static planners unchanged.
class StaticBackend : public PlannerBackend
{
public:
  using PlannerFn = SearchResult (*)(const Costmap &, Cell, Cell);

  StaticBackend(PlannerFn fn, std::string name) : fn_(fn), name_(std::move(name)) {}

  SearchResult plan(const Costmap & map, Cell start, Cell goal) override
  {
    map_ = map;
    goal_ = goal;
    dirty_ = false;
    return fn_(*map_, start, goal);
  }

  void update_node(Cell cell, std::uint8_t new_cost) override
  {
    if (!map_) {
      throw InternalInconsistency("static backend used before first plan");
    }
    map_->set(cell, new_cost);
    dirty_ = true;
  }

  SearchResult replan(Cell start) override
  {
    if (!map_) {
      throw InternalInconsistency("static backend used before first plan");
    }
    dirty_ = false;
    return fn_(*map_, start, goal_);
  }

  std::string_view name() const override { return name_; }
  bool dirty() const { return dirty_; }

private:
  PlannerFn fn_;
  std::string name_;
  std::optional<Costmap> map_;
  Cell goal_{};
  bool dirty_{false};
};

inline std::unique_ptr<PlannerBackend> make_static_backend(StaticBackend::PlannerFn fn,
                                                           std::string name)
{
  return std::make_unique<StaticBackend>(fn, std::move(name));
}

/// Backend ids accepted by scenarios and the CLI.
inline std::unique_ptr<PlannerBackend> make_backend(std::string_view id)
{
  if (id == "dstar_lite") {
    return std::make_unique<DStarLiteBackend>();
  }
  if (id == "a_star") {
    return make_static_backend(&a_star, "a_star");
  }
  if (id == "dijkstra") {
    return make_static_backend(&dijkstra, "dijkstra");
  }
  throw std::invalid_argument("unknown planner id: " + std::string(id));
}

// ---------------------------------------------------------------------------
//  The replanning service
// ---------------------------------------------------------------------------

/// Smallest index of the plan cell nearest to position (Euclidean distance in
/// cell units). Scans the whole plan; the lowest index wins ties so the
/// returned suffix is the longest one.
inline std::size_t closest_index(const Plan & plan, Cell position)
{
  if (plan.empty()) {
    throw std::invalid_argument("closest_index: empty plan");
  }
  std::size_t best = 0;
  double best_d2 = kInfCost;
  for (std::size_t i = 0; i < plan.cells.size(); ++i) {
    const double dr = plan.cells[i].row - position.row;
    const double dc = plan.cells[i].col - position.col;
    const double d2 = dr * dr + dc * dc;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

/// Per-session planning state plus the request gate: a plan request triggers
/// search only when the goal changed or the costmap changed; otherwise the
/// remainder of the previous plan is reused. The previous costmap is replaced
/// on every request, including failed ones.
class PlannerMemory
{
public:
  explicit PlannerMemory(std::unique_ptr<PlannerBackend> backend, int noise_threshold = 0)
  : backend_(std::move(backend)), noise_threshold_(noise_threshold)
  {
    if (!backend_) {
      throw std::invalid_argument("PlannerMemory: null backend");
    }
  }

  Plan make_plan(const PlanRequest & req)
  {
    detail::validate_endpoints(req.costmap, req.start, req.goal);
    if (previous_costmap_ && !previous_costmap_->comparable(req.costmap)) {
      throw DimensionMismatch("make_plan: request costmap incomparable with previous");
    }

    const auto t0 = std::chrono::steady_clock::now();
    RequestOutcome outcome;
    Plan plan;
    try {
      if (!previous_goal_ || *previous_goal_ != req.goal) {
        SearchResult r = backend_->plan(req.costmap, req.start, req.goal);
        plan = std::move(r.plan);
        outcome.kind = OutcomeKind::fresh_plan;
        outcome.expansions = r.stats.expansions;
        previous_plan_ = plan;
      } else {
        plan = calculate_plan(req, outcome);
      }
    } catch (const UnreachableGoal &) {
      outcome.kind = OutcomeKind::failure;
      outcome.planning_time = elapsed_since(t0);
      stats_log_.push_back(outcome);
      previous_costmap_ = req.costmap;  // the unconditional assignment
      throw;
    }

    previous_goal_ = req.goal;
    previous_costmap_ = req.costmap;
    outcome.planning_time = elapsed_since(t0);
    outcome.plan_length = plan.total_cost;
    stats_log_.push_back(outcome);
    return plan;
  }

  const std::optional<Plan> & previous_plan() const { return previous_plan_; }
  const std::optional<Cell> & previous_goal() const { return previous_goal_; }
  const std::optional<Costmap> & previous_costmap() const { return previous_costmap_; }
  const std::vector<RequestOutcome> & stats_log() const { return stats_log_; }
  const RequestOutcome & last_outcome() const { return stats_log_.back(); }
  PlannerBackend & backend() { return *backend_; }
  int noise_threshold() const { return noise_threshold_; }

private:
  /// Goal unchanged: diff the costmaps and either repair incrementally or
  /// hand back the remainder of the previous plan from the cell nearest the
  /// robot. The stored plan is only replaced after a replan; a suffix reuse
  /// keeps the full previous plan so a backtracking robot still finds the
  /// right index later.
  Plan calculate_plan(const PlanRequest & req, RequestOutcome & outcome)
  {
    if (!previous_plan_ || !previous_costmap_) {
      throw InternalInconsistency("calculate_plan: no previous plan/costmap");
    }
    const CostmapDelta delta = cost_diff(req.costmap, *previous_costmap_, noise_threshold_);
    if (!delta.empty()) {
      for (const CellChange & change : delta.changed) {
        backend_->update_node(change.cell, change.new_cost);
      }
      SearchResult r = backend_->replan(req.start);
      outcome.kind = OutcomeKind::incremental_replan;
      outcome.expansions = r.stats.expansions;
      previous_plan_ = r.plan;
      return r.plan;
    }

    const std::size_t idx = closest_index(*previous_plan_, req.start);
    Plan suffix;
    suffix.cells.assign(previous_plan_->cells.begin() +
                          static_cast<std::ptrdiff_t>(idx),
                        previous_plan_->cells.end());
    suffix.total_cost = detail::path_cost(suffix.cells, req.costmap.resolution());
    outcome.kind = OutcomeKind::suffix_reuse;
    outcome.expansions = 0;
    return suffix;
  }

  static double elapsed_since(std::chrono::steady_clock::time_point t0)
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  std::unique_ptr<PlannerBackend> backend_;
  int noise_threshold_{0};
  std::optional<Cell> previous_goal_;
  std::optional<Plan> previous_plan_;
  std::optional<Costmap> previous_costmap_;
  std::vector<RequestOutcome> stats_log_;
};

// ---------------------------------------------------------------------------
//  Trace serialization
// ---------------------------------------------------------------------------

inline nlohmann::json request_to_json(const PlanRequest & req)
{
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(content_hash(req.costmap)));
  return nlohmann::json{
    {"start", {req.start.row, req.start.col}},
    {"goal", {req.goal.row, req.goal.col}},
    {"costmap_ref", hash},
  };
}

inline nlohmann::json response_to_json(const RequestOutcome & outcome, const Plan & plan)
{
  return nlohmann::json{
    {"outcome", to_string(outcome.kind)},
    {"plan", plan_to_json(plan)},
    {"planning_time", outcome.planning_time},
    {"expansions", outcome.expansions},
  };
}

}  // namespace replan_kit
