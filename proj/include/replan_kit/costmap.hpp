// Copyright 2026 replan_kit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "replan_kit/errors.hpp"

namespace replan_kit
{

inline constexpr std::uint8_t kLethalCost = 254;

struct Cell
{
  int row{0};
  int col{0};

  auto operator<=>(const Cell &) const = default;
};

/// Occupancy-grid costmap. Immutable snapshot semantics: planners copy and
/// never mutate a shared instance. Costs are 0-255; any cost at or above
/// lethal_threshold blocks traversal.
class Costmap
{
public:
  Costmap() = default;

  Costmap(int width, int height, double resolution, std::uint8_t fill = 0,
          std::uint8_t lethal_threshold = kLethalCost)
  : width_(width), height_(height), resolution_(resolution),
    lethal_threshold_(lethal_threshold),
    costs_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill)
  {
    if (width <= 0 || height <= 0) {
      throw MapFormatError("costmap dimensions must be positive");
    }
    if (resolution <= 0.0) {
      throw MapFormatError("costmap resolution must be positive");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  std::uint8_t lethal_threshold() const { return lethal_threshold_; }
  std::size_t size() const { return costs_.size(); }
  const std::vector<std::uint8_t> & costs() const { return costs_; }

  bool in_bounds(Cell c) const
  {
    return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
  }

  std::size_t index(Cell c) const
  {
    assert(in_bounds(c));
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.col);
  }

  std::uint8_t at(Cell c) const { return costs_[index(c)]; }
  void set(Cell c, std::uint8_t cost) { costs_[index(c)] = cost; }

  bool lethal(Cell c) const { return at(c) >= lethal_threshold_; }

  /// Diffable only when dimensions and resolution agree.
  bool comparable(const Costmap & other) const
  {
    return width_ == other.width_ && height_ == other.height_ &&
           resolution_ == other.resolution_;
  }

  bool operator==(const Costmap &) const = default;

private:
  int width_{0};
  int height_{0};
  double resolution_{1.0};
  std::uint8_t lethal_threshold_{kLethalCost};
  std::vector<std::uint8_t> costs_;
};

struct CellChange
{
  Cell cell;
  std::uint8_t old_cost{0};
  std::uint8_t new_cost{0};
};

/// Set of cells whose cost changed between two comparable costmaps.
/// magnitude is the sum of |new - old| over the listed cells, so it is zero
/// exactly when the list is empty.
struct CostmapDelta
{
  std::vector<CellChange> changed;
  long magnitude{0};

  bool empty() const { return changed.empty(); }
};

// ---------------------------------------------------------------------------
//  Map I/O
// ---------------------------------------------------------------------------

namespace detail
{

inline std::string format_double(double v)
{
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline Costmap parse_ascii_map(std::string_view text)
{
  // Header: "W H RES", then H rows of W characters ('.' free, '#' lethal).
  std::size_t eol = text.find('\n');
  if (eol == std::string_view::npos) {
    throw MapFormatError("map file: missing header line");
  }
  std::string header(text.substr(0, eol));
  int width = 0, height = 0;
  double resolution = 0.0;
  char extra;
  if (std::sscanf(header.c_str(), "%d %d %lf %c", &width, &height, &resolution, &extra) != 3) {
    throw MapFormatError("map file: header must be 'W H RES'");
  }
  if (width <= 0 || height <= 0) {
    throw MapFormatError("map file: zero or negative dimensions");
  }
  if (resolution <= 0.0) {
    throw MapFormatError("map file: resolution must be positive");
  }

  Costmap map(width, height, resolution);
  std::size_t pos = eol + 1;
  for (int row = 0; row < height; ++row) {
    std::size_t line_end = text.find('\n', pos);
    std::string_view line = (line_end == std::string_view::npos)
      ? text.substr(pos) : text.substr(pos, line_end - pos);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (static_cast<int>(line.size()) != width) {
      throw MapFormatError("map file: row " + std::to_string(row) + " has " +
                           std::to_string(line.size()) + " cells, expected " +
                           std::to_string(width));
    }
    for (int col = 0; col < width; ++col) {
      switch (line[static_cast<std::size_t>(col)]) {
        case '.': map.set({row, col}, 0); break;
        case '#': map.set({row, col}, kLethalCost); break;
        default:
          throw MapFormatError(std::string("map file: unknown character '") +
                               line[static_cast<std::size_t>(col)] + "'");
      }
    }
    if (line_end == std::string_view::npos) {
      if (row + 1 < height) {
        throw MapFormatError("map file: expected " + std::to_string(height) +
                             " rows, got " + std::to_string(row + 1));
      }
      pos = text.size();
    } else {
      pos = line_end + 1;
    }
  }
  // Anything after the grid other than whitespace is a format error.
  for (std::size_t i = pos; i < text.size(); ++i) {
    if (text[i] != '\n' && text[i] != '\r' && text[i] != ' ') {
      throw MapFormatError("map file: trailing content after grid");
    }
  }
  return map;
}

}  // namespace detail

inline nlohmann::json costmap_to_json(const Costmap & map)
{
  return nlohmann::json{
    {"width", map.width()},
    {"height", map.height()},
    {"resolution", map.resolution()},
    {"costs", map.costs()},
  };
}

inline Costmap costmap_from_json(const nlohmann::json & j)
{
  if (!j.is_object() || !j.contains("width") || !j.contains("height") ||
      !j.contains("resolution") || !j.contains("costs")) {
    throw MapFormatError("costmap json: expected width/height/resolution/costs");
  }
  int width = j.at("width").get<int>();
  int height = j.at("height").get<int>();
  double resolution = j.at("resolution").get<double>();
  if (width <= 0 || height <= 0) {
    throw MapFormatError("costmap json: zero or negative dimensions");
  }
  if (resolution <= 0.0) {
    throw MapFormatError("costmap json: resolution must be positive");
  }
  const auto & costs = j.at("costs");
  if (!costs.is_array() ||
      costs.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw MapFormatError("costmap json: costs must hold width*height entries");
  }
  Costmap map(width, height, resolution);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      const auto & v = costs[map.index({row, col})];
      if (!v.is_number_integer()) {
        throw MapFormatError("costmap json: cost entries must be integers");
      }
      long c = v.get<long>();
      if (c < 0 || c > 255) {
        throw MapFormatError("costmap json: cost out of [0,255]");
      }
      map.set({row, col}, static_cast<std::uint8_t>(c));
    }
  }
  return map;
}

/// Parses either the ASCII map format or the JSON costmap form (detected by
/// a leading '{').
inline Costmap load_map(std::string_view text)
{
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    throw MapFormatError("map file: empty input");
  }
  if (text[first] == '{') {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) {
      throw MapFormatError("costmap json: parse error");
    }
    return costmap_from_json(j);
  }
  return detail::parse_ascii_map(text.substr(first));
}

/// ASCII form; cells at or above the lethal threshold become '#', all others
/// '.'. Round-trips exactly for maps whose costs are only {0, 254}.
inline std::string serialize_map(const Costmap & map)
{
  std::string out = std::to_string(map.width()) + " " + std::to_string(map.height()) +
                    " " + detail::format_double(map.resolution()) + "\n";
  out.reserve(out.size() + static_cast<std::size_t>(map.height()) *
              (static_cast<std::size_t>(map.width()) + 1));
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      out += map.lethal({row, col}) ? '#' : '.';
    }
    out += '\n';
  }
  return out;
}

/// FNV-1a over dimensions, resolution bits, and the cost array. Used as a
/// cheap content identity for trace logs and bench reports.
inline std::uint64_t content_hash(const Costmap & map)
{
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffULL;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(map.width()));
  mix(static_cast<std::uint64_t>(map.height()));
  double res = map.resolution();
  std::uint64_t res_bits;
  static_assert(sizeof(res_bits) == sizeof(res));
  std::memcpy(&res_bits, &res, sizeof(res));
  mix(res_bits);
  for (std::uint8_t c : map.costs()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
//  Inflation
// ---------------------------------------------------------------------------

/// Marks every free cell within ceil(robot_radius / resolution) cells
/// (Euclidean, measured between cell centers) of a lethal cell as lethal, so
/// a point robot cannot cut obstacle corners or squeeze between obstacles.
/// Inflation is always measured from the input map's lethal set, which makes
/// the operation idempotent.
inline Costmap inflate(const Costmap & map, double robot_radius)
{
  if (robot_radius < 0.0) {
    throw std::invalid_argument("inflate: robot_radius must be non-negative");
  }
  // Small slack so radii that are exact cell multiples do not round up on
  // floating-point noise (e.g. 0.15 / 0.05).
  int radius_cells = static_cast<int>(std::ceil(robot_radius / map.resolution() - 1e-9));
  if (radius_cells <= 0) {
    return map;
  }

  Costmap out = map;
  const int r2 = radius_cells * radius_cells;
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      if (!map.lethal({row, col})) {
        continue;
      }
      const int r0 = std::max(0, row - radius_cells);
      const int r1 = std::min(map.height() - 1, row + radius_cells);
      const int c0 = std::max(0, col - radius_cells);
      const int c1 = std::min(map.width() - 1, col + radius_cells);
      for (int rr = r0; rr <= r1; ++rr) {
        for (int cc = c0; cc <= c1; ++cc) {
          const int dr = rr - row;
          const int dc = cc - col;
          if (dr * dr + dc * dc <= r2) {
            out.set({rr, cc}, kLethalCost);
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
//  Costmap difference (the replanning gate)
// ---------------------------------------------------------------------------

/// Single pass over both grids: collects every cell with
/// |current - previous| > noise_threshold and accumulates the magnitude.
/// The non-empty delta is the replanning gate; the changed list feeds the
/// incremental planner's node updates.
inline CostmapDelta cost_diff(const Costmap & current, const Costmap & previous,
                              int noise_threshold = 0)
{
  if (!current.comparable(previous)) {
    throw DimensionMismatch("cost_diff: costmaps differ in dimensions or resolution");
  }
  CostmapDelta delta;
  for (int row = 0; row < current.height(); ++row) {
    for (int col = 0; col < current.width(); ++col) {
      const Cell cell{row, col};
      const int oldc = previous.at(cell);
      const int newc = current.at(cell);
      const int diff = std::abs(newc - oldc);
      if (diff > noise_threshold) {
        delta.changed.push_back({cell, static_cast<std::uint8_t>(oldc),
                                 static_cast<std::uint8_t>(newc)});
        delta.magnitude += diff;
      }
    }
  }
  return delta;
}

// ---------------------------------------------------------------------------
//  Neighbor expansion
// ---------------------------------------------------------------------------

inline constexpr double kSqrt2 = 1.4142135623730951;

/// Calls fn(Cell, step_cost) for each traversable 8-connected neighbor:
/// in bounds, below the lethal threshold, and for diagonal moves neither of
/// the two adjacent orthogonal cells is lethal (no corner cutting).
/// Iteration order is fixed (window row-major) so searches are deterministic.
template <typename Fn>
inline void for_each_neighbor(const Costmap & map, Cell cell, Fn && fn)
{
  const double res = map.resolution();
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) {
        continue;
      }
      const Cell n{cell.row + dr, cell.col + dc};
      if (!map.in_bounds(n) || map.lethal(n)) {
        continue;
      }
      if (dr != 0 && dc != 0) {
        if (map.lethal({cell.row + dr, cell.col}) || map.lethal({cell.row, cell.col + dc})) {
          continue;
        }
      }
      fn(n, (dr != 0 && dc != 0) ? res * kSqrt2 : res);
    }
  }
}

inline std::vector<std::pair<Cell, double>> neighbors(const Costmap & map, Cell cell)
{
  if (!map.in_bounds(cell)) {
    throw std::invalid_argument("neighbors: cell out of bounds");
  }
  std::vector<std::pair<Cell, double>> out;
  out.reserve(8);
  for_each_neighbor(map, cell, [&out](Cell n, double cost) { out.emplace_back(n, cost); });
  return out;
}

}  // namespace replan_kit
