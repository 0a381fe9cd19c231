// Copyright 2026 replan_kit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace replan_kit
{

/// Malformed map file or JSON payload.
class MapFormatError : public std::runtime_error
{
public:
  explicit MapFormatError(const std::string & what) : std::runtime_error(what) {}
};

/// Two costmaps with different width, height, or resolution were diffed.
class DimensionMismatch : public std::runtime_error
{
public:
  explicit DimensionMismatch(const std::string & what) : std::runtime_error(what) {}
};

/// Start or goal is out of bounds or lethal.
class InvalidEndpoint : public std::runtime_error
{
public:
  explicit InvalidEndpoint(const std::string & what) : std::runtime_error(what) {}
};

/// No traversable path between the query endpoints.
class UnreachableGoal : public std::runtime_error
{
public:
  explicit UnreachableGoal(const std::string & what) : std::runtime_error(what) {}
};

/// Planner state violated one of its own invariants; signals a bug, not bad input.
class InternalInconsistency : public std::logic_error
{
public:
  explicit InternalInconsistency(const std::string & what) : std::logic_error(what) {}
};

/// Invalid scenario description or a scripted event that cannot be applied.
class ScenarioError : public std::runtime_error
{
public:
  explicit ScenarioError(const std::string & what) : std::runtime_error(what) {}
};

}  // namespace replan_kit
