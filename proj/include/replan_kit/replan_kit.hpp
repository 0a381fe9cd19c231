// Copyright 2026 replan_kit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "replan_kit/bench.hpp"
#include "replan_kit/costmap.hpp"
#include "replan_kit/dstar_lite.hpp"
#include "replan_kit/errors.hpp"
#include "replan_kit/replanner.hpp"
#include "replan_kit/search.hpp"
#include "replan_kit/sim.hpp"
