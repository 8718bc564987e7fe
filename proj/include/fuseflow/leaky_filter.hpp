// Copyright 2026 The fuseflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FUSEFLOW_LEAKY_FILTER_HPP
#define FUSEFLOW_LEAKY_FILTER_HPP

#include <cstdint>
#include <span>

#include "fuseflow/core.hpp"
#include "fuseflow/io.hpp"

namespace fuseflow
{
struct LeakyParams
{
  double tau_us = 30000.0;
  int smooth_k = 5;
  double act_threshold = 0.1;
  // Flow in pixels per second per unit of smoothed activation difference.
  // event_flow scales by the frame interval to land in pixels per frame.
  double gain = 1.0;

  void validate() const;
};

/// Layer 1: per-pixel leaky accumulator with lazy exponential decay.
struct ActivationState
{
  GridShape shape;
  std::vector<double> act;
  std::vector<std::uint64_t> last_t;
  double tau_us = 30000.0;
  std::uint64_t latest_t = 0;  // newest ingested event time

  ActivationState() = default;
  ActivationState(GridShape s, double tau);
};

/// act <- act * exp(-(t - last_t) / tau) + 1 per event, polarity ignored.
/// Throws DataError if an event is older than its pixel's last update.
void accumulate(ActivationState & state, std::span<const Event> events);

/// Decayed activation at t_query, state untouched.
ScalarMap snapshot(const ActivationState & state, std::uint64_t t_query);

/// Layer 2a/2b central differences; the one-pixel border is zero and
/// flagged invalid in `valid`.
struct DirectionalDiff
{
  ScalarMap dx;
  ScalarMap dy;
  BinaryMap valid;
};
DirectionalDiff directional_diff(const ScalarMap & snap);

/// Layer 3: mean of d over active pixels inside the k x k window, at active
/// pixels only. `out_active` marks pixels that produced a value.
ScalarMap smooth_avg(const ScalarMap & d, const BinaryMap & active, int k,
                     BinaryMap * out_active = nullptr);

/// Smoothed layer-2 responses before the gain is applied.
struct LeakyResponse
{
  ScalarMap snap;
  BinaryMap active;
  ScalarMap dx;
  ScalarMap dy;
  BinaryMap valid;
  std::size_t active_count = 0;
};

/// Runs layers 1-3 for one slice [t0, t1): accumulate, snapshot at t1,
/// threshold, differences and smoothing.
LeakyResponse leaky_response(ActivationState & state, std::span<const Event> slice,
                             std::uint64_t t1, const LeakyParams & params);

/// End-to-end event pipeline for one slice. Output in pixels per frame
/// interval `dt_frame_us`.
FlowField event_flow(ActivationState & state, std::span<const Event> slice, std::uint64_t t0,
                     std::uint64_t t1, const LeakyParams & params, std::uint64_t dt_frame_us);

FlowField response_to_flow(const LeakyResponse & r, const LeakyParams & params,
                           std::uint64_t dt_frame_us);

}  // namespace fuseflow

#endif  // FUSEFLOW_LEAKY_FILTER_HPP
