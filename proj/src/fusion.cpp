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

#include "fuseflow/fusion.hpp"

#include <cmath>
#include <stdexcept>

namespace fuseflow
{
void FusionParams::validate() const
{
  if (!(thresh_farneback > 0.0) || !(thresh_leakycnn > 0.0)) {
    throw std::invalid_argument("fusion: distance thresholds must be positive");
  }
  if (std::isnan(thresh_confidence)) {
    throw std::invalid_argument("fusion: thresh_confidence must be a number");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("fusion: rho must lie in [0, 1]");
  }
}

FusionState::FusionState(GridShape shape)
: of_frame(shape), of_event_prev(shape), belief_prev(shape, 0.0), confidence(shape, 0.0)
{
}

ConditionFlags condition_flags(const FlowField & of_frame, const FlowField & of_event_t,
                               const FlowField & of_event_prev, const FusionParams & params)
{
  const auto d_frame = flow_distance_map(of_frame, of_event_t);
  const auto d_event = flow_distance_map(of_event_t, of_event_prev);
  const GridShape s = of_event_t.shape;
  ConditionFlags f{BinaryMap(s, 0), BinaryMap(s, 0)};
  const auto n = static_cast<std::ptrdiff_t>(s.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (!of_event_t.valid[i]) {
      continue;
    }
    f.err_f[i] = (d_frame.valid[i] && d_frame.distance[i] > params.thresh_farneback) ? 1 : 0;
    f.err_e[i] = (d_event.valid[i] && d_event.distance[i] < params.thresh_leakycnn) ? 1 : 0;
  }
  return f;
}

void update_confidence(FusionState & state, const ConditionFlags & flags, Accumulation mode)
{
  require_same_shape(state.confidence.shape, flags.err_f.shape, "update_confidence");
  require_same_shape(state.confidence.shape, flags.err_e.shape, "update_confidence");
  const auto n = static_cast<std::ptrdiff_t>(state.confidence.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double b = static_cast<double>(flags.err_f[i] * flags.err_e[i]);
    if (mode == Accumulation::two_level) {
      const double belief = state.belief_prev[i] + b;
      state.confidence[i] += belief;
      state.belief_prev[i] = belief;
    } else {
      state.confidence[i] += b;
    }
  }
}

FusedFlow fuse(FusionState & state, const FlowField & of_event_t, const FusionParams & params)
{
  require_same_shape(state.confidence.shape, of_event_t.shape, "fuse");
  const GridShape s = of_event_t.shape;
  FusedFlow out{FlowField(s), BinaryMap(s, 0)};
  const auto n = static_cast<std::ptrdiff_t>(s.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (of_event_t.valid[i] && state.confidence[i] > params.thresh_confidence) {
      out.source_mask[i] = 1;
      out.fused.set(i, of_event_t.u[i], of_event_t.v[i]);
    } else if (state.of_frame.valid[i]) {
      out.fused.set(i, state.of_frame.u[i], state.of_frame.v[i]);
    }
  }
  state.of_event_prev = of_event_t;
  return out;
}

void on_new_frame_inference(FusionState & state, const FlowField & of_frame_new,
                            const FusionParams & params)
{
  require_same_shape(state.confidence.shape, of_frame_new.shape, "on_new_frame_inference");
  state.of_frame = of_frame_new;
  for (std::size_t i = 0; i < state.confidence.size(); ++i) {
    state.belief_prev[i] *= params.rho;
    state.confidence[i] *= params.rho;
  }
}

FusedFlow fusion_step(FusionState & state, const FlowField & of_event_t,
                      const FusionParams & params)
{
  const auto flags = condition_flags(state.of_frame, of_event_t, state.of_event_prev, params);
  update_confidence(state, flags, params.accumulation);
  return fuse(state, of_event_t, params);
}

}  // namespace fuseflow
