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

#ifndef FUSEFLOW_FUSION_HPP
#define FUSEFLOW_FUSION_HPP

#include "fuseflow/core.hpp"

namespace fuseflow
{
enum class Accumulation {
  // belief <- belief_prev + b; confidence <- confidence + belief
  two_level,
  // confidence <- confidence + b
  single,
};

struct FusionParams
{
  double thresh_farneback = 1.0;  // px per frame interval
  double thresh_leakycnn = 1.0;   // px per frame interval
  double thresh_confidence = 2.0;
  double rho = 0.0;  // confidence carry-over when a new frame inference lands
  Accumulation accumulation = Accumulation::two_level;

  void validate() const;
};

struct FusionState
{
  FlowField of_frame;
  FlowField of_event_prev;
  ScalarMap belief_prev;
  ScalarMap confidence;

  FusionState() = default;
  /// Zero confidence, no frame inference and no previous event flow yet.
  explicit FusionState(GridShape shape);
};

struct ConditionFlags
{
  BinaryMap err_f;  // event flow disagrees with the frame flow
  BinaryMap err_e;  // event flow agrees with the previous event flow
};

/// Both flags are forced to 0 wherever of_event_t is invalid, and each is 0
/// where its distance is undefined (the other input invalid).
ConditionFlags condition_flags(const FlowField & of_frame, const FlowField & of_event_t,
                               const FlowField & of_event_prev, const FusionParams & params);

void update_confidence(FusionState & state, const ConditionFlags & flags,
                       Accumulation mode = Accumulation::two_level);

struct FusedFlow
{
  FlowField fused;
  BinaryMap source_mask;  // 1 where the value came from the event pipeline
};

/// Selects per pixel (no blending) and then records of_event_t as the
/// previous event inference.
FusedFlow fuse(FusionState & state, const FlowField & of_event_t, const FusionParams & params);

void on_new_frame_inference(FusionState & state, const FlowField & of_frame_new,
                            const FusionParams & params);

/// One event-rate step: flags, confidence update, fusion.
FusedFlow fusion_step(FusionState & state, const FlowField & of_event_t,
                      const FusionParams & params);

}  // namespace fuseflow

#endif  // FUSEFLOW_FUSION_HPP
