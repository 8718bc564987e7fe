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

#ifndef FUSEFLOW_REFERENCE_HPP
#define FUSEFLOW_REFERENCE_HPP

// Straightforward serial versions of the hot kernels. They share no code with
// the OpenMP implementations and exist for parity tests and benchmarks.

#include <span>

#include "fuseflow/core.hpp"
#include "fuseflow/frame_flow.hpp"
#include "fuseflow/leaky_filter.hpp"

namespace fuseflow::reference
{
/// Per pixel: build the 6x6 weighted normal equations over the full 2-D
/// window and solve them by elimination.
PolyExpField poly_expansion(const ScalarMap & frame, int poly_n, double poly_sigma);

/// Direct 2-D window sums of the normal-equation terms.
FlowField displacement_step(const PolyExpField & p1, const PolyExpField & p2,
                            const FlowField & prior, int avg_window, double det_eps);

/// Direct k x k loops, clipped at the border.
ScalarMap smooth_avg(const ScalarMap & d, const BinaryMap & active, int k);

/// Plain sequential event loop.
void accumulate(ActivationState & state, std::span<const Event> events);

/// Per-pixel recomputation of the mean endpoint error.
double aee(const FlowField & flow, const FlowField & gt);

}  // namespace fuseflow::reference

#endif  // FUSEFLOW_REFERENCE_HPP
