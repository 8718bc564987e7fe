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

#ifndef FUSEFLOW_FRAME_FLOW_HPP
#define FUSEFLOW_FRAME_FLOW_HPP

#include <array>
#include <string>
#include <vector>

#include "fuseflow/core.hpp"

namespace fuseflow
{
struct FarnebackParams
{
  int pyramid_levels = 3;  // including the full-resolution level
  double pyr_scale = 0.5;
  int poly_n = 7;
  double poly_sigma = 1.5;
  int avg_window = 15;
  int iterations = 3;
  double det_eps = 1e-6;

  void validate() const;
};

/// Per-pixel quadratic model f(p + d) ~ d^T A d + b^T d + c in local
/// coordinates (d.x along columns, d.y along rows).
struct PolyExpField
{
  GridShape shape;
  std::vector<double> a11, a12, a22;
  std::vector<double> b1, b2;
  std::vector<double> c;
  int border = 0;  // rows/cols at each edge fitted from replicated samples

  PolyExpField() = default;
  explicit PolyExpField(GridShape s);
};

/// Gaussian-weighted least-squares fit of {1, x, y, x^2, y^2, xy} over a
/// poly_n x poly_n window, computed separably with replicate padding.
PolyExpField poly_expansion(const ScalarMap & frame, int poly_n, double poly_sigma);
PolyExpField poly_expansion(const ScalarMap & frame, const FarnebackParams & params);

/// Inverse Gram matrix of the weighted basis, row-major 6x6, basis order
/// {1, x, y, x^2, y^2, xy}.
std::array<double, 36> poly_inverse_gram(int poly_n, double poly_sigma);

/// One displacement estimate. p2 is sampled at the pixel shifted by the
/// rounded prior, and the same rounded prior enters the right-hand side, so
/// the result is the full displacement rather than an increment.
FlowField displacement_step(const PolyExpField & p1, const PolyExpField & p2,
                            const FlowField & prior, int avg_window, double det_eps);

/// Separable Gaussian blur with replicate padding.
ScalarMap gaussian_blur(const ScalarMap & img, double sigma);
/// Bilinear resample to `target` (pixel centres aligned).
ScalarMap resize_bilinear(const ScalarMap & img, GridShape target);

/// Coarse-to-fine dense flow from f1 to f2 in pixels per frame interval.
/// `warnings`, when given, receives a note if pyramid levels were dropped.
FlowField farneback_flow(const ScalarMap & f1, const ScalarMap & f2,
                         const FarnebackParams & params,
                         std::vector<std::string> * warnings = nullptr);

}  // namespace fuseflow

#endif  // FUSEFLOW_FRAME_FLOW_HPP
