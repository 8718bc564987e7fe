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

#include "fuseflow/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fuseflow
{
void validate_shape(const GridShape & shape)
{
  if (shape.width < 8 || shape.height < 8) {
    throw DataError(
      "grid shape " + std::to_string(shape.width) + "x" + std::to_string(shape.height) +
      " is below the 8x8 minimum");
  }
}

void require_same_shape(const GridShape & a, const GridShape & b, const char * what)
{
  if (!(a == b)) {
    throw DataError(
      std::string(what) + ": shape mismatch " + std::to_string(a.width) + "x" +
      std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
      std::to_string(b.height));
  }
}

FlowField::FlowField(GridShape s)
: shape(s), u(s.size(), kFlowSentinel), v(s.size(), kFlowSentinel), valid(s.size(), 0)
{
}

std::size_t FlowField::valid_count() const
{
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

BinaryMap FlowField::valid_map() const
{
  BinaryMap m(shape);
  m.values = valid;
  return m;
}

FlowField uniform_flow(GridShape shape, double u, double v)
{
  FlowField f(shape);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.set(i, u, v);
  }
  return f;
}

namespace
{
AeeResult aee_impl(const FlowField & flow, const FlowField & gt, const BinaryMap * region)
{
  require_same_shape(flow.shape, gt.shape, "aee");
  if (region) {
    require_same_shape(flow.shape, region->shape, "aee region");
  }
  AeeResult r;
  r.ee_map = ScalarMap(flow.shape, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    if (!flow.valid[i] || !gt.valid[i] || (region && !(*region)[i])) {
      continue;
    }
    const double du = flow.u[i] - gt.u[i];
    const double dv = flow.v[i] - gt.v[i];
    const double ee = std::sqrt(du * du + dv * dv);
    r.ee_map[i] = ee;
    sum += ee;
    ++r.count;
  }
  if (r.count == 0) {
    throw DataError("aee: no overlap between flow and ground-truth validity");
  }
  r.mean = sum / static_cast<double>(r.count);
  return r;
}
}  // namespace

AeeResult aee(const FlowField & flow, const FlowField & gt) { return aee_impl(flow, gt, nullptr); }

AeeResult aee(const FlowField & flow, const FlowField & gt, const BinaryMap & region)
{
  return aee_impl(flow, gt, &region);
}

DistanceMap flow_distance_map(const FlowField & a, const FlowField & b)
{
  require_same_shape(a.shape, b.shape, "flow_distance_map");
  DistanceMap d{ScalarMap(a.shape, 0.0), BinaryMap(a.shape, 0)};
  const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (a.valid[i] && b.valid[i]) {
      const double du = a.u[i] - b.u[i];
      const double dv = a.v[i] - b.v[i];
      d.distance[i] = std::sqrt(du * du + dv * dv);
      d.valid[i] = 1;
    }
  }
  return d;
}

EventPercent event_percent(const BinaryMap & source_mask, const BinaryMap & fused_valid)
{
  require_same_shape(source_mask.shape, fused_valid.shape, "event_percent");
  std::size_t from_events = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < fused_valid.size(); ++i) {
    if (fused_valid[i]) {
      ++total;
      if (source_mask[i]) {
        ++from_events;
      }
    }
  }
  if (total == 0) {
    return {0.0, true};
  }
  return {100.0 * static_cast<double>(from_events) / static_cast<double>(total), false};
}

RgbImage flow_to_color(const FlowField & flow, double max_mag)
{
  if (!(max_mag > 0.0) || !std::isfinite(max_mag)) {
    throw std::invalid_argument("flow_to_color: max_mag must be positive and finite");
  }
  RgbImage img{flow.shape, std::vector<std::uint8_t>(flow.size() * 3, 0)};
  for (std::size_t i = 0; i < flow.size(); ++i) {
    if (!flow.valid[i]) {
      continue;
    }
    const double u = flow.u[i];
    const double v = flow.v[i];
    const double sat = std::min(std::hypot(u, v) / max_mag, 1.0);
    double hue = std::atan2(v, u) * 180.0 / std::numbers::pi;
    if (hue < 0.0) {
      hue += 360.0;
    }
    // HSV -> RGB with V = 1
    const double h6 = hue / 60.0;
    const int sector = static_cast<int>(h6) % 6;
    const double f = h6 - std::floor(h6);
    const double p = 1.0 - sat;
    const double q = 1.0 - sat * f;
    const double t = 1.0 - sat * (1.0 - f);
    double r = 1, g = 1, b = 1;
    switch (sector) {
      case 0: r = 1; g = t; b = p; break;
      case 1: r = q; g = 1; b = p; break;
      case 2: r = p; g = 1; b = t; break;
      case 3: r = p; g = q; b = 1; break;
      case 4: r = t; g = p; b = 1; break;
      default: r = 1; g = p; b = q; break;
    }
    img.rgb[3 * i + 0] = static_cast<std::uint8_t>(std::lround(255.0 * r));
    img.rgb[3 * i + 1] = static_cast<std::uint8_t>(std::lround(255.0 * g));
    img.rgb[3 * i + 2] = static_cast<std::uint8_t>(std::lround(255.0 * b));
  }
  return img;
}

}  // namespace fuseflow
