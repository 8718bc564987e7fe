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

#ifndef FUSEFLOW_CORE_HPP
#define FUSEFLOW_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fuseflow
{
/// Raised for malformed or inconsistent input data. The message carries the
/// location (file, line or record index) when one is known.
class DataError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct GridShape
{
  int width = 0;
  int height = 0;

  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool operator==(const GridShape &) const = default;
};

/// Throws unless both sides are at least 8x8.
void validate_shape(const GridShape & shape);
void require_same_shape(const GridShape & a, const GridShape & b, const char * what);

/// Dense row-major H x W map.
template <typename T>
struct Grid
{
  GridShape shape;
  std::vector<T> values;

  Grid() = default;
  explicit Grid(GridShape s, T fill = T{}) : shape(s), values(s.size(), fill) {}

  T & operator()(int x, int y) { return values[shape.index(x, y)]; }
  const T & operator()(int x, int y) const { return values[shape.index(x, y)]; }
  T & operator[](std::size_t i) { return values[i]; }
  const T & operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

using ScalarMap = Grid<double>;
using BinaryMap = Grid<std::uint8_t>;

/// Magnitude stored in u and v of invalid pixels (unknown-flow convention).
inline constexpr double kFlowSentinel = 1e10;

/// Dense flow in pixels per frame interval, with a validity mask.
struct FlowField
{
  GridShape shape;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<std::uint8_t> valid;

  FlowField() = default;
  /// All pixels invalid.
  explicit FlowField(GridShape s);

  std::size_t size() const { return valid.size(); }
  void set(std::size_t i, double du, double dv)
  {
    u[i] = du;
    v[i] = dv;
    valid[i] = 1;
  }
  void invalidate(std::size_t i)
  {
    u[i] = kFlowSentinel;
    v[i] = kFlowSentinel;
    valid[i] = 0;
  }
  std::size_t valid_count() const;
  BinaryMap valid_map() const;
};

/// Every pixel valid with the given vector.
FlowField uniform_flow(GridShape shape, double u, double v);

struct AeeResult
{
  double mean = 0.0;
  ScalarMap ee_map;  // zero outside the evaluation set
  std::size_t count = 0;
};

/// Average endpoint error over pixels valid in both fields (optionally also
/// inside `region`). Summation is row-major sequential. Throws DataError when
/// the evaluation set is empty.
AeeResult aee(const FlowField & flow, const FlowField & gt);
AeeResult aee(const FlowField & flow, const FlowField & gt, const BinaryMap & region);

struct DistanceMap
{
  ScalarMap distance;
  BinaryMap valid;  // 1 where both inputs were valid
};

/// Per-pixel Euclidean distance; pixels invalid in either input get 0 and
/// valid = 0.
DistanceMap flow_distance_map(const FlowField & a, const FlowField & b);

struct EventPercent
{
  double percent = 0.0;
  bool empty = false;  // fused_valid had no set pixels
};

EventPercent event_percent(const BinaryMap & source_mask, const BinaryMap & fused_valid);

struct RgbImage
{
  GridShape shape;
  std::vector<std::uint8_t> rgb;  // 3 bytes per pixel, row-major
};

/// HSV color wheel: hue = atan2(v, u) with 0 deg red, 120 deg green,
/// 240 deg blue; saturation = min(|flow| / max_mag, 1); value = 1.
/// Zero flow renders white, invalid pixels black.
RgbImage flow_to_color(const FlowField & flow, double max_mag);

}  // namespace fuseflow

#endif  // FUSEFLOW_CORE_HPP
