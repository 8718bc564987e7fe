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

#ifndef FUSEFLOW_SYNTH_HPP
#define FUSEFLOW_SYNTH_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "fuseflow/core.hpp"
#include "fuseflow/io.hpp"

namespace fuseflow
{
enum class SceneKind { translating_texture, translating_edge, moving_square, two_speed };

SceneKind parse_scene_kind(const std::string & name);
std::string to_string(SceneKind kind);

struct Vec2
{
  double x = 0.0;
  double y = 0.0;
};

struct SceneConfig
{
  GridShape shape{128, 96};
  SceneKind kind = SceneKind::translating_texture;
  Vec2 velocity{50.0, 0.0};     // px/s; foreground for two_speed / moving_square
  Vec2 bg_velocity{0.0, 0.0};   // px/s; two_speed background
  std::uint64_t seed = 1;
  double frame_rate = 20.0;     // Hz
  double duration_s = 0.5;
  int sim_substeps = 20;
  int square_size = 24;         // px, moving_square / two_speed
  double intensity_lo = 0.2;
  double intensity_hi = 0.8;
  double min_wavelength = 6.0;  // px, texture band
  double max_wavelength = 24.0;
  // two_speed foreground: flat square at this intensity, or (when negative)
  // its own band-limited texture in the upper half of the intensity range.
  double fg_intensity = 1.0;

  void validate() const;
  std::uint64_t frame_interval_us() const;
  std::uint64_t duration_us() const;
  /// Frames at t = i * interval for i = 0 .. frame_count() - 1.
  int frame_count() const;
};

struct DvsParams
{
  double contrast_threshold = 0.2;  // log-intensity units
  double refractory_us = 500.0;
  double log_eps = 1e-3;

  void validate() const;
};

/// Seeded band-limited noise: a sum of random plane waves with wavelengths in
/// [min_wavelength, max_wavelength], rescaled to [lo, hi]. Evaluated exactly
/// at any real coordinate.
class BandLimitedTexture
{
public:
  BandLimitedTexture(std::uint64_t seed, double min_wavelength, double max_wavelength, double lo,
                     double hi, int components = 48);
  double operator()(double x, double y) const;

private:
  struct Wave
  {
    double kx, ky, phase, amp;
  };
  std::vector<Wave> waves_;
  double offset_ = 0.0;
  double scale_ = 1.0;
  double lo_ = 0.0;
  double hi_ = 1.0;
};

/// Rasterized texture tile sampled bilinearly, covering a fixed window of
/// pattern coordinates.
class PatternTile
{
public:
  PatternTile() = default;
  PatternTile(const BandLimitedTexture & tex, int x0, int y0, int width, int height);
  double sample(double x, double y) const;

private:
  int x0_ = 0, y0_ = 0, w_ = 0, h_ = 0;
  std::vector<double> v_;
};

/// Renders frames and ground-truth flow of a SceneConfig.
class Scene
{
public:
  explicit Scene(SceneConfig config);

  const SceneConfig & config() const { return config_; }
  /// Intensity in [0, 1]. Throws std::out_of_range outside [0, duration].
  ScalarMap render(double t_us) const;
  void render_into(double t_us, std::span<double> out) const;
  /// True velocity in px per frame interval.
  FlowField gt_flow(double t_us) const;
  /// Pixels covered by the moving foreground (empty map for full-frame motion).
  BinaryMap foreground_mask(double t_us) const;

private:
  double foreground_coverage(int x, int y, double t_us) const;
  void check_time(double t_us) const;

  SceneConfig config_;
  PatternTile background_;
  PatternTile foreground_;
};

/// Log-intensity provider: fills `out` (row-major H x W) for time t_us.
using LogIntensityFn = std::function<void(double t_us, std::span<double> out)>;

/// Contrast-threshold event model on a sampled log-intensity signal.
/// Substep k covers (t_{k-1}, t_k] with t_k = k * step_us, k = 1..steps.
EventStream simulate_log_intensity(GridShape shape, int steps, double step_us,
                                   const LogIntensityFn & log_intensity, const DvsParams & dvs);

/// Events of a scene rendered at sim_substeps x frame_rate, globally sorted
/// by time with ties broken row-major.
EventStream dvs_simulate(const Scene & scene, const DvsParams & dvs);

FrameSequence render_frames(const Scene & scene);

}  // namespace fuseflow

#endif  // FUSEFLOW_SYNTH_HPP
