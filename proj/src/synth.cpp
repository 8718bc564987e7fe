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

#include "fuseflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace fuseflow
{
SceneKind parse_scene_kind(const std::string & name)
{
  if (name == "translating_texture") return SceneKind::translating_texture;
  if (name == "translating_edge") return SceneKind::translating_edge;
  if (name == "moving_square") return SceneKind::moving_square;
  if (name == "two_speed") return SceneKind::two_speed;
  throw std::invalid_argument("unknown scene kind '" + name + "'");
}

std::string to_string(SceneKind kind)
{
  switch (kind) {
    case SceneKind::translating_texture: return "translating_texture";
    case SceneKind::translating_edge: return "translating_edge";
    case SceneKind::moving_square: return "moving_square";
    case SceneKind::two_speed: return "two_speed";
  }
  return "?";
}

void SceneConfig::validate() const
{
  validate_shape(shape);
  if (!std::isfinite(velocity.x) || !std::isfinite(velocity.y) || !std::isfinite(bg_velocity.x) ||
      !std::isfinite(bg_velocity.y)) {
    throw std::invalid_argument("scene: velocities must be finite");
  }
  if (!(frame_rate > 0.0) || !(duration_s > 0.0)) {
    throw std::invalid_argument("scene: frame_rate and duration must be positive");
  }
  if (sim_substeps < 4) {
    throw std::invalid_argument("scene: sim_substeps must be >= 4");
  }
  if (square_size < 1) {
    throw std::invalid_argument("scene: square_size must be positive");
  }
  if (!(intensity_lo >= 0.0 && intensity_hi <= 1.0 && intensity_lo < intensity_hi)) {
    throw std::invalid_argument("scene: need 0 <= intensity_lo < intensity_hi <= 1");
  }
  if (!(fg_intensity <= 1.0)) {
    throw std::invalid_argument("scene: fg_intensity must be <= 1 (negative selects texture)");
  }
  if (!(min_wavelength >= 2.0 && max_wavelength >= min_wavelength)) {
    throw std::invalid_argument("scene: need 2 <= min_wavelength <= max_wavelength");
  }
  if (frame_count() < 2) {
    throw std::invalid_argument("scene: duration shorter than one frame interval");
  }
}

std::uint64_t SceneConfig::frame_interval_us() const
{
  return static_cast<std::uint64_t>(std::llround(1e6 / frame_rate));
}

std::uint64_t SceneConfig::duration_us() const
{
  return static_cast<std::uint64_t>(std::llround(duration_s * 1e6));
}

int SceneConfig::frame_count() const
{
  return static_cast<int>(duration_us() / frame_interval_us()) + 1;
}

void DvsParams::validate() const
{
  if (!(contrast_threshold > 0.0)) {
    throw std::invalid_argument("dvs: contrast_threshold must be positive");
  }
  if (!(refractory_us >= 0.0)) {
    throw std::invalid_argument("dvs: refractory must be >= 0");
  }
  if (!(log_eps > 0.0)) {
    throw std::invalid_argument("dvs: log_eps must be positive");
  }
}

namespace
{
// Uniform [0, 1) from the raw 64-bit engine output; keeps textures identical
// across standard libraries.
double unit(std::mt19937_64 & rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
}  // namespace

BandLimitedTexture::BandLimitedTexture(std::uint64_t seed, double min_wavelength,
                                       double max_wavelength, double lo, double hi,
                                       int components)
{
  std::mt19937_64 rng(seed);
  double power = 0.0;
  for (int k = 0; k < components; ++k) {
    const double wavelength = min_wavelength + (max_wavelength - min_wavelength) * unit(rng);
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    const double amp = 0.5 + unit(rng);
    const double k_mag = 2.0 * std::numbers::pi / wavelength;
    waves_.push_back({k_mag * std::cos(angle), k_mag * std::sin(angle), phase, amp});
    power += 0.5 * amp * amp;
  }
  // +-3 sigma of the wave sum spans [lo, hi]; samples are clamped beyond.
  offset_ = 0.5 * (lo + hi);
  scale_ = 0.5 * (hi - lo) / (3.0 * std::sqrt(power));
  lo_ = lo;
  hi_ = hi;
}

double BandLimitedTexture::operator()(double x, double y) const
{
  double s = 0.0;
  for (const auto & w : waves_) {
    s += w.amp * std::cos(w.kx * x + w.ky * y + w.phase);
  }
  return std::clamp(offset_ + scale_ * s, lo_, hi_);
}

PatternTile::PatternTile(const BandLimitedTexture & tex, int x0, int y0, int width, int height)
: x0_(x0), y0_(y0), w_(width), h_(height), v_(static_cast<std::size_t>(width) * height)
{
#pragma omp parallel for schedule(static)
  for (int j = 0; j < h_; ++j) {
    for (int i = 0; i < w_; ++i) {
      v_[static_cast<std::size_t>(j) * w_ + i] = tex(x0_ + i, y0_ + j);
    }
  }
}

double PatternTile::sample(double x, double y) const
{
  const double fx = std::clamp(x - x0_, 0.0, w_ - 1.0);
  const double fy = std::clamp(y - y0_, 0.0, h_ - 1.0);
  const int ix = std::min(static_cast<int>(fx), w_ - 2);
  const int iy = std::min(static_cast<int>(fy), h_ - 2);
  const double ax = fx - ix;
  const double ay = fy - iy;
  const double * row0 = &v_[static_cast<std::size_t>(iy) * w_];
  const double * row1 = row0 + w_;
  const double top = row0[ix] + ax * (row0[ix + 1] - row0[ix]);
  const double bot = row1[ix] + ax * (row1[ix + 1] - row1[ix]);
  return top + ay * (bot - top);
}

namespace
{
// Smallest tile covering pattern coordinates p - v t for t in [0, duration].
PatternTile tile_for(const BandLimitedTexture & tex, GridShape shape, Vec2 v, double duration_s)
{
  const double tx = v.x * duration_s;
  const double ty = v.y * duration_s;
  const int x0 = static_cast<int>(std::floor(std::min(0.0, -tx))) - 2;
  const int y0 = static_cast<int>(std::floor(std::min(0.0, -ty))) - 2;
  const int x1 = static_cast<int>(std::ceil(std::max(0.0, -tx))) + shape.width + 2;
  const int y1 = static_cast<int>(std::ceil(std::max(0.0, -ty))) + shape.height + 2;
  return PatternTile(tex, x0, y0, x1 - x0, y1 - y0);
}

double overlap(double a0, double a1, double b0, double b1)
{
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}
}  // namespace

Scene::Scene(SceneConfig config) : config_(config)
{
  config_.validate();
  const auto & c = config_;
  if (c.kind == SceneKind::translating_texture || c.kind == SceneKind::two_speed) {
    const Vec2 bg = c.kind == SceneKind::two_speed ? c.bg_velocity : c.velocity;
    BandLimitedTexture tex(c.seed, c.min_wavelength, c.max_wavelength, c.intensity_lo,
                           c.intensity_hi);
    background_ = tile_for(tex, c.shape, bg, c.duration_s);
  }
  if (c.kind == SceneKind::two_speed && c.fg_intensity < 0.0) {
    // Foreground texture sits in the upper part of the range so the square
    // stands out against the background.
    BandLimitedTexture tex(c.seed ^ 0x9E3779B97F4A7C15ULL, c.min_wavelength, c.max_wavelength,
                           0.5 * (c.intensity_lo + c.intensity_hi), 1.0);
    foreground_ = tile_for(tex, c.shape, c.velocity, c.duration_s);
  }
}

void Scene::check_time(double t_us) const
{
  if (!(t_us >= 0.0 && t_us <= static_cast<double>(config_.duration_us()) + 1e-6)) {
    throw std::out_of_range("scene: time " + std::to_string(t_us) + " us outside [0, " +
                            std::to_string(config_.duration_us()) + "]");
  }
}

double Scene::foreground_coverage(int x, int y, double t_us) const
{
  const auto & c = config_;
  const double dt = (t_us - 0.5 * static_cast<double>(c.duration_us())) * 1e-6;
  const double cx = 0.5 * (c.shape.width - 1) + c.velocity.x * dt;
  const double cy = 0.5 * (c.shape.height - 1) + c.velocity.y * dt;
  const double h = 0.5 * c.square_size;
  return overlap(x - 0.5, x + 0.5, cx - h, cx + h) * overlap(y - 0.5, y + 0.5, cy - h, cy + h);
}

void Scene::render_into(double t_us, std::span<double> out) const
{
  check_time(t_us);
  const auto & c = config_;
  const GridShape s = c.shape;
  if (out.size() != s.size()) {
    throw std::invalid_argument("render_into: output size mismatch");
  }
  const double t = t_us * 1e-6;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      double value = 0.0;
      switch (c.kind) {
        case SceneKind::translating_texture:
          value = background_.sample(x - c.velocity.x * t, y - c.velocity.y * t);
          break;
        case SceneKind::translating_edge: {
          // Edge normal along the velocity, crossing the centre at mid-run;
          // the bright side trails the edge.
          const double speed = std::hypot(c.velocity.x, c.velocity.y);
          const double nx = speed > 0.0 ? c.velocity.x / speed : 1.0;
          const double ny = speed > 0.0 ? c.velocity.y / speed : 0.0;
          const double travel = speed * (t - 0.5 * c.duration_s);
          const double dist =
            (x - 0.5 * (s.width - 1)) * nx + (y - 0.5 * (s.height - 1)) * ny - travel;
          const double cov = std::clamp(0.5 - dist, 0.0, 1.0);
          value = c.intensity_lo + (c.intensity_hi - c.intensity_lo) * cov;
          break;
        }
        case SceneKind::moving_square: {
          const double cov = foreground_coverage(x, y, t_us);
          value = c.intensity_lo + (c.intensity_hi - c.intensity_lo) * cov;
          break;
        }
        case SceneKind::two_speed: {
          const double cov = foreground_coverage(x, y, t_us);
          const double bg = background_.sample(x - c.bg_velocity.x * t, y - c.bg_velocity.y * t);
          double fg = c.fg_intensity;
          if (cov > 0.0 && c.fg_intensity < 0.0) {
            fg = foreground_.sample(x - c.velocity.x * t, y - c.velocity.y * t);
          }
          value = cov * fg + (1.0 - cov) * bg;
          break;
        }
      }
      out[s.index(x, y)] = value;
    }
  }
}

ScalarMap Scene::render(double t_us) const
{
  ScalarMap img(config_.shape);
  render_into(t_us, img.values);
  return img;
}

BinaryMap Scene::foreground_mask(double t_us) const
{
  check_time(t_us);
  BinaryMap m(config_.shape, 0);
  if (config_.kind != SceneKind::moving_square && config_.kind != SceneKind::two_speed) {
    return m;
  }
  for (int y = 0; y < config_.shape.height; ++y) {
    for (int x = 0; x < config_.shape.width; ++x) {
      m(x, y) = foreground_coverage(x, y, t_us) >= 0.5 ? 1 : 0;
    }
  }
  return m;
}

FlowField Scene::gt_flow(double t_us) const
{
  check_time(t_us);
  const auto & c = config_;
  const double per_frame = 1.0 / c.frame_rate;
  const Vec2 fg{c.velocity.x * per_frame, c.velocity.y * per_frame};
  Vec2 bg = fg;
  if (c.kind == SceneKind::moving_square) {
    bg = {0.0, 0.0};
  } else if (c.kind == SceneKind::two_speed) {
    bg = {c.bg_velocity.x * per_frame, c.bg_velocity.y * per_frame};
  }
  const auto mask = foreground_mask(t_us);
  const bool has_fg = c.kind == SceneKind::moving_square || c.kind == SceneKind::two_speed;
  FlowField f(c.shape);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec2 v = (has_fg && mask[i]) ? fg : bg;
    f.set(i, v.x, v.y);
  }
  return f;
}

EventStream simulate_log_intensity(GridShape shape, int steps, double step_us,
                                   const LogIntensityFn & log_intensity, const DvsParams & dvs)
{
  dvs.validate();
  const std::size_t n = shape.size();
  std::vector<double> l_prev(n), l_cur(n), l_ref(n);
  std::vector<double> last_event(n, -std::numeric_limits<double>::infinity());
  log_intensity(0.0, l_prev);
  l_ref = l_prev;

  struct Raw
  {
    std::uint64_t t;
    std::uint32_t pixel;
    std::int8_t p;
  };
  // One buffer per row, filled by whichever thread owns that row.
  std::vector<std::vector<Raw>> rows(shape.height);
  const double c = dvs.contrast_threshold;

  for (int k = 1; k <= steps; ++k) {
    const double t_prev = (k - 1) * step_us;
    log_intensity(k * step_us, l_cur);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < shape.height; ++y) {
      auto & buf = rows[y];
      for (int x = 0; x < shape.width; ++x) {
        const std::size_t q = shape.index(x, y);
        const double l0 = l_prev[q];
        const double l1 = l_cur[q];
        while (std::fabs(l1 - l_ref[q]) >= c) {
          const double pol = l1 > l_ref[q] ? 1.0 : -1.0;
          const double level = l_ref[q] + pol * c;
          const double frac = std::clamp((level - l0) / (l1 - l0), 0.0, 1.0);
          const double te = t_prev + frac * step_us;
          l_ref[q] = level;
          if (te - last_event[q] >= dvs.refractory_us) {
            last_event[q] = te;
            buf.push_back({static_cast<std::uint64_t>(std::floor(te)),
                           static_cast<std::uint32_t>(q), static_cast<std::int8_t>(pol)});
          }
        }
      }
    }
    std::swap(l_prev, l_cur);
  }

  std::vector<Raw> all;
  for (auto & r : rows) {
    all.insert(all.end(), r.begin(), r.end());
  }
  // Row-major concatenation keeps per-pixel order, so a stable sort on
  // (t, pixel) is deterministic.
  std::stable_sort(all.begin(), all.end(), [](const Raw & a, const Raw & b) {
    return a.t != b.t ? a.t < b.t : a.pixel < b.pixel;
  });

  EventStream out;
  out.shape = shape;
  out.events.reserve(all.size());
  for (const auto & r : all) {
    out.events.push_back({r.t, static_cast<std::uint16_t>(r.pixel % shape.width),
                          static_cast<std::uint16_t>(r.pixel / shape.width), r.p});
  }
  return out;
}

EventStream dvs_simulate(const Scene & scene, const DvsParams & dvs)
{
  const auto & c = scene.config();
  const double step_us = static_cast<double>(c.frame_interval_us()) / c.sim_substeps;
  const int steps = static_cast<int>(std::floor(c.duration_us() / step_us + 1e-9));
  const double eps = dvs.log_eps;
  auto log_fn = [&](double t, std::span<double> out) {
    scene.render_into(t, out);
    for (double & v : out) {
      v = std::log(v + eps);
    }
  };
  return simulate_log_intensity(c.shape, steps, step_us, log_fn, dvs);
}

FrameSequence render_frames(const Scene & scene)
{
  const auto & c = scene.config();
  FrameSequence seq;
  seq.shape = c.shape;
  const auto dt = c.frame_interval_us();
  for (int i = 0; i < c.frame_count(); ++i) {
    const std::uint64_t t = dt * static_cast<std::uint64_t>(i);
    seq.frames.push_back({t, scene.render(static_cast<double>(t))});
  }
  return seq;
}

}  // namespace fuseflow
