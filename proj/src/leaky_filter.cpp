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

#include "fuseflow/leaky_filter.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fuseflow/parallel.hpp"

namespace fuseflow
{
void LeakyParams::validate() const
{
  if (!(tau_us > 0.0) || !std::isfinite(tau_us)) {
    throw std::invalid_argument("leaky: tau must be positive");
  }
  if (smooth_k < 3 || smooth_k % 2 == 0) {
    throw std::invalid_argument("leaky: smooth_k must be odd and >= 3");
  }
  if (!(act_threshold > 0.0)) {
    throw std::invalid_argument("leaky: act_threshold must be positive");
  }
  if (!std::isfinite(gain) || gain == 0.0) {
    throw std::invalid_argument("leaky: gain must be finite and nonzero");
  }
}

ActivationState::ActivationState(GridShape s, double tau)
: shape(s), act(s.size(), 0.0), last_t(s.size(), 0), tau_us(tau)
{
  if (!(tau > 0.0)) {
    throw std::invalid_argument("leaky: tau must be positive");
  }
}

void accumulate(ActivationState & state, std::span<const Event> events)
{
  if (events.empty()) {
    return;
  }
  // Validate before touching the state so a corrupt slice leaves it intact.
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto & e = events[i];
    if (!state.shape.contains(e.x, e.y)) {
      throw DataError("accumulate: event " + std::to_string(i) + " outside the grid");
    }
    if (i > 0 && e.t < events[i - 1].t) {
      throw DataError("accumulate: event " + std::to_string(i) + " is out of time order");
    }
    if (e.t < state.last_t[state.shape.index(e.x, e.y)]) {
      throw DataError("accumulate: event " + std::to_string(i) + " at t=" + std::to_string(e.t) +
                      " is older than its pixel's last update");
    }
  }

  const double inv_tau = 1.0 / state.tau_us;
  const int height = state.shape.height;
  // Each thread owns a band of rows and replays the whole slice, so updates
  // at one pixel keep event order.
#pragma omp parallel
  {
    const auto [y0, y1] = parallel::row_band(height);
    for (const auto & e : events) {
      if (e.y < y0 || e.y >= y1) {
        continue;
      }
      const std::size_t q = state.shape.index(e.x, e.y);
      const double dt = static_cast<double>(e.t - state.last_t[q]);
      state.act[q] = state.act[q] * std::exp(-dt * inv_tau) + 1.0;
      state.last_t[q] = e.t;
    }
  }
  if (events.back().t > state.latest_t) {
    state.latest_t = events.back().t;
  }
}

ScalarMap snapshot(const ActivationState & state, std::uint64_t t_query)
{
  if (t_query < state.latest_t) {
    throw DataError("snapshot: query time " + std::to_string(t_query) +
                    " precedes the latest ingested event " + std::to_string(state.latest_t));
  }
  ScalarMap out(state.shape, 0.0);
  const double inv_tau = 1.0 / state.tau_us;
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double a = state.act[i];
    if (a != 0.0) {
      out[i] = a * std::exp(-static_cast<double>(t_query - state.last_t[i]) * inv_tau);
    }
  }
  return out;
}

DirectionalDiff directional_diff(const ScalarMap & snap)
{
  const GridShape s = snap.shape;
  DirectionalDiff d{ScalarMap(s, 0.0), ScalarMap(s, 0.0), BinaryMap(s, 0)};
#pragma omp parallel for schedule(static)
  for (int y = 1; y < s.height - 1; ++y) {
    for (int x = 1; x < s.width - 1; ++x) {
      d.dx(x, y) = (snap(x + 1, y) - snap(x - 1, y)) * 0.5;
      d.dy(x, y) = (snap(x, y + 1) - snap(x, y - 1)) * 0.5;
      d.valid(x, y) = 1;
    }
  }
  return d;
}

ScalarMap smooth_avg(const ScalarMap & d, const BinaryMap & active, int k, BinaryMap * out_active)
{
  if (k < 3 || k % 2 == 0) {
    throw std::invalid_argument("smooth_avg: k must be odd and >= 3");
  }
  require_same_shape(d.shape, active.shape, "smooth_avg");
  const GridShape s = d.shape;
  const int r = k / 2;

  // Column pass then row pass over masked values and counts. Sums pair the
  // taps symmetrically around the centre (c + (l1 + r1) + (l2 + r2) ...), so
  // the result is independent of thread count and exactly mirror-symmetric.
  std::vector<double> col_sum(s.size(), 0.0);
  std::vector<int> col_cnt(s.size(), 0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      auto val = [&](int yy) { return (yy >= 0 && yy < s.height && active(x, yy)) ? d(x, yy) : 0.0; };
      auto cnt = [&](int yy) { return (yy >= 0 && yy < s.height && active(x, yy)) ? 1 : 0; };
      double acc = val(y);
      int n = cnt(y);
      for (int j = 1; j <= r; ++j) {
        acc += val(y - j) + val(y + j);
        n += cnt(y - j) + cnt(y + j);
      }
      col_sum[s.index(x, y)] = acc;
      col_cnt[s.index(x, y)] = n;
    }
  }

  ScalarMap out(s, 0.0);
  BinaryMap produced(s, 0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (!active(x, y)) {
        continue;
      }
      auto sum_at = [&](int xx) { return (xx >= 0 && xx < s.width) ? col_sum[s.index(xx, y)] : 0.0; };
      auto cnt_at = [&](int xx) { return (xx >= 0 && xx < s.width) ? col_cnt[s.index(xx, y)] : 0; };
      double acc = sum_at(x);
      int cnt = cnt_at(x);
      for (int j = 1; j <= r; ++j) {
        acc += sum_at(x - j) + sum_at(x + j);
        cnt += cnt_at(x - j) + cnt_at(x + j);
      }
      if (cnt > 0) {
        out(x, y) = acc / cnt;
        produced(x, y) = 1;
      }
    }
  }
  if (out_active) {
    *out_active = std::move(produced);
  }
  return out;
}

LeakyResponse leaky_response(ActivationState & state, std::span<const Event> slice,
                             std::uint64_t t1, const LeakyParams & params)
{
  params.validate();
  accumulate(state, slice);
  LeakyResponse r;
  r.snap = snapshot(state, t1);
  const auto diff = directional_diff(r.snap);
  r.active = BinaryMap(state.shape, 0);
  for (std::size_t i = 0; i < r.active.size(); ++i) {
    r.active[i] = (diff.valid[i] && r.snap[i] >= params.act_threshold) ? 1 : 0;
  }
  r.dx = smooth_avg(diff.dx, r.active, params.smooth_k, &r.valid);
  r.dy = smooth_avg(diff.dy, r.active, params.smooth_k);
  r.active_count = r.valid.values.size() - std::count(r.valid.values.begin(), r.valid.values.end(), 0);
  return r;
}

FlowField response_to_flow(const LeakyResponse & r, const LeakyParams & params,
                           std::uint64_t dt_frame_us)
{
  const double scale = params.gain * static_cast<double>(dt_frame_us) * 1e-6;
  FlowField f(r.dx.shape);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (r.valid[i]) {
      f.set(i, scale * r.dx[i], scale * r.dy[i]);
    }
  }
  return f;
}

FlowField event_flow(ActivationState & state, std::span<const Event> slice, std::uint64_t t0,
                     std::uint64_t t1, const LeakyParams & params, std::uint64_t dt_frame_us)
{
  if (t1 <= t0) {
    throw std::invalid_argument("event_flow: empty time window");
  }
  for (const auto & e : slice) {
    if (e.t < t0 || e.t >= t1) {
      throw DataError("event_flow: event at t=" + std::to_string(e.t) + " outside [" +
                      std::to_string(t0) + ", " + std::to_string(t1) + ")");
    }
  }
  return response_to_flow(leaky_response(state, slice, t1, params), params, dt_frame_us);
}

}  // namespace fuseflow
