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

#include "fuseflow/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fuseflow::reference
{
namespace
{
// Solves m x = rhs in place (Gaussian elimination, partial pivoting).
template <int N>
void solve(double m[N][N], double rhs[N])
{
  for (int col = 0; col < N; ++col) {
    int piv = col;
    for (int r = col + 1; r < N; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) {
        piv = r;
      }
    }
    std::swap(m[col], m[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (int r = col + 1; r < N; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < N; ++k) {
        m[r][k] -= f * m[col][k];
      }
      rhs[r] -= f * rhs[col];
    }
  }
  for (int r = N - 1; r >= 0; --r) {
    double acc = rhs[r];
    for (int k = r + 1; k < N; ++k) {
      acc -= m[r][k] * rhs[k];
    }
    rhs[r] = acc / m[r][r];
  }
}

int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }
}  // namespace

PolyExpField poly_expansion(const ScalarMap & frame, int poly_n, double poly_sigma)
{
  const GridShape s = frame.shape;
  const int r = poly_n / 2;
  PolyExpField p(s);
  p.border = r;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      double m[6][6] = {};
      double rhs[6] = {};
      for (int j = -r; j <= r; ++j) {
        for (int i = -r; i <= r; ++i) {
          const double w = std::exp(-(i * i + j * j) / (2.0 * poly_sigma * poly_sigma));
          const double f = frame(clampi(x + i, 0, s.width - 1), clampi(y + j, 0, s.height - 1));
          const double phi[6] = {1.0, double(i), double(j), double(i * i), double(j * j),
                                 double(i * j)};
          for (int a = 0; a < 6; ++a) {
            rhs[a] += w * phi[a] * f;
            for (int b = 0; b < 6; ++b) {
              m[a][b] += w * phi[a] * phi[b];
            }
          }
        }
      }
      solve<6>(m, rhs);
      const std::size_t q = s.index(x, y);
      p.c[q] = rhs[0];
      p.b1[q] = rhs[1];
      p.b2[q] = rhs[2];
      p.a11[q] = rhs[3];
      p.a22[q] = rhs[4];
      p.a12[q] = 0.5 * rhs[5];
    }
  }
  return p;
}

FlowField displacement_step(const PolyExpField & p1, const PolyExpField & p2,
                            const FlowField & prior, int avg_window, double det_eps)
{
  const GridShape s = p1.shape;
  const int r = avg_window / 2;
  FlowField out(s);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      double g11 = 0, g12 = 0, g22 = 0, h1 = 0, h2 = 0;
      for (int j = -r; j <= r; ++j) {
        for (int i = -r; i <= r; ++i) {
          const int xx = clampi(x + i, 0, s.width - 1);
          const int yy = clampi(y + j, 0, s.height - 1);
          const std::size_t q = s.index(xx, yy);
          const double du = prior.valid[q] ? std::nearbyint(prior.u[q]) : 0.0;
          const double dv = prior.valid[q] ? std::nearbyint(prior.v[q]) : 0.0;
          const std::size_t q2 = s.index(clampi(xx + static_cast<int>(du), 0, s.width - 1),
                                         clampi(yy + static_cast<int>(dv), 0, s.height - 1));
          const double a[2][2] = {{0.5 * (p1.a11[q] + p2.a11[q2]), 0.5 * (p1.a12[q] + p2.a12[q2])},
                                  {0.5 * (p1.a12[q] + p2.a12[q2]), 0.5 * (p1.a22[q] + p2.a22[q2])}};
          const double db[2] = {-0.5 * (p2.b1[q2] - p1.b1[q]) + a[0][0] * du + a[0][1] * dv,
                                -0.5 * (p2.b2[q2] - p1.b2[q]) + a[1][0] * du + a[1][1] * dv};
          // A^T A and A^T db written out from the matrix entries.
          g11 += a[0][0] * a[0][0] + a[1][0] * a[1][0];
          g12 += a[0][0] * a[0][1] + a[1][0] * a[1][1];
          g22 += a[0][1] * a[0][1] + a[1][1] * a[1][1];
          h1 += a[0][0] * db[0] + a[1][0] * db[1];
          h2 += a[0][1] * db[0] + a[1][1] * db[1];
        }
      }
      const double det = g11 * g22 - g12 * g12;
      const std::size_t q = s.index(x, y);
      if (det > det_eps) {
        double m[2][2] = {{g11, g12}, {g12, g22}};
        double rhs[2] = {h1, h2};
        solve<2>(m, rhs);
        out.set(q, rhs[0], rhs[1]);
      }
    }
  }
  return out;
}

ScalarMap smooth_avg(const ScalarMap & d, const BinaryMap & active, int k)
{
  const GridShape s = d.shape;
  const int r = k / 2;
  ScalarMap out(s, 0.0);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (!active(x, y)) {
        continue;
      }
      double acc = 0.0;
      int cnt = 0;
      for (int yy = std::max(0, y - r); yy <= std::min(s.height - 1, y + r); ++yy) {
        for (int xx = std::max(0, x - r); xx <= std::min(s.width - 1, x + r); ++xx) {
          if (active(xx, yy)) {
            acc += d(xx, yy);
            ++cnt;
          }
        }
      }
      out(x, y) = acc / cnt;
    }
  }
  return out;
}

void accumulate(ActivationState & state, std::span<const Event> events)
{
  for (const auto & e : events) {
    const std::size_t q = state.shape.index(e.x, e.y);
    if (e.t < state.last_t[q]) {
      throw DataError("reference::accumulate: event older than its pixel's last update");
    }
    state.act[q] = state.act[q] * std::exp(-static_cast<double>(e.t - state.last_t[q]) /
                                           state.tau_us) + 1.0;
    state.last_t[q] = e.t;
    state.latest_t = std::max(state.latest_t, e.t);
  }
}

double aee(const FlowField & flow, const FlowField & gt)
{
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < flow.shape.height; ++y) {
    for (int x = 0; x < flow.shape.width; ++x) {
      const std::size_t q = flow.shape.index(x, y);
      if (flow.valid[q] && gt.valid[q]) {
        const double du = flow.u[q] - gt.u[q];
        const double dv = flow.v[q] - gt.v[q];
        sum += std::sqrt(du * du + dv * dv);
        ++n;
      }
    }
  }
  if (n == 0) {
    throw DataError("reference::aee: empty evaluation set");
  }
  return sum / static_cast<double>(n);
}

}  // namespace fuseflow::reference
