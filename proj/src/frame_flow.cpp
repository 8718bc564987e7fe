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

#include "fuseflow/frame_flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fuseflow
{
void FarnebackParams::validate() const
{
  if (pyramid_levels < 1) {
    throw std::invalid_argument("farneback: pyramid_levels must be >= 1");
  }
  if (!(pyr_scale > 0.0 && pyr_scale < 1.0)) {
    throw std::invalid_argument("farneback: pyr_scale must lie in (0, 1)");
  }
  if (poly_n < 3 || poly_n % 2 == 0) {
    throw std::invalid_argument("farneback: poly_n must be odd and >= 3");
  }
  if (!(poly_sigma > 0.0)) {
    throw std::invalid_argument("farneback: poly_sigma must be positive");
  }
  if (avg_window < 1 || avg_window % 2 == 0) {
    throw std::invalid_argument("farneback: avg_window must be odd and positive");
  }
  if (iterations < 1) {
    throw std::invalid_argument("farneback: iterations must be >= 1");
  }
  if (!(det_eps > 0.0)) {
    throw std::invalid_argument("farneback: det_eps must be positive");
  }
}

PolyExpField::PolyExpField(GridShape s)
: shape(s),
  a11(s.size(), 0.0),
  a12(s.size(), 0.0),
  a22(s.size(), 0.0),
  b1(s.size(), 0.0),
  b2(s.size(), 0.0),
  c(s.size(), 0.0)
{
}

namespace
{
std::vector<double> gaussian_taps(int radius, double sigma)
{
  std::vector<double> g(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k) {
    g[k + radius] = std::exp(-(k * k) / (2.0 * sigma * sigma));
  }
  return g;
}

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Gauss-Jordan inverse with partial pivoting.
template <std::size_t N>
std::array<double, N * N> invert(std::array<double, N * N> m)
{
  std::array<double, N * N> inv{};
  for (std::size_t i = 0; i < N; ++i) {
    inv[i * N + i] = 1.0;
  }
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r) {
      if (std::fabs(m[r * N + col]) > std::fabs(m[piv * N + col])) {
        piv = r;
      }
    }
    if (m[piv * N + col] == 0.0) {
      throw std::runtime_error("singular Gram matrix");
    }
    for (std::size_t k = 0; k < N; ++k) {
      std::swap(m[col * N + k], m[piv * N + k]);
      std::swap(inv[col * N + k], inv[piv * N + k]);
    }
    const double d = 1.0 / m[col * N + col];
    for (std::size_t k = 0; k < N; ++k) {
      m[col * N + k] *= d;
      inv[col * N + k] *= d;
    }
    for (std::size_t r = 0; r < N; ++r) {
      if (r == col) {
        continue;
      }
      const double f = m[r * N + col];
      if (f == 0.0) {
        continue;
      }
      for (std::size_t k = 0; k < N; ++k) {
        m[r * N + k] -= f * m[col * N + k];
        inv[r * N + k] -= f * inv[col * N + k];
      }
    }
  }
  return inv;
}
}  // namespace

std::array<double, 36> poly_inverse_gram(int poly_n, double poly_sigma)
{
  const int r = poly_n / 2;
  const auto g = gaussian_taps(r, poly_sigma);
  std::array<double, 36> gram{};
  for (int j = -r; j <= r; ++j) {
    for (int i = -r; i <= r; ++i) {
      const double w = g[i + r] * g[j + r];
      const double x = i, y = j;
      const double phi[6] = {1.0, x, y, x * x, y * y, x * y};
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
          gram[a * 6 + b] += w * phi[a] * phi[b];
        }
      }
    }
  }
  return invert<6>(gram);
}

PolyExpField poly_expansion(const ScalarMap & frame, int poly_n, double poly_sigma)
{
  if (poly_n < 3 || poly_n % 2 == 0 || !(poly_sigma > 0.0)) {
    throw std::invalid_argument("poly_expansion: poly_n must be odd >= 3 and sigma positive");
  }
  const GridShape s = frame.shape;
  const int r = poly_n / 2;
  const auto g = gaussian_taps(r, poly_sigma);
  const auto ginv = poly_inverse_gram(poly_n, poly_sigma);

  // Vertical moments: sum_j g(j) j^k f(x, y + j), k = 0..2.
  std::vector<double> t0(s.size()), t1(s.size()), t2(s.size());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      double m0 = 0.0, m1 = 0.0, m2 = 0.0;
      for (int j = -r; j <= r; ++j) {
        const double f = g[j + r] * frame(x, clampi(y + j, 0, s.height - 1));
        m0 += f;
        m1 += j * f;
        m2 += j * j * f;
      }
      const std::size_t q = s.index(x, y);
      t0[q] = m0;
      t1[q] = m1;
      t2[q] = m2;
    }
  }

  PolyExpField p(s);
  p.border = r;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      double m1 = 0.0, mx = 0.0, mxx = 0.0, my = 0.0, mxy = 0.0, myy = 0.0;
      for (int i = -r; i <= r; ++i) {
        const std::size_t q = s.index(clampi(x + i, 0, s.width - 1), y);
        const double gi = g[i + r];
        m1 += gi * t0[q];
        mx += gi * i * t0[q];
        mxx += gi * i * i * t0[q];
        my += gi * t1[q];
        mxy += gi * i * t1[q];
        myy += gi * t2[q];
      }
      const double mom[6] = {m1, mx, my, mxx, myy, mxy};
      double coef[6];
      for (int a = 0; a < 6; ++a) {
        double acc = 0.0;
        for (int b = 0; b < 6; ++b) {
          acc += ginv[a * 6 + b] * mom[b];
        }
        coef[a] = acc;
      }
      const std::size_t q = s.index(x, y);
      p.c[q] = coef[0];
      p.b1[q] = coef[1];
      p.b2[q] = coef[2];
      p.a11[q] = coef[3];
      p.a22[q] = coef[4];
      p.a12[q] = 0.5 * coef[5];
    }
  }
  return p;
}

PolyExpField poly_expansion(const ScalarMap & frame, const FarnebackParams & params)
{
  return poly_expansion(frame, params.poly_n, params.poly_sigma);
}

FlowField displacement_step(const PolyExpField & p1, const PolyExpField & p2,
                            const FlowField & prior, int avg_window, double det_eps)
{
  require_same_shape(p1.shape, p2.shape, "displacement_step");
  require_same_shape(p1.shape, prior.shape, "displacement_step prior");
  if (avg_window < 1 || avg_window % 2 == 0) {
    throw std::invalid_argument("displacement_step: avg_window must be odd and positive");
  }
  const GridShape s = p1.shape;
  const int r = avg_window / 2;

  // Per-pixel normal-equation terms: A^T A (symmetric, 3 values), A^T db.
  constexpr int kTerms = 5;
  std::vector<std::array<double, kTerms>> terms(s.size());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const std::size_t q = s.index(x, y);
      const double pu = prior.valid[q] ? prior.u[q] : 0.0;
      const double pv = prior.valid[q] ? prior.v[q] : 0.0;
      const double du = std::nearbyint(pu);
      const double dv = std::nearbyint(pv);
      const int x2 = clampi(x + static_cast<int>(du), 0, s.width - 1);
      const int y2 = clampi(y + static_cast<int>(dv), 0, s.height - 1);
      const std::size_t q2 = s.index(x2, y2);

      const double a11 = 0.5 * (p1.a11[q] + p2.a11[q2]);
      const double a12 = 0.5 * (p1.a12[q] + p2.a12[q2]);
      const double a22 = 0.5 * (p1.a22[q] + p2.a22[q2]);
      const double db1 = -0.5 * (p2.b1[q2] - p1.b1[q]) + a11 * du + a12 * dv;
      const double db2 = -0.5 * (p2.b2[q2] - p1.b2[q]) + a12 * du + a22 * dv;

      terms[q] = {
        a11 * a11 + a12 * a12,
        a12 * (a11 + a22),
        a12 * a12 + a22 * a22,
        a11 * db1 + a12 * db2,
        a12 * db1 + a22 * db2,
      };
    }
  }

  // Uniform box sum, column pass then row pass, replicate padding.
  std::vector<std::array<double, kTerms>> col(s.size());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      std::array<double, kTerms> acc{};
      for (int j = -r; j <= r; ++j) {
        const auto & t = terms[s.index(x, clampi(y + j, 0, s.height - 1))];
        for (int k = 0; k < kTerms; ++k) {
          acc[k] += t[k];
        }
      }
      col[s.index(x, y)] = acc;
    }
  }

  FlowField out(s);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      std::array<double, kTerms> acc{};
      for (int i = -r; i <= r; ++i) {
        const auto & t = col[s.index(clampi(x + i, 0, s.width - 1), y)];
        for (int k = 0; k < kTerms; ++k) {
          acc[k] += t[k];
        }
      }
      const double g11 = acc[0], g12 = acc[1], g22 = acc[2];
      const double det = g11 * g22 - g12 * g12;
      const std::size_t q = s.index(x, y);
      if (det > det_eps) {
        out.set(q, (g22 * acc[3] - g12 * acc[4]) / det, (g11 * acc[4] - g12 * acc[3]) / det);
      } else {
        out.invalidate(q);
      }
    }
  }
  return out;
}

ScalarMap gaussian_blur(const ScalarMap & img, double sigma)
{
  const GridShape s = img.shape;
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  auto g = gaussian_taps(r, sigma);
  double norm = 0.0;
  for (double w : g) {
    norm += w;
  }
  for (double & w : g) {
    w /= norm;
  }
  ScalarMap tmp(s), out(s);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      double acc = 0.0;
      for (int j = -r; j <= r; ++j) {
        acc += g[j + r] * img(x, clampi(y + j, 0, s.height - 1));
      }
      tmp(x, y) = acc;
    }
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += g[i + r] * tmp(clampi(x + i, 0, s.width - 1), y);
      }
      out(x, y) = acc;
    }
  }
  return out;
}

ScalarMap resize_bilinear(const ScalarMap & img, GridShape target)
{
  const GridShape s = img.shape;
  ScalarMap out(target);
  const double sx = static_cast<double>(s.width) / target.width;
  const double sy = static_cast<double>(s.height) / target.height;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < target.height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, s.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, s.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < target.width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, s.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, s.width - 1);
      const double wx = fx - x0;
      const double top = img(x0, y0) + wx * (img(x1, y0) - img(x0, y0));
      const double bot = img(x0, y1) + wx * (img(x1, y1) - img(x0, y1));
      out(x, y) = top + wy * (bot - top);
    }
  }
  return out;
}

namespace
{
// Upsample a dense prior to the finer level and rescale vectors to its pixels.
FlowField upscale_prior(const FlowField & prior, GridShape target)
{
  ScalarMap u(prior.shape), v(prior.shape);
  for (std::size_t i = 0; i < prior.size(); ++i) {
    u[i] = prior.valid[i] ? prior.u[i] : 0.0;
    v[i] = prior.valid[i] ? prior.v[i] : 0.0;
  }
  const auto uu = resize_bilinear(u, target);
  const auto vv = resize_bilinear(v, target);
  const double kx = static_cast<double>(target.width) / prior.shape.width;
  const double ky = static_cast<double>(target.height) / prior.shape.height;
  FlowField out(target);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.set(i, uu[i] * kx, vv[i] * ky);
  }
  return out;
}
}  // namespace

FlowField farneback_flow(const ScalarMap & f1, const ScalarMap & f2,
                         const FarnebackParams & params, std::vector<std::string> * warnings)
{
  params.validate();
  require_same_shape(f1.shape, f2.shape, "farneback_flow");

  std::vector<ScalarMap> pyr1{f1}, pyr2{f2};
  const double blur_sigma = 0.5 / params.pyr_scale;
  for (int level = 1; level < params.pyramid_levels; ++level) {
    const GridShape prev = pyr1.back().shape;
    const GridShape next{static_cast<int>(std::lround(prev.width * params.pyr_scale)),
                         static_cast<int>(std::lround(prev.height * params.pyr_scale))};
    if (next.width < 8 || next.height < 8) {
      if (warnings) {
        warnings->push_back("farneback: pyramid reduced to " + std::to_string(level) +
                            " levels, coarser level would be below 8x8");
      }
      break;
    }
    pyr1.push_back(resize_bilinear(gaussian_blur(pyr1.back(), blur_sigma), next));
    pyr2.push_back(resize_bilinear(gaussian_blur(pyr2.back(), blur_sigma), next));
  }

  FlowField prior = uniform_flow(pyr1.back().shape, 0.0, 0.0);
  FlowField flow;
  for (int level = static_cast<int>(pyr1.size()) - 1; level >= 0; --level) {
    if (!(prior.shape == pyr1[level].shape)) {
      prior = upscale_prior(prior, pyr1[level].shape);
    }
    const auto p1 = poly_expansion(pyr1[level], params);
    const auto p2 = poly_expansion(pyr2[level], params);
    for (int it = 0; it < params.iterations; ++it) {
      flow = displacement_step(p1, p2, prior, params.avg_window, params.det_eps);
      for (std::size_t i = 0; i < flow.size(); ++i) {
        if (flow.valid[i]) {
          prior.set(i, flow.u[i], flow.v[i]);
        }
      }
    }
  }
  return flow;
}

}  // namespace fuseflow
