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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "fuseflow/frame_flow.hpp"
#include "fuseflow/parallel.hpp"
#include "fuseflow/reference.hpp"
#include "fuseflow/synth.hpp"

using namespace fuseflow;

namespace
{
ScalarMap image_of(GridShape s, const std::function<double(double, double)> & f)
{
  ScalarMap m(s);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      m(x, y) = f(x, y);
    }
  }
  return m;
}

ScalarMap texture_image(GridShape s, double ox, double oy, std::uint64_t seed = 3)
{
  const BandLimitedTexture tex(seed, 6.0, 24.0, 0.2, 0.8);
  return image_of(s, [&](double x, double y) { return tex(x - ox, y - oy); });
}

// Weighted least-squares fit of c + b.x + x^T A x over the (2r+1)^2
// neighbourhood of (x0, y0), solved by Gaussian elimination.
std::array<double, 6> ls_fit(const ScalarMap & img, int x0, int y0, int poly_n, double sigma)
{
  const int r = poly_n / 2;
  double m[6][7] = {};
  for (int j = -r; j <= r; ++j) {
    for (int i = -r; i <= r; ++i) {
      const double w = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
      const double phi[6] = {1.0, double(i), double(j), double(i * i), double(j * j), double(i * j)};
      const double f = img(x0 + i, y0 + j);
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
          m[a][b] += w * phi[a] * phi[b];
        }
        m[a][6] += w * phi[a] * f;
      }
    }
  }
  for (int c = 0; c < 6; ++c) {
    int p = c;
    for (int r2 = c + 1; r2 < 6; ++r2) {
      if (std::fabs(m[r2][c]) > std::fabs(m[p][c])) {
        p = r2;
      }
    }
    std::swap(m[c], m[p]);
    for (int r2 = 0; r2 < 6; ++r2) {
      if (r2 != c) {
        const double f = m[r2][c] / m[c][c];
        for (int k = c; k < 7; ++k) {
          m[r2][k] -= f * m[c][k];
        }
      }
    }
  }
  std::array<double, 6> out{};
  for (int a = 0; a < 6; ++a) {
    out[a] = m[a][6] / m[a][a];
  }
  return out;  // c, b1, b2, a11, a22, 2*a12
}

double median_of(const FlowField & f, bool take_u, int margin)
{
  std::vector<double> v;
  for (int y = margin; y < f.shape.height - margin; ++y) {
    for (int x = margin; x < f.shape.width - margin; ++x) {
      const auto q = f.shape.index(x, y);
      if (f.valid[q]) {
        v.push_back(take_u ? f.u[q] : f.v[q]);
      }
    }
  }
  REQUIRE(!v.empty());
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}
}  // namespace

TEST_SUITE("frame_flow")
{
  TEST_CASE("expansion of constant, ramp and quadratic images")
  {
    const GridShape s{20, 16};
    const auto c = poly_expansion(ScalarMap(s, 0.7), 7, 1.5);
    const auto ramp = poly_expansion(image_of(s, [](double x, double y) { return 0.3 * x - 0.2 * y; }), 7, 1.5);
    const auto quad = poly_expansion(image_of(s, [](double x, double y) { return x * x + 0.5 * x * y; }), 7, 1.5);
    for (int y = 3; y < s.height - 3; ++y) {
      for (int x = 3; x < s.width - 3; ++x) {
        const auto q = s.index(x, y);
        CHECK(c.c[q] == doctest::Approx(0.7));
        CHECK(c.b1[q] == doctest::Approx(0.0));
        CHECK(c.a11[q] == doctest::Approx(0.0));
        CHECK(ramp.b1[q] == doctest::Approx(0.3));
        CHECK(ramp.b2[q] == doctest::Approx(-0.2));
        CHECK(ramp.a22[q] == doctest::Approx(0.0));
        CHECK(quad.a11[q] == doctest::Approx(1.0));
        CHECK(quad.a12[q] == doctest::Approx(0.25));
        CHECK(quad.a22[q] == doctest::Approx(0.0));
        CHECK(quad.b1[q] == doctest::Approx(2.0 * x + 0.5 * y));
        CHECK(quad.b2[q] == doctest::Approx(0.5 * x));
        CHECK(quad.c[q] == doctest::Approx(x * x + 0.5 * x * y));
      }
    }
    CHECK(c.border == 3);
  }

  TEST_CASE("property: expansion matches a direct least-squares fit")
  {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const GridShape s{16, 14};
      ScalarMap img(s);
      for (double & v : img.values) {
        v = uni(rng);
      }
      const int n = trial % 2 ? 5 : 7;
      const double sigma = trial % 2 ? 1.1 : 1.5;
      const auto p = poly_expansion(img, n, sigma);
      for (int k = 0; k < 5; ++k) {
        const int x = n / 2 + static_cast<int>(rng() % (s.width - 2 * (n / 2)));
        const int y = n / 2 + static_cast<int>(rng() % (s.height - 2 * (n / 2)));
        const auto fit = ls_fit(img, x, y, n, sigma);
        const auto q = s.index(x, y);
        CHECK(p.c[q] == doctest::Approx(fit[0]).epsilon(1e-9));
        CHECK(p.b1[q] == doctest::Approx(fit[1]).epsilon(1e-9));
        CHECK(p.b2[q] == doctest::Approx(fit[2]).epsilon(1e-9));
        CHECK(p.a11[q] == doctest::Approx(fit[3]).epsilon(1e-9));
        CHECK(p.a22[q] == doctest::Approx(fit[4]).epsilon(1e-9));
        CHECK(p.a12[q] == doctest::Approx(0.5 * fit[5]).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("identical expansions give zero flow")
  {
    const auto img = texture_image({32, 24}, 0.0, 0.0);
    const auto p = poly_expansion(img, 7, 1.5);
    const auto f = displacement_step(p, p, uniform_flow(img.shape, 0.0, 0.0), 15, 1e-6);
    for (std::size_t i = 0; i < f.size(); ++i) {
      REQUIRE(f.valid[i]);
      CHECK(f.u[i] == doctest::Approx(0.0));
      CHECK(f.v[i] == doctest::Approx(0.0));
    }
  }

  TEST_CASE("textureless input is invalid everywhere")
  {
    const ScalarMap flat({32, 24}, 0.5);
    FarnebackParams fp;
    const auto f = farneback_flow(flat, flat, fp);
    CHECK(std::count(f.valid.begin(), f.valid.end(), 1) == 0);
  }

  TEST_CASE("recovers a sub-pixel translation and flips sign when swapped")
  {
    const GridShape s{96, 72};
    const auto a = texture_image(s, 0.0, 0.0);
    const auto b = texture_image(s, 1.5, -0.75);
    FarnebackParams fp;
    const auto fwd = farneback_flow(a, b, fp);
    const auto bwd = farneback_flow(b, a, fp);
    CHECK(median_of(fwd, true, 12) == doctest::Approx(1.5).epsilon(0.05));
    CHECK(median_of(fwd, false, 12) == doctest::Approx(-0.75).epsilon(0.08));
    CHECK(median_of(bwd, true, 12) == doctest::Approx(-1.5).epsilon(0.05));
    CHECK(median_of(bwd, false, 12) == doctest::Approx(0.75).epsilon(0.08));
  }

  TEST_CASE("property: single-level flow is shift equivariant away from borders")
  {
    const GridShape big{160, 130};
    const auto a = texture_image(big, 0.0, 0.0, 5);
    const auto b = texture_image(big, 1.0, 0.5, 5);
    FarnebackParams fp;
    fp.pyramid_levels = 1;
    auto crop = [](const ScalarMap & m, int ox, int oy, GridShape s) {
      ScalarMap out(s);
      for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
          out(x, y) = m(x + ox, y + oy);
        }
      }
      return out;
    };
    const GridShape s{130, 110};
    const auto f0 = farneback_flow(crop(a, 0, 0, s), crop(b, 0, 0, s), fp);
    const int margin = 40;
    for (const auto & [ox, oy] : std::vector<std::pair<int, int>>{{7, 3}, {20, 9}, {1, 10}}) {
      const auto f1 = farneback_flow(crop(a, ox, oy, s), crop(b, ox, oy, s), fp);
      for (int y = margin; y < s.height - margin - oy; ++y) {
        for (int x = margin; x < s.width - margin - ox; ++x) {
          const auto q1 = s.index(x, y);
          const auto q0 = s.index(x + ox, y + oy);
          REQUIRE(f0.valid[q0] == f1.valid[q1]);
          CHECK(f0.u[q0] == doctest::Approx(f1.u[q1]).epsilon(1e-9));
          CHECK(f0.v[q0] == doctest::Approx(f1.v[q1]).epsilon(1e-9));
        }
      }
    }
  }

  TEST_CASE("small inputs drop pyramid levels with a warning")
  {
    const auto a = texture_image({20, 20}, 0.0, 0.0);
    FarnebackParams fp;
    fp.pyramid_levels = 3;
    std::vector<std::string> warnings;
    const auto f = farneback_flow(a, a, fp, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("2 levels") != std::string::npos);
    CHECK(f.shape == a.shape);
  }

  TEST_CASE("parameter validation")
  {
    FarnebackParams fp;
    fp.poly_n = 6;
    CHECK_THROWS_AS(fp.validate(), std::invalid_argument);
    fp = {};
    fp.pyr_scale = 1.0;
    CHECK_THROWS_AS(fp.validate(), std::invalid_argument);
    fp = {};
    fp.avg_window = 4;
    CHECK_THROWS_AS(fp.validate(), std::invalid_argument);
    CHECK_THROWS(farneback_flow(ScalarMap({10, 10}), ScalarMap({11, 10}), FarnebackParams{}));
  }

  TEST_CASE("property: kernels match the serial reference and are thread-count independent")
  {
    const auto a = texture_image({61, 47}, 0.0, 0.0);
    const auto b = texture_image({61, 47}, 2.3, 0.4);
    std::mt19937_64 rng(4);
    FlowField prior(a.shape);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    for (std::size_t i = 0; i < prior.size(); ++i) {
      if (rng() % 4) {
        prior.set(i, uni(rng), uni(rng));
      }
    }
    const auto r1 = reference::poly_expansion(a, 7, 1.5);
    const auto r2 = reference::poly_expansion(b, 7, 1.5);
    const auto rd = reference::displacement_step(r1, r2, prior, 15, 1e-6);
    FlowField first;
    for (int threads : {1, 4}) {
      parallel::ThreadScope scope(threads);
      const auto p1 = poly_expansion(a, 7, 1.5);
      const auto p2 = poly_expansion(b, 7, 1.5);
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(p1.a11[i] == doctest::Approx(r1.a11[i]).epsilon(1e-10));
        CHECK(p1.b2[i] == doctest::Approx(r1.b2[i]).epsilon(1e-10));
        CHECK(p2.c[i] == doctest::Approx(r2.c[i]).epsilon(1e-10));
      }
      const auto d = displacement_step(p1, p2, prior, 15, 1e-6);
      for (std::size_t i = 0; i < d.size(); ++i) {
        REQUIRE(d.valid[i] == rd.valid[i]);
        if (d.valid[i]) {
          CHECK(d.u[i] == doctest::Approx(rd.u[i]).epsilon(1e-8));
          CHECK(d.v[i] == doctest::Approx(rd.v[i]).epsilon(1e-8));
        }
      }
      const auto f = farneback_flow(a, b, FarnebackParams{});
      if (threads == 1) {
        first = f;
      } else {
        CHECK(f.u == first.u);
        CHECK(f.v == first.v);
        CHECK(f.valid == first.valid);
      }
    }
  }
}
