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

// Acceptance checks A1-A10. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "fuseflow/config.hpp"
#include "fuseflow/frame_flow.hpp"
#include "fuseflow/fusion.hpp"
#include "fuseflow/harness.hpp"
#include "fuseflow/io.hpp"
#include "fuseflow/synth.hpp"

using namespace fuseflow;
namespace fs = std::filesystem;

namespace
{
struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char * f, double a, double b = 0, double c = 0, double d = 0)
{
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

std::map<std::string, double> read_baseline()
{
  std::map<std::string, double> out;
  std::ifstream in(FUSEFLOW_BASELINE);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos) {
      continue;
    }
    auto key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    try {
      out[key] = std::stod(line.substr(eq + 1));
    } catch (const std::exception &) {
    }
  }
  return out;
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Standard-scene dataset and run configuration, as the CLI defaults build them.
struct Standard
{
  Config config;
  Dataset data;
  RunConfig run;
};

const Standard & standard()
{
  static const Standard s = [] {
    Standard st;
    st.data = make_synthetic_dataset(st.config.scene(), st.config.dvs());
    st.run = st.config.run();
    return st;
  }();
  return s;
}

SceneConfig calibration_edge()
{
  SceneConfig edge = Config().scene();
  edge.kind = SceneKind::translating_edge;
  edge.velocity = {100.0, 0.0};
  return edge;
}

// ---------------------------------------------------------------------------

Outcome a1()
{
  FusionParams p;
  bool ok = true;
  for (int f = 0; f <= 1; ++f) {
    for (int e = 0; e <= 1; ++e) {
      FusionState st({1, 1});
      ConditionFlags flags{BinaryMap({1, 1}, static_cast<std::uint8_t>(f)),
                           BinaryMap({1, 1}, static_cast<std::uint8_t>(e))};
      update_confidence(st, flags);
      ok = ok && st.confidence[0] == ((f && e) ? 1.0 : 0.0);
    }
  }
  FusionState st({1, 1});
  ConditionFlags hit{BinaryMap({1, 1}, 1), BinaryMap({1, 1}, 1)};
  for (int i = 0; i < 3; ++i) {
    update_confidence(st, hit);
  }
  ok = ok && st.confidence[0] == 6.0;
  return {ok, fmt("truth table ok, confidence after 3 hits = %g", st.confidence[0])};
}

Outcome a2()
{
  const GridShape s{128, 128};
  const BandLimitedTexture tex(1, 6.0, 24.0, 0.2, 0.8);
  ScalarMap f1(s), f2(s);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      f1(x, y) = tex(x, y);
      f2(x, y) = tex(x - 1.25, y + 0.75);
    }
  }
  const auto flow = farneback_flow(f1, f2, FarnebackParams{});
  const int margin = 16;
  double sum = 0.0;
  std::size_t n = 0, invalid = 0;
  for (int y = margin; y < s.height - margin; ++y) {
    for (int x = margin; x < s.width - margin; ++x) {
      const auto q = s.index(x, y);
      if (!flow.valid[q]) {
        ++invalid;
        continue;
      }
      sum += std::hypot(flow.u[q] - 1.25, flow.v[q] + 0.75);
      ++n;
    }
  }
  const double ee = n ? sum / n : 1e9;
  return {n > 0 && invalid == 0 && ee < 0.15,
          fmt("interior mean EE %.4f px over %g px (%g invalid), bound 0.15", ee,
              static_cast<double>(n), static_cast<double>(invalid))};
}

Outcome a3()
{
  const GridShape s{40, 32};
  // f = c + b.x + x^T A x about the origin.
  const double c = 0.3, b1 = 0.02, b2 = -0.01, a11 = 0.004, a12 = -0.0015, a22 = 0.0025;
  ScalarMap img(s);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      img(x, y) = c + b1 * x + b2 * y + a11 * x * x + 2 * a12 * x * y + a22 * y * y;
    }
  }
  const FarnebackParams fp;
  const auto p = poly_expansion(img, fp);
  double worst = 0.0;
  const int r = fp.poly_n / 2;
  for (int y = r; y < s.height - r; ++y) {
    for (int x = r; x < s.width - r; ++x) {
      const auto q = s.index(x, y);
      // Local coefficients at (x, y): A unchanged, b = b0 + 2 A x0, c = f(x0).
      const double lb1 = b1 + 2 * (a11 * x + a12 * y);
      const double lb2 = b2 + 2 * (a12 * x + a22 * y);
      worst = std::max({worst, std::fabs(p.a11[q] - a11), std::fabs(p.a12[q] - a12),
                        std::fabs(p.a22[q] - a22), std::fabs(p.b1[q] - lb1),
                        std::fabs(p.b2[q] - lb2), std::fabs(p.c[q] - img(x, y))});
    }
  }
  return {worst <= 1e-6, fmt("max coefficient error %.3g, bound 1e-6", worst)};
}

struct DirectionStats
{
  double median_angle_deg = 180.0;
  double sign_fraction = 0.0;
  std::size_t pixels = 0;
};

DirectionStats direction_stats(double vx, double gain)
{
  auto edge = calibration_edge();
  edge.velocity = {vx, 0.0};
  const auto data = make_synthetic_dataset(edge, Config().dvs());
  RunConfig rc = Config().run();
  rc.leaky.gain = gain;
  const auto trace = trace_pipeline(data, rc);
  const int margin = rc.leaky.smooth_k / 2 + 1;
  std::vector<double> angles;
  std::size_t sign_ok = 0;
  for (const auto & s : trace.slices) {
    if (!s.gt) {
      continue;
    }
    const auto & f = s.event_flow;
    const auto & g = *s.gt;
    for (int y = margin; y < trace.shape.height - margin; ++y) {
      for (int x = margin; x < trace.shape.width - margin; ++x) {
        const auto q = trace.shape.index(x, y);
        if (!f.valid[q] || !g.valid[q]) {
          continue;
        }
        const double a = std::atan2(f.v[q], f.u[q]) - std::atan2(g.v[q], g.u[q]);
        angles.push_back(std::fabs(std::remainder(a, 2 * std::numbers::pi)) * 180.0 /
                         std::numbers::pi);
        const bool x_dominant = std::fabs(g.u[q]) >= std::fabs(g.v[q]);
        const double fe = x_dominant ? f.u[q] : f.v[q];
        const double ge = x_dominant ? g.u[q] : g.v[q];
        sign_ok += (fe > 0) == (ge > 0) && fe != 0.0;
      }
    }
  }
  DirectionStats st;
  st.pixels = angles.size();
  if (!angles.empty()) {
    std::nth_element(angles.begin(), angles.begin() + angles.size() / 2, angles.end());
    st.median_angle_deg = angles[angles.size() / 2];
    st.sign_fraction = static_cast<double>(sign_ok) / angles.size();
  }
  return st;
}

Outcome a4()
{
  const auto base = read_baseline();
  if (!base.count("a4.max_median_angle_deg") || !base.count("a4.min_sign_fraction")) {
    return {false, std::string("baseline thresholds missing from ") + FUSEFLOW_BASELINE};
  }
  const double max_angle = base.at("a4.max_median_angle_deg");
  const double min_sign = base.at("a4.min_sign_fraction");
  const double gain = calibrate_gain(Config().leaky(), calibration_edge(), Config().dvs());
  const auto fwd = direction_stats(100.0, gain);
  const auto mir = direction_stats(-100.0, gain);
  const bool ok = fwd.pixels > 0 && fwd.median_angle_deg <= max_angle &&
                  fwd.sign_fraction >= min_sign && mir.pixels == fwd.pixels &&
                  std::fabs(mir.median_angle_deg - fwd.median_angle_deg) < 1e-6 &&
                  std::fabs(mir.sign_fraction - fwd.sign_fraction) < 1e-9;
  return {ok, fmt("median angle %.2f deg (<= %g), sign %.3f (>= %g)", fwd.median_angle_deg,
                  max_angle, fwd.sign_fraction, min_sign) +
                fmt("; mirrored %.2f deg, %.3f", mir.median_angle_deg, mir.sign_fraction) +
                fmt(", %g px, gain %.2f", static_cast<double>(fwd.pixels), gain)};
}

const std::vector<double> kGrid{0.5, 1.0, 2.0, 4.0, 8.0};

Outcome a5()
{
  const auto & st = standard();
  const auto trace = trace_pipeline(st.data, st.run);
  const auto pts = threshold_sweep(trace, st.run, kGrid, kGrid);
  const std::size_t n = kGrid.size();
  auto ep = [&](std::size_t i, std::size_t j) { return pts[i * n + j].summary.mean_event_percent; };
  int violations = 0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      violations += ep(i, j) < ep(i + 1, j);  // lower thresh_farneback, not lower percent
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j + 1 < n; ++j) {
      violations += ep(i, j + 1) < ep(i, j);
    }
  }
  return {violations == 0, fmt("%g monotonicity violations; event %% spans %.3f .. %.3f",
                               violations, ep(n - 1, 0), ep(0, n - 1))};
}

// Calibration: gain on the edge scene, then thresholds minimizing fused AEE at N=4.
RunConfig calibrated_run()
{
  const auto & st = standard();
  RunConfig rc = st.run;
  rc.leaky.gain = calibrate_gain(rc.leaky, calibration_edge(), st.config.dvs());
  rc.rate_multiplier = 4;
  const auto trace = trace_pipeline(st.data, rc);
  const auto best = calibrate_thresholds(trace, rc, kGrid, kGrid);
  rc.fusion.thresh_farneback = best.thresh_farneback;
  rc.fusion.thresh_leakycnn = best.thresh_leakycnn;
  return rc;
}

Outcome a6()
{
  const auto rc = calibrated_run();
  const auto pts = rate_sweep(standard().data, rc, {1, 2, 4, 8});
  bool mono = true;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    mono = mono && pts[i].summary.mean_event_percent >= pts[i - 1].summary.mean_event_percent;
  }
  const double ratio = pts[2].summary.mean_aee_fused / pts[0].summary.mean_aee_fused;
  std::string eps;
  for (const auto & p : pts) {
    eps += fmt("%.3f ", p.summary.mean_event_percent);
  }
  return {mono && ratio <= 1.35,
          "event % by N=1,2,4,8: " + eps +
            fmt("; AEE(N=4)/AEE(N=1) = %.3f (<= 1.35); thresholds %g/%g", ratio,
                rc.fusion.thresh_farneback, rc.fusion.thresh_leakycnn)};
}

Outcome a7()
{
  const auto rc = calibrated_run();
  const auto s = summarize(run_pipeline(standard().data, rc));
  return {s.fast_rows > 0 && s.mean_aee_fused_fast < s.mean_aee_frame_fast,
          fmt("fast-region AEE fused %.3f vs frame-only %.3f over %g rows", s.mean_aee_fused_fast,
              s.mean_aee_frame_fast, static_cast<double>(s.fast_rows))};
}

Outcome a8()
{
  const auto ops = ops_count(LeakyParams{}, {346, 260}, 10000, FusionParams{}).total();
  return {ops >= 1000000 && ops <= 10000000,
          fmt("%g operations per prediction, band [1e6, 1e7]", static_cast<double>(ops))};
}

Outcome a9()
{
  const auto dir = fs::path(FUSEFLOW_TEST_TMP) / "acceptance_a9";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::mt19937_64 rng(909);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    EventStream s;
    s.shape = {1 + static_cast<int>(rng() % 640), 1 + static_cast<int>(rng() % 480)};
    std::uint64_t t = rng() % (1ULL << 40);
    const std::size_t n = rng() % 50;
    for (std::size_t i = 0; i < n; ++i) {
      t += rng() % 4 == 0 ? 0 : rng() % 100000;
      s.events.push_back({t, static_cast<std::uint16_t>(rng() % s.shape.width),
                          static_cast<std::uint16_t>(rng() % s.shape.height),
                          static_cast<std::int8_t>(rng() & 1 ? 1 : -1)});
    }
    write_events_bin(dir / "e.bin", s);
    const auto b = read_events_bin(dir / "e.bin");
    write_events_csv(dir / "e.csv", s);
    const auto c = read_events_csv(dir / "e.csv", s.shape);
    failures += !(b.shape == s.shape && b.events == s.events && c.events == s.events);

    const GridShape fs_shape{1 + static_cast<int>(rng() % 32), 1 + static_cast<int>(rng() % 32)};
    FlowField f(fs_shape);
    std::uniform_real_distribution<float> uni(-1e5f, 1e5f);
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (rng() % 6) {
        f.set(i, uni(rng), uni(rng));
      }
    }
    write_flo(dir / "f.flo", f);
    const auto g = read_flo(dir / "f.flo");
    failures += !(g.shape == f.shape && g.u == f.u && g.v == f.v && g.valid == f.valid);
  }
  return {failures == 0, fmt("1000 event (EVT1 + CSV) and 1000 .flo cases, %g failures",
                             failures)};
}

int sh(const std::string & cmd)
{
  return std::system((cmd + " > /dev/null 2>&1").c_str());
}

Outcome a10()
{
  const auto dir = fs::path(FUSEFLOW_TEST_TMP) / "acceptance_a10";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = FUSEFLOW_CLI;
  if (sh(cli + " synth --out " + (dir / "data").string()) != 0 ||
      sh(cli + " fuse-run --config " + (dir / "data" / "manifest.txt").string() + " --out " +
         (dir / "seed").string()) != 0) {
    return {false, "could not prepare the run manifest"};
  }
  const auto manifest = (dir / "seed" / "manifest.txt").string();
  const std::vector<std::pair<std::string, std::string>> runs{
    {"r1", ""}, {"r2", ""}, {"r4", " --threads 4"}, {"rmax", " --threads 0"}};
  for (const auto & [name, extra] : runs) {
    if (sh(cli + " fuse-run --config " + manifest + " --out " + (dir / name).string() + extra) !=
        0) {
      return {false, "fuse-run " + name + " failed"};
    }
  }
  auto digest = [&](const fs::path & d) {
    std::string all = slurp(d / "metrics.csv");
    std::vector<fs::path> files;
    for (const auto & e : fs::directory_iterator(d / "fused")) {
      files.push_back(e.path().filename());
    }
    std::sort(files.begin(), files.end());
    for (const auto & f : files) {
      all += f.string() + slurp(d / "fused" / f);
    }
    return all;
  };
  const auto ref = digest(dir / "r1");
  bool same = !ref.empty();
  for (const auto & [name, extra] : runs) {
    same = same && digest(dir / name) == ref;
  }
  return {same, std::string("4 replays (threads 1, 1, 4, all) byte-identical: ") +
                  (same ? "yes" : "no")};
}

}  // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
    {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
    {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}};
  int failed = 0;
  for (const auto & [id, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception & e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%-3s %s  %7.2fs  %s\n", id.c_str(), o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
