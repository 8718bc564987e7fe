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

// Wall-clock comparison of the serial reference kernels against the OpenMP
// kernels on a DAVIS346-sized grid.
//
//   bench_kernels [--threads N] [--reps R]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <random>
#include <string>

#include "fuseflow/frame_flow.hpp"
#include "fuseflow/leaky_filter.hpp"
#include "fuseflow/parallel.hpp"
#include "fuseflow/reference.hpp"

using namespace fuseflow;

namespace
{
double best_ms(int reps, const std::function<void()> & fn)
{
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const char * name, double ref_ms, double par_ms)
{
  std::printf("%-20s %12.3f %12.3f %9.2fx\n", name, ref_ms, par_ms, ref_ms / par_ms);
}
}  // namespace

int main(int argc, char ** argv)
{
  int threads = 0;
  int reps = 3;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (!std::strcmp(argv[i], "--threads")) {
      threads = std::atoi(argv[i + 1]);
    } else if (!std::strcmp(argv[i], "--reps")) {
      reps = std::atoi(argv[i + 1]);
    }
  }
  parallel::set_threads(threads);

  const GridShape shape{346, 260};
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  ScalarMap f1(shape), f2(shape);
  for (int y = 0; y < shape.height; ++y) {
    for (int x = 0; x < shape.width; ++x) {
      f1(x, y) = 0.5 + 0.25 * std::sin(0.3 * x) * std::cos(0.2 * y);
      f2(x, y) = 0.5 + 0.25 * std::sin(0.3 * (x - 1.5)) * std::cos(0.2 * (y + 0.5));
    }
  }
  ScalarMap d(shape);
  BinaryMap active(shape, 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = uni(rng) - 0.5;
    active[i] = uni(rng) < 0.3 ? 1 : 0;
  }
  std::vector<Event> events;
  for (int i = 0; i < 10000; ++i) {
    events.push_back({static_cast<std::uint64_t>(i * 3),
                      static_cast<std::uint16_t>(rng() % shape.width),
                      static_cast<std::uint16_t>(rng() % shape.height), 1});
  }

  std::printf("grid %dx%d, threads %d, best of %d\n", shape.width, shape.height,
              parallel::max_threads(), reps);
  std::printf("%-20s %12s %12s %10s\n", "kernel", "reference ms", "openmp ms", "speedup");

  const FarnebackParams fp;
  PolyExpField p1, p2;
  const double pe_ref = best_ms(reps, [&] { p1 = reference::poly_expansion(f1, fp.poly_n, fp.poly_sigma); });
  const double pe_par = best_ms(reps, [&] { p1 = poly_expansion(f1, fp); });
  row("poly_expansion", pe_ref, pe_par);
  p2 = poly_expansion(f2, fp);

  const FlowField prior(shape);
  FlowField flow;
  const double ds_ref = best_ms(reps, [&] {
    flow = reference::displacement_step(p1, p2, prior, fp.avg_window, fp.det_eps);
  });
  const double ds_par = best_ms(reps, [&] {
    flow = displacement_step(p1, p2, prior, fp.avg_window, fp.det_eps);
  });
  row("displacement_step", ds_ref, ds_par);

  ScalarMap sm;
  const double sa_ref = best_ms(reps, [&] { sm = reference::smooth_avg(d, active, 5); });
  const double sa_par = best_ms(reps, [&] { sm = smooth_avg(d, active, 5, nullptr); });
  row("smooth_avg k=5", sa_ref, sa_par);

  const double ac_ref = best_ms(reps, [&] {
    ActivationState s(shape, 30000.0);
    reference::accumulate(s, events);
  });
  const double ac_par = best_ms(reps, [&] {
    ActivationState s(shape, 30000.0);
    accumulate(s, events);
  });
  row("accumulate 10k ev", ac_ref, ac_par);

  const double ff = best_ms(1, [&] { flow = farneback_flow(f1, f2, fp); });
  std::printf("%-20s %12s %12.3f\n", "farneback_flow", "-", ff);
  return 0;
}
