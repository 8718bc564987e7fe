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

#ifndef FUSEFLOW_HARNESS_HPP
#define FUSEFLOW_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "fuseflow/core.hpp"
#include "fuseflow/frame_flow.hpp"
#include "fuseflow/fusion.hpp"
#include "fuseflow/io.hpp"
#include "fuseflow/leaky_filter.hpp"
#include "fuseflow/synth.hpp"

namespace fuseflow
{
enum class EvalMode { all_gt_pixels, event_active_pixels };

EvalMode parse_eval_mode(const std::string & name);
std::string to_string(EvalMode mode);

/// Ground-truth flow lookup by timestamp.
class GroundTruth
{
public:
  virtual ~GroundTruth() = default;
  virtual std::optional<FlowField> at(std::uint64_t t_us) const = 0;
};

/// Analytic ground truth of a synthetic scene.
class SceneGroundTruth : public GroundTruth
{
public:
  explicit SceneGroundTruth(std::shared_ptr<const Scene> scene) : scene_(std::move(scene)) {}
  std::optional<FlowField> at(std::uint64_t t_us) const override;

private:
  std::shared_ptr<const Scene> scene_;
};

/// Ground truth from a "timestamp_us file.flo" index. Lookups match within
/// 1 us; anything else is reported missing.
class FlowSeriesGroundTruth : public GroundTruth
{
public:
  explicit FlowSeriesGroundTruth(const std::filesystem::path & index_file);
  std::optional<FlowField> at(std::uint64_t t_us) const override;

private:
  std::map<std::uint64_t, std::filesystem::path> files_;
};

struct Dataset
{
  EventStream events;
  FrameSequence frames;
  std::shared_ptr<const GroundTruth> gt;
};

/// Frames, events and analytic ground truth for a synthetic scene.
Dataset make_synthetic_dataset(const SceneConfig & scene, const DvsParams & dvs);

struct RunConfig
{
  LeakyParams leaky;
  FarnebackParams farneback;
  FusionParams fusion;
  int rate_multiplier = 1;
  EvalMode eval_mode = EvalMode::all_gt_pixels;
  bool event_pipeline = true;
  // Pixels whose ground-truth speed exceeds this (px per frame interval)
  // form the fast region; <= 0 disables the fast-region columns.
  double fast_speed = 0.0;

  void validate() const;
};

struct MetricsRow
{
  std::uint64_t t = 0;  // sub-slice midpoint, us
  int frame_index = 0;
  int slice_index = 0;
  bool evaluated = false;  // false when ground truth was missing
  double aee_fused = 0.0;
  double aee_frame_only = 0.0;
  double aee_event_only = 0.0;
  double event_percent = 0.0;
  std::uint64_t n_events = 0;
  std::uint64_t n_active = 0;
  std::uint64_t n_eval = 0;        // pixels behind aee_fused / aee_frame_only
  std::uint64_t n_event_eval = 0;  // pixels behind aee_event_only
  std::uint64_t op_count = 0;
  double aee_fused_fast = 0.0;
  double aee_frame_fast = 0.0;
  std::uint64_t n_fast = 0;
  // Always over gt & fused & frame & event-valid, whatever eval_mode says,
  // so both evaluation sets appear in every table.
  double aee_fused_active = 0.0;
  double aee_frame_active = 0.0;
  std::uint64_t n_active_eval = 0;
};

/// Slice boundary j of N inside [t0, t0 + dt): t0 + j * dt / N (integer us).
std::uint64_t slice_boundary(std::uint64_t t0, std::uint64_t dt, int n, int j);
std::uint64_t slice_midpoint(std::uint64_t a, std::uint64_t b);

/// Timestamps at which the pipeline evaluates for each rate multiplier.
std::vector<std::uint64_t> evaluation_times(const FrameSequence & frames,
                                            const std::vector<int> & rates);

/// Everything the fusion stage consumes, computed once per rate multiplier so
/// threshold sweeps only rerun fusion.
struct PipelineTrace
{
  struct Slice
  {
    std::uint64_t t0 = 0, t1 = 0, mid = 0;
    int frame_index = 0;
    int slice_index = 0;
    FlowField event_flow;
    std::uint64_t n_events = 0;
    std::uint64_t n_active = 0;
    std::optional<FlowField> gt;
  };
  GridShape shape;
  int rate_multiplier = 1;
  std::vector<FlowField> frame_flows;  // one per frame interval
  std::vector<Slice> slices;
};

std::vector<FlowField> compute_frame_flows(const FrameSequence & frames,
                                           const FarnebackParams & params);

PipelineTrace trace_pipeline(const Dataset & data, const RunConfig & config,
                             const std::vector<FlowField> * frame_flows = nullptr);

/// Callback receiving each fused map as it is produced.
using FusedSink = std::function<void(const PipelineTrace::Slice &, const FusedFlow &)>;

std::vector<MetricsRow> evaluate_fusion(const PipelineTrace & trace, const RunConfig & config,
                                        const FusedSink & sink = {});

std::vector<MetricsRow> run_pipeline(const Dataset & data, const RunConfig & config,
                                     const FusedSink & sink = {});

struct RunSummary
{
  double mean_aee_fused = 0.0;
  double mean_aee_frame_only = 0.0;
  double mean_aee_event_only = 0.0;
  double mean_event_percent = 0.0;
  double mean_aee_fused_fast = 0.0;
  double mean_aee_frame_fast = 0.0;
  std::size_t rows = 0;
  std::size_t evaluated_rows = 0;  // n_eval > 0
  std::size_t event_rows = 0;      // n_event_eval > 0
  std::size_t fast_rows = 0;       // n_fast > 0
};

/// Each AEE mean runs over the rows whose evaluation set for it is non-empty;
/// event percent over all rows.
RunSummary summarize(const std::vector<MetricsRow> & rows);

struct ThresholdPoint
{
  double thresh_farneback = 0.0;
  double thresh_leakycnn = 0.0;
  RunSummary summary;
};

/// One fusion run per (thresh_farneback, thresh_leakycnn) pair, row-major in
/// the order given. Grid points may run in parallel; output order is fixed.
std::vector<ThresholdPoint> threshold_sweep(const PipelineTrace & trace, const RunConfig & config,
                                            const std::vector<double> & thresh_farneback,
                                            const std::vector<double> & thresh_leakycnn);

struct RatePoint
{
  int rate_multiplier = 1;
  double relative_fps = 1.0;  // N relative to the frame pipeline
  RunSummary summary;
};

std::vector<RatePoint> rate_sweep(const Dataset & data, const RunConfig & config,
                                  const std::vector<int> & rates);

/// Analytic arithmetic-operation count for one event-pipeline prediction plus
/// fusion:
///   pixels  * (4 + kExpCost)       snapshot decay + activity compare, all pixels
///   events  * (4 + kExpCost)       accumulate: sub, div, exp, mul, add
///   active  * 4                    central differences, 2 ops x 2 maps
///   active  * (2 k^2 + 1)          count-normalized smoothing
///   active  * 2                    gain scaling of u and v
///   active  * kFusionOps(mode)     two distances and compares, belief, select
/// When `n_active` is not given it is bounded by min(events, pixels).
struct OpsBreakdown
{
  std::uint64_t per_map = 0;
  std::uint64_t accumulate = 0;
  std::uint64_t difference = 0;
  std::uint64_t smoothing = 0;
  std::uint64_t gain = 0;
  std::uint64_t fusion = 0;
  std::uint64_t total() const
  {
    return per_map + accumulate + difference + smoothing + gain + fusion;
  }
};

inline constexpr std::uint64_t kExpCost = 20;
std::uint64_t fusion_ops_per_pixel(Accumulation mode);

OpsBreakdown ops_count(const LeakyParams & leaky, GridShape shape, std::uint64_t n_events,
                       const FusionParams & fusion,
                       std::optional<std::uint64_t> n_active = std::nullopt);

/// Gain for the event pipeline: the leaky filter runs over a translating
/// edge scene with known speed and the gain maps the median smoothed
/// horizontal difference over active interior pixels onto that speed.
double calibrate_gain(const LeakyParams & leaky, const SceneConfig & edge_scene,
                      const DvsParams & dvs);

/// Picks the grid point with the lowest mean fused AEE (ties keep the first
/// in row-major grid order).
ThresholdPoint calibrate_thresholds(const PipelineTrace & trace, const RunConfig & config,
                                    const std::vector<double> & thresh_farneback,
                                    const std::vector<double> & thresh_leakycnn);

void write_metrics_csv(std::ostream & out, const std::vector<MetricsRow> & rows);
void write_metrics_csv(const std::filesystem::path & path, const std::vector<MetricsRow> & rows);
void write_threshold_csv(std::ostream & out, const std::vector<ThresholdPoint> & points);
void write_rate_csv(std::ostream & out, const std::vector<RatePoint> & points);

}  // namespace fuseflow

#endif  // FUSEFLOW_HARNESS_HPP
