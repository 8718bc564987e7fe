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

#include "fuseflow/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "fuseflow/parallel.hpp"

namespace fuseflow
{
EvalMode parse_eval_mode(const std::string & name)
{
  if (name == "all_gt_pixels") return EvalMode::all_gt_pixels;
  if (name == "event_active_pixels") return EvalMode::event_active_pixels;
  throw std::invalid_argument("unknown evaluation mode '" + name + "'");
}

std::string to_string(EvalMode mode)
{
  return mode == EvalMode::all_gt_pixels ? "all_gt_pixels" : "event_active_pixels";
}

std::optional<FlowField> SceneGroundTruth::at(std::uint64_t t_us) const
{
  if (t_us > scene_->config().duration_us()) {
    return std::nullopt;
  }
  return scene_->gt_flow(static_cast<double>(t_us));
}

FlowSeriesGroundTruth::FlowSeriesGroundTruth(const std::filesystem::path & index_file)
{
  for (auto & e : read_flow_index(index_file)) {
    files_.emplace(e.t, std::move(e.file));
  }
}

std::optional<FlowField> FlowSeriesGroundTruth::at(std::uint64_t t_us) const
{
  auto it = files_.lower_bound(t_us == 0 ? 0 : t_us - 1);
  if (it == files_.end() || it->first > t_us + 1) {
    return std::nullopt;
  }
  return read_flo(it->second);
}

Dataset make_synthetic_dataset(const SceneConfig & scene_cfg, const DvsParams & dvs)
{
  auto scene = std::make_shared<const Scene>(scene_cfg);
  Dataset d;
  d.events = dvs_simulate(*scene, dvs);
  d.frames = render_frames(*scene);
  d.gt = std::make_shared<SceneGroundTruth>(scene);
  return d;
}

void RunConfig::validate() const
{
  leaky.validate();
  farneback.validate();
  fusion.validate();
  if (rate_multiplier < 1) {
    throw std::invalid_argument("rate_multiplier must be >= 1");
  }
}

std::uint64_t slice_boundary(std::uint64_t t0, std::uint64_t dt, int n, int j)
{
  return t0 + dt * static_cast<std::uint64_t>(j) / static_cast<std::uint64_t>(n);
}

std::uint64_t slice_midpoint(std::uint64_t a, std::uint64_t b) { return a + (b - a) / 2; }

std::vector<std::uint64_t> evaluation_times(const FrameSequence & frames,
                                            const std::vector<int> & rates)
{
  std::set<std::uint64_t> times;
  if (frames.frames.size() < 2) {
    return {};
  }
  const auto dt = frames.interval();
  for (std::size_t i = 0; i + 1 < frames.frames.size(); ++i) {
    const auto t0 = frames.frames[i].t;
    for (int n : rates) {
      for (int j = 0; j < n; ++j) {
        times.insert(slice_midpoint(slice_boundary(t0, dt, n, j), slice_boundary(t0, dt, n, j + 1)));
      }
    }
  }
  return {times.begin(), times.end()};
}

std::vector<FlowField> compute_frame_flows(const FrameSequence & frames,
                                           const FarnebackParams & params)
{
  std::vector<FlowField> flows;
  for (std::size_t i = 0; i + 1 < frames.frames.size(); ++i) {
    flows.push_back(farneback_flow(frames.frames[i].image, frames.frames[i + 1].image, params));
  }
  return flows;
}

PipelineTrace trace_pipeline(const Dataset & data, const RunConfig & config,
                             const std::vector<FlowField> * frame_flows)
{
  config.validate();
  const auto & frames = data.frames;
  if (frames.frames.size() < 2) {
    throw DataError("pipeline needs at least two frames");
  }
  require_same_shape(frames.shape, data.events.shape, "events vs frames");
  const auto dt = frames.interval();
  const int n = config.rate_multiplier;

  PipelineTrace trace;
  trace.shape = frames.shape;
  trace.rate_multiplier = n;
  if (frame_flows) {
    if (frame_flows->size() + 1 != frames.frames.size()) {
      throw std::invalid_argument("trace_pipeline: frame flow count does not match frames");
    }
    trace.frame_flows = *frame_flows;
  } else {
    trace.frame_flows = compute_frame_flows(frames, config.farneback);
  }

  ActivationState state(trace.shape, config.leaky.tau_us);
  const auto & ev = data.events.events;
  std::size_t cursor = 0;
  // Events before the first frame only warm up the accumulator.
  while (cursor < ev.size() && ev[cursor].t < frames.frames[0].t) {
    ++cursor;
  }
  if (config.event_pipeline && cursor > 0) {
    accumulate(state, std::span<const Event>(ev.data(), cursor));
  }

  for (std::size_t i = 0; i + 1 < frames.frames.size(); ++i) {
    const auto t_frame = frames.frames[i].t;
    for (int j = 0; j < n; ++j) {
      PipelineTrace::Slice s;
      s.t0 = slice_boundary(t_frame, dt, n, j);
      s.t1 = slice_boundary(t_frame, dt, n, j + 1);
      s.mid = slice_midpoint(s.t0, s.t1);
      s.frame_index = static_cast<int>(i);
      s.slice_index = j;
      const std::size_t begin = cursor;
      while (cursor < ev.size() && ev[cursor].t < s.t1) {
        ++cursor;
      }
      const std::span<const Event> slice(ev.data() + begin, cursor - begin);
      if (config.event_pipeline) {
        s.n_events = slice.size();
        const auto r = leaky_response(state, slice, s.t1, config.leaky);
        s.n_active = r.active_count;
        s.event_flow = response_to_flow(r, config.leaky, dt);
      } else {
        s.event_flow = FlowField(trace.shape);
      }
      if (data.gt) {
        s.gt = data.gt->at(s.mid);
        if (s.gt) {
          require_same_shape(trace.shape, s.gt->shape, "ground truth");
        }
      }
      trace.slices.push_back(std::move(s));
    }
  }
  return trace;
}

namespace
{
// AEE over `mask` (already intersected with validity); 0 with count 0 when
// the set is empty.
std::pair<double, std::size_t> masked_aee(const FlowField & flow, const FlowField & gt,
                                          const BinaryMap & mask)
{
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      const auto r = aee(flow, gt, mask);
      return {r.mean, r.count};
    }
  }
  return {0.0, 0};
}
}  // namespace

std::vector<MetricsRow> evaluate_fusion(const PipelineTrace & trace, const RunConfig & config,
                                        const FusedSink & sink)
{
  config.fusion.validate();
  FusionState state(trace.shape);
  std::vector<MetricsRow> rows;
  rows.reserve(trace.slices.size());
  int current_frame = -1;
  for (const auto & s : trace.slices) {
    if (s.frame_index != current_frame) {
      on_new_frame_inference(state, trace.frame_flows[s.frame_index], config.fusion);
      current_frame = s.frame_index;
    }
    const FlowField & frame_flow = state.of_frame;
    const auto fused = fusion_step(state, s.event_flow, config.fusion);
    if (sink) {
      sink(s, fused);
    }

    MetricsRow row;
    row.t = s.mid;
    row.frame_index = s.frame_index;
    row.slice_index = s.slice_index;
    row.n_events = s.n_events;
    row.n_active = s.n_active;
    row.event_percent = event_percent(fused.source_mask, fused.fused.valid_map()).percent;
    row.op_count = config.event_pipeline
                     ? ops_count(config.leaky, trace.shape, s.n_events, config.fusion, s.n_active)
                         .total()
                     : 0;
    if (s.gt) {
      const auto & gt = *s.gt;
      row.evaluated = true;
      BinaryMap common(trace.shape, 0);
      BinaryMap event_set(trace.shape, 0);
      BinaryMap fast(trace.shape, 0);
      BinaryMap active_set(trace.shape, 0);
      for (std::size_t i = 0; i < common.size(); ++i) {
        event_set[i] = gt.valid[i] && s.event_flow.valid[i];
        active_set[i] = event_set[i] && fused.fused.valid[i] && frame_flow.valid[i];
        common[i] = gt.valid[i] && fused.fused.valid[i] && frame_flow.valid[i] &&
                    (config.eval_mode == EvalMode::all_gt_pixels || s.event_flow.valid[i]);
        fast[i] = common[i] && config.fast_speed > 0.0 &&
                  std::hypot(gt.u[i], gt.v[i]) > config.fast_speed;
      }
      std::tie(row.aee_fused, row.n_eval) = masked_aee(fused.fused, gt, common);
      row.aee_frame_only = masked_aee(frame_flow, gt, common).first;
      std::tie(row.aee_event_only, row.n_event_eval) = masked_aee(s.event_flow, gt, event_set);
      std::tie(row.aee_fused_fast, row.n_fast) = masked_aee(fused.fused, gt, fast);
      row.aee_frame_fast = masked_aee(frame_flow, gt, fast).first;
      std::tie(row.aee_fused_active, row.n_active_eval) = masked_aee(fused.fused, gt, active_set);
      row.aee_frame_active = masked_aee(frame_flow, gt, active_set).first;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<MetricsRow> run_pipeline(const Dataset & data, const RunConfig & config,
                                     const FusedSink & sink)
{
  return evaluate_fusion(trace_pipeline(data, config), config, sink);
}

RunSummary summarize(const std::vector<MetricsRow> & rows)
{
  RunSummary s;
  for (const auto & r : rows) {
    ++s.rows;
    s.mean_event_percent += r.event_percent;
    if (r.n_eval > 0) {
      ++s.evaluated_rows;
      s.mean_aee_fused += r.aee_fused;
      s.mean_aee_frame_only += r.aee_frame_only;
    }
    if (r.n_event_eval > 0) {
      ++s.event_rows;
      s.mean_aee_event_only += r.aee_event_only;
    }
    if (r.n_fast > 0) {
      ++s.fast_rows;
      s.mean_aee_fused_fast += r.aee_fused_fast;
      s.mean_aee_frame_fast += r.aee_frame_fast;
    }
  }
  const auto mean = [](double & v, std::size_t n) {
    if (n > 0) {
      v /= static_cast<double>(n);
    }
  };
  mean(s.mean_event_percent, s.rows);
  mean(s.mean_aee_fused, s.evaluated_rows);
  mean(s.mean_aee_frame_only, s.evaluated_rows);
  mean(s.mean_aee_event_only, s.event_rows);
  mean(s.mean_aee_fused_fast, s.fast_rows);
  mean(s.mean_aee_frame_fast, s.fast_rows);
  return s;
}

std::vector<ThresholdPoint> threshold_sweep(const PipelineTrace & trace, const RunConfig & config,
                                            const std::vector<double> & thresh_farneback,
                                            const std::vector<double> & thresh_leakycnn)
{
  if (thresh_farneback.empty() || thresh_leakycnn.empty()) {
    throw std::invalid_argument("threshold_sweep: empty grid");
  }
  const std::size_t nl = thresh_leakycnn.size();
  std::vector<ThresholdPoint> out(thresh_farneback.size() * nl);
  const auto total = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    RunConfig c = config;
    c.fusion.thresh_farneback = thresh_farneback[k / nl];
    c.fusion.thresh_leakycnn = thresh_leakycnn[k % nl];
    out[k] = {c.fusion.thresh_farneback, c.fusion.thresh_leakycnn,
              summarize(evaluate_fusion(trace, c))};
  }
  return out;
}

std::vector<RatePoint> rate_sweep(const Dataset & data, const RunConfig & config,
                                  const std::vector<int> & rates)
{
  const auto frame_flows = compute_frame_flows(data.frames, config.farneback);
  std::vector<RatePoint> out;
  for (int n : rates) {
    RunConfig c = config;
    c.rate_multiplier = n;
    const auto trace = trace_pipeline(data, c, &frame_flows);
    out.push_back({n, static_cast<double>(n), summarize(evaluate_fusion(trace, c))});
  }
  return out;
}

std::uint64_t fusion_ops_per_pixel(Accumulation mode)
{
  // Two distances (2 sub, 2 mul, add, sqrt, compare), belief product,
  // accumulation adds, confidence compare, select.
  return 2 * 7 + 1 + (mode == Accumulation::two_level ? 2 : 1) + 2;
}

OpsBreakdown ops_count(const LeakyParams & leaky, GridShape shape, std::uint64_t n_events,
                       const FusionParams & fusion, std::optional<std::uint64_t> n_active)
{
  const std::uint64_t pixels = shape.size();
  const std::uint64_t active = n_active.value_or(std::min<std::uint64_t>(n_events, pixels));
  const auto k = static_cast<std::uint64_t>(leaky.smooth_k);
  OpsBreakdown ops;
  ops.per_map = pixels * (4 + kExpCost);
  ops.accumulate = n_events * (4 + kExpCost);
  ops.difference = active * 4;
  ops.smoothing = active * (2 * k * k + 1);
  ops.gain = active * 2;
  ops.fusion = active * fusion_ops_per_pixel(fusion.accumulation);
  return ops;
}

double calibrate_gain(const LeakyParams & leaky, const SceneConfig & edge_scene,
                      const DvsParams & dvs)
{
  if (edge_scene.kind != SceneKind::translating_edge) {
    throw std::invalid_argument("calibrate_gain: expects a translating_edge scene");
  }
  const double speed = std::hypot(edge_scene.velocity.x, edge_scene.velocity.y);
  if (!(speed > 0.0)) {
    throw std::invalid_argument("calibrate_gain: edge must move");
  }
  const double nx = edge_scene.velocity.x / speed;
  const double ny = edge_scene.velocity.y / speed;
  const auto data = make_synthetic_dataset(edge_scene, dvs);
  LeakyParams p = leaky;
  p.gain = 1.0;
  const GridShape s = data.frames.shape;
  const int margin = p.smooth_k / 2 + 1;

  ActivationState state(s, p.tau_us);
  const auto & ev = data.events.events;
  std::size_t cursor = 0;
  std::vector<double> samples;
  for (std::size_t i = 0; i + 1 < data.frames.frames.size(); ++i) {
    const auto t1 = data.frames.frames[i + 1].t;
    const std::size_t begin = cursor;
    while (cursor < ev.size() && ev[cursor].t < t1) {
      ++cursor;
    }
    const auto r = leaky_response(state, std::span<const Event>(ev.data() + begin, cursor - begin),
                                  t1, p);
    if (i == 0) {
      continue;  // accumulator still filling
    }
    for (int y = margin; y < s.height - margin; ++y) {
      for (int x = margin; x < s.width - margin; ++x) {
        if (r.valid(x, y)) {
          samples.push_back(r.dx(x, y) * nx + r.dy(x, y) * ny);
        }
      }
    }
  }
  if (samples.empty()) {
    throw DataError("calibrate_gain: calibration scene produced no active pixels");
  }
  auto mid = samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2);
  std::nth_element(samples.begin(), mid, samples.end());
  if (!(*mid > 0.0)) {
    throw DataError("calibrate_gain: median response does not follow the motion");
  }
  return speed / *mid;
}

ThresholdPoint calibrate_thresholds(const PipelineTrace & trace, const RunConfig & config,
                                    const std::vector<double> & thresh_farneback,
                                    const std::vector<double> & thresh_leakycnn)
{
  const auto points = threshold_sweep(trace, config, thresh_farneback, thresh_leakycnn);
  const auto best = std::min_element(points.begin(), points.end(), [](const auto & a, const auto & b) {
    return a.summary.mean_aee_fused < b.summary.mean_aee_fused;
  });
  return *best;
}

namespace
{
std::string num(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}
}  // namespace

void write_metrics_csv(std::ostream & out, const std::vector<MetricsRow> & rows)
{
  out << "t_us,frame,slice,evaluated,aee_fused,aee_frame_only,aee_event_only,event_percent,"
         "n_events,n_active,n_eval,n_event_eval,op_count,aee_fused_fast,aee_frame_fast,n_fast,"
         "aee_fused_active,aee_frame_active,n_active_eval\n";
  for (const auto & r : rows) {
    out << r.t << ',' << r.frame_index << ',' << r.slice_index << ',' << (r.evaluated ? 1 : 0)
        << ',' << num(r.aee_fused) << ',' << num(r.aee_frame_only) << ','
        << num(r.aee_event_only) << ',' << num(r.event_percent) << ',' << r.n_events << ','
        << r.n_active << ',' << r.n_eval << ',' << r.n_event_eval << ',' << r.op_count << ',' << num(r.aee_fused_fast)
        << ',' << num(r.aee_frame_fast) << ',' << r.n_fast << ',' << num(r.aee_fused_active) << ','
        << num(r.aee_frame_active) << ',' << r.n_active_eval << '\n';
  }
}

void write_metrics_csv(const std::filesystem::path & path, const std::vector<MetricsRow> & rows)
{
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError(path.string() + ": cannot open for writing");
  }
  write_metrics_csv(out, rows);
}

void write_threshold_csv(std::ostream & out, const std::vector<ThresholdPoint> & points)
{
  out << "thresh_farneback,thresh_leakycnn,mean_event_percent,mean_aee_fused,"
         "mean_aee_frame_only,mean_aee_fused_fast,mean_aee_frame_fast\n";
  for (const auto & p : points) {
    out << num(p.thresh_farneback) << ',' << num(p.thresh_leakycnn) << ','
        << num(p.summary.mean_event_percent) << ',' << num(p.summary.mean_aee_fused) << ','
        << num(p.summary.mean_aee_frame_only) << ',' << num(p.summary.mean_aee_fused_fast) << ','
        << num(p.summary.mean_aee_frame_fast) << '\n';
  }
}

void write_rate_csv(std::ostream & out, const std::vector<RatePoint> & points)
{
  out << "rate_multiplier,relative_fps,mean_event_percent,mean_aee_fused,mean_aee_frame_only,"
         "mean_aee_fused_fast,mean_aee_frame_fast\n";
  for (const auto & p : points) {
    out << p.rate_multiplier << ',' << num(p.relative_fps) << ','
        << num(p.summary.mean_event_percent) << ',' << num(p.summary.mean_aee_fused) << ','
        << num(p.summary.mean_aee_frame_only) << ',' << num(p.summary.mean_aee_fused_fast) << ','
        << num(p.summary.mean_aee_frame_fast) << '\n';
  }
}

}  // namespace fuseflow
