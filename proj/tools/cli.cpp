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

#include "fuseflow/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>

#include "fuseflow/config.hpp"
#include "fuseflow/harness.hpp"
#include "fuseflow/io.hpp"
#include "fuseflow/parallel.hpp"

namespace fs = std::filesystem;

namespace fuseflow::cli
{
namespace
{
std::string numbered(const std::string & stem, std::size_t i, const std::string & ext)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05zu%s", stem.c_str(), i, ext.c_str());
  return buf;
}

std::string fmt(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void require_file(const std::string & key, const std::string & path)
{
  if (!fs::exists(path)) {
    throw DataError(path + ": no such file (from '" + key + "')");
  }
}

fs::path out_dir(const Config & c)
{
  if (!c.is_set("out")) {
    throw ConfigError("this subcommand needs --out <dir>");
  }
  fs::path dir = c.get("out");
  fs::create_directories(dir);
  return dir;
}

/// Events + frames from files when given, otherwise rendered from the scene
/// keys. A set gt key always wins over analytic ground truth.
Dataset load_dataset(const Config & c)
{
  const bool has_events = c.is_set("events");
  const bool has_frames = c.is_set("frames");
  if (has_events != has_frames) {
    throw ConfigError("--events and --frames must be given together");
  }
  Dataset d;
  if (has_events) {
    require_file("frames", c.get("frames"));
    require_file("events", c.get("events"));
    d.frames = read_frames(c.get("frames"));
    const auto & fmt_name = c.get("events_format");
    const EventFormat f =
      fmt_name == "auto" ? event_format_for(c.get("events")) : parse_event_format(fmt_name);
    d.events = read_events(c.get("events"), f, d.frames.shape);
  } else {
    d = make_synthetic_dataset(c.scene(), c.dvs());
  }
  if (c.is_set("gt")) {
    require_file("gt", c.get("gt"));
    d.gt = std::make_shared<FlowSeriesGroundTruth>(c.get("gt"));
  }
  return d;
}

std::vector<FlowField> frame_flows(const FrameSequence & frames, const FarnebackParams & params,
                                   std::ostream & err)
{
  std::vector<FlowField> flows;
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i + 1 < frames.frames.size(); ++i) {
    flows.push_back(farneback_flow(frames.frames[i].image, frames.frames[i + 1].image, params,
                                   i == 0 ? &warnings : nullptr));
  }
  for (const auto & w : warnings) {
    err << "warning: " << w << '\n';
  }
  return flows;
}

void write_series(const fs::path & dir, const std::string & stem,
                  const std::vector<std::pair<std::uint64_t, FlowField>> & series)
{
  fs::create_directories(dir);
  std::vector<FlowSeriesEntry> index;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto name = numbered(stem, i, ".flo");
    write_flo(dir / name, series[i].second);
    index.push_back({series[i].first, name});
  }
  write_flow_index(dir / (stem + ".txt"), index);
}

void print_summary(std::ostream & out, const RunSummary & s)
{
  out << "evaluated rows:      " << s.evaluated_rows << '\n'
      << "mean AEE fused:      " << fmt(s.mean_aee_fused) << '\n'
      << "mean AEE frame only: " << fmt(s.mean_aee_frame_only) << '\n'
      << "mean AEE event only: " << fmt(s.mean_aee_event_only) << '\n'
      << "mean event percent:  " << fmt(s.mean_event_percent) << '\n';
  if (s.fast_rows > 0) {
    out << "fast AEE fused:      " << fmt(s.mean_aee_fused_fast) << '\n'
        << "fast AEE frame only: " << fmt(s.mean_aee_frame_fast) << '\n';
  }
}

// Subcommands ---------------------------------------------------------------

int cmd_synth(Config c, std::ostream & out, std::ostream &)
{
  const auto dir = out_dir(c);
  const Scene scene(c.scene());
  const auto events = dvs_simulate(scene, c.dvs());
  const auto frames = render_frames(scene);

  const auto & fmt_name = c.get("events_format");
  const EventFormat f = fmt_name == "csv" ? EventFormat::csv : EventFormat::bin;
  const fs::path events_path = dir / (f == EventFormat::csv ? "events.csv" : "events.bin");
  write_events(events_path, events, f);
  write_frames(dir / "frames", "frames.txt", frames);

  std::vector<std::pair<std::uint64_t, FlowField>> gt;
  for (auto t : evaluation_times(frames, c.get_int_list("synth.gt_rates"))) {
    gt.emplace_back(t, scene.gt_flow(static_cast<double>(t)));
  }
  write_series(dir / "gt", "gt", gt);

  // Relative to the manifest, so identical runs give identical directories.
  c.set("events", events_path.filename().string());
  c.set("frames", "frames/frames.txt");
  c.set("gt", "gt/gt.txt");
  c.set("out", ".");
  c.write_manifest(dir / "manifest.txt");
  out << "synth: " << events.events.size() << " events, " << frames.frames.size() << " frames, "
      << gt.size() << " ground-truth fields -> " << dir.string() << '\n';
  return kExitOk;
}

int cmd_flow_events(const Config & c, std::ostream & out, std::ostream &)
{
  const auto dir = out_dir(c);
  const auto data = load_dataset(c);
  const RunConfig rc = c.run();
  c.write_manifest(dir / "manifest.txt");
  // The frame pipeline is not needed here; hand the tracer empty fields.
  const std::vector<FlowField> none(data.frames.frames.size() - 1, FlowField(data.frames.shape));
  const auto trace = trace_pipeline(data, rc, &none);
  std::vector<std::pair<std::uint64_t, FlowField>> series;
  for (const auto & s : trace.slices) {
    series.emplace_back(s.mid, s.event_flow);
  }
  write_series(dir / "event_flow", "event_flow", series);
  out << "flow-events: " << series.size() << " slices -> " << (dir / "event_flow").string() << '\n';
  return kExitOk;
}

int cmd_flow_frames(const Config & c, std::ostream & out, std::ostream & err)
{
  const auto dir = out_dir(c);
  FrameSequence frames;
  if (c.is_set("frames")) {
    require_file("frames", c.get("frames"));
    frames = read_frames(c.get("frames"));
  } else {
    frames = render_frames(Scene(c.scene()));
  }
  c.write_manifest(dir / "manifest.txt");
  const auto flows = frame_flows(frames, c.farneback(), err);
  std::vector<std::pair<std::uint64_t, FlowField>> series;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    series.emplace_back(frames.frames[i].t, flows[i]);
  }
  write_series(dir / "frame_flow", "frame_flow", series);
  out << "flow-frames: " << series.size() << " fields -> " << (dir / "frame_flow").string()
      << '\n';
  return kExitOk;
}

int cmd_fuse_run(const Config & c, std::ostream & out, std::ostream & err)
{
  const auto dir = out_dir(c);
  const auto data = load_dataset(c);
  const RunConfig rc = c.run();
  c.write_manifest(dir / "manifest.txt");

  const auto flows = frame_flows(data.frames, rc.farneback, err);
  const auto trace = trace_pipeline(data, rc, &flows);

  const bool render = c.get_bool("render");
  const double max_mag = c.get_real("render_max_mag");
  const fs::path fused_dir = dir / "fused";
  fs::create_directories(fused_dir);
  if (render) {
    fs::create_directories(dir / "render");
  }
  std::vector<FlowSeriesEntry> index;
  const auto sink = [&](const PipelineTrace::Slice & s, const FusedFlow & f) {
    const auto name = numbered("fused", index.size(), ".flo");
    write_flo(fused_dir / name, f.fused);
    if (render) {
      write_ppm(dir / "render" / numbered("fused", index.size(), ".ppm"),
                flow_to_color(f.fused, max_mag));
    }
    index.push_back({s.mid, name});
  };
  const auto rows = evaluate_fusion(trace, rc, sink);
  write_flow_index(fused_dir / "fused.txt", index);
  write_metrics_csv(dir / "metrics.csv", rows);
  out << "fuse-run: " << rows.size() << " rows -> " << (dir / "metrics.csv").string() << '\n';
  print_summary(out, summarize(rows));
  return kExitOk;
}

int cmd_sweep_thresholds(const Config & c, std::ostream & out, std::ostream & err)
{
  const auto dir = out_dir(c);
  const auto data = load_dataset(c);
  const RunConfig rc = c.run();
  c.write_manifest(dir / "manifest.txt");
  const auto flows = frame_flows(data.frames, rc.farneback, err);
  const auto trace = trace_pipeline(data, rc, &flows);
  const auto points = threshold_sweep(trace, rc, c.get_real_list("sweep.thresh_farneback"),
                                      c.get_real_list("sweep.thresh_leakycnn"));
  {
    std::ofstream csv(dir / "thresholds.csv", std::ios::trunc);
    if (!csv) {
      throw DataError((dir / "thresholds.csv").string() + ": cannot open for writing");
    }
    write_threshold_csv(csv, points);
  }
  write_threshold_csv(out, points);
  const auto best = std::min_element(points.begin(), points.end(), [](const auto & a, const auto & b) {
    return a.summary.mean_aee_fused < b.summary.mean_aee_fused;
  });
  out << "calibrated: fusion.thresh_farneback=" << best->thresh_farneback
      << " fusion.thresh_leakycnn=" << best->thresh_leakycnn
      << " (mean AEE fused " << fmt(best->summary.mean_aee_fused) << ")\n";
  return kExitOk;
}

int cmd_sweep_rate(const Config & c, std::ostream & out, std::ostream &)
{
  const auto dir = out_dir(c);
  const auto data = load_dataset(c);
  const RunConfig rc = c.run();
  c.write_manifest(dir / "manifest.txt");
  const auto points = rate_sweep(data, rc, c.get_int_list("sweep.rates"));
  {
    std::ofstream csv(dir / "rates.csv", std::ios::trunc);
    if (!csv) {
      throw DataError((dir / "rates.csv").string() + ": cannot open for writing");
    }
    write_rate_csv(csv, points);
  }
  write_rate_csv(out, points);
  return kExitOk;
}

int cmd_eval_aee(const Config & c, const std::string & a, const std::string & b, std::ostream & out)
{
  require_file("a", a);
  require_file("b", b);
  if (c.is_set("out")) {
    c.write_manifest(out_dir(c) / "manifest.txt");
  }
  const auto r = aee(read_flo(a), read_flo(b));
  out << fmt(r.mean) << '\n';
  return kExitOk;
}

int cmd_viz(const Config & c, const std::string & in, const std::string & ppm, std::ostream & out)
{
  require_file("input", in);
  if (c.is_set("out")) {
    c.write_manifest(out_dir(c) / "manifest.txt");
  }
  write_ppm(ppm, flow_to_color(read_flo(in), c.get_real("render_max_mag")));
  out << "viz: " << ppm << '\n';
  return kExitOk;
}

// Option plumbing -----------------------------------------------------------

struct KeyOptions
{
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option *> options;
  std::string scene_alias;
  CLI::Option * scene_alias_opt = nullptr;
  std::vector<std::string> sets;
};

const char * type_name(ValueType t)
{
  switch (t) {
    case ValueType::string: return "TEXT";
    case ValueType::path: return "PATH";
    case ValueType::integer: return "INT";
    case ValueType::unsigned_integer: return "UINT";
    case ValueType::real: return "REAL";
    case ValueType::boolean: return "BOOL";
    case ValueType::real_list: return "REAL,...";
    case ValueType::int_list: return "INT,...";
  }
  return "TEXT";
}

void add_key_options(CLI::App * sub, KeyOptions & k)
{
  sub->add_option("--config", k.config_file, "key=value config file (e.g. a run manifest)");
  sub->add_option("--set", k.sets, "extra key=value override (repeatable)");
  k.scene_alias_opt = sub->add_option("--scene", k.scene_alias, "alias of --scene.kind");
  for (const auto & spec : config_schema()) {
    std::string help = spec.help + " [default: " + spec.default_value + "]";
    auto * opt = sub->add_option("--" + spec.name, k.values[spec.name], help)
                   ->type_name(type_name(spec.type))
                   ->group("Configuration keys");
    k.options[spec.name] = opt;
  }
}

/// Default < config file < command line.
Config resolve(const KeyOptions & k)
{
  Config c;
  if (!k.config_file.empty()) {
    if (!fs::exists(k.config_file)) {
      throw DataError(k.config_file + ": no such config file");
    }
    c.load_file(k.config_file);
  }
  if (k.scene_alias_opt->count() > 0) {
    c.set("scene.kind", k.scene_alias);
  }
  for (const auto & spec : config_schema()) {
    if (k.options.at(spec.name)->count() > 0) {
      c.set(spec.name, k.values.at(spec.name));
    }
  }
  for (const auto & kv : k.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    }
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  // Manifests store absolute paths so they can be replayed from anywhere.
  for (const auto & spec : config_schema()) {
    if (spec.type == ValueType::path && c.is_set(spec.name)) {
      c.set(spec.name, fs::absolute(c.get(spec.name)).lexically_normal().string());
    }
  }
  return c;
}

}  // namespace

int run_command(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  CLI::App app{"fuseflow: event/frame optical-flow fusion toolkit", "fuseflow"};
  app.require_subcommand(1);

  struct Sub
  {
    CLI::App * app;
    KeyOptions keys;
  };
  std::map<std::string, Sub> subs;
  const std::vector<std::pair<std::string, std::string>> names = {
    {"synth", "render a synthetic scene: events, frames, ground truth"},
    {"flow-events", "event pipeline only: one .flo per event slice"},
    {"flow-frames", "frame pipeline only: one .flo per frame interval"},
    {"fuse-run", "full dual-rate pipeline with metrics"},
    {"sweep-thresholds", "event percent / AEE over the fusion threshold grid"},
    {"sweep-rate", "event percent / AEE over rate multipliers"},
    {"eval-aee", "mean endpoint error between two .flo files"},
    {"viz", "color-code a .flo file as PPM"},
  };
  for (const auto & [name, desc] : names) {
    auto & s = subs[name];
    s.app = app.add_subcommand(name, desc);
    add_key_options(s.app, s.keys);
  }
  std::string pos_a, pos_b;
  subs["eval-aee"].app->add_option("a", pos_a, "first .flo")->required();
  subs["eval-aee"].app->add_option("b", pos_b, "second .flo")->required();
  subs["viz"].app->add_option("input", pos_a, "input .flo")->required();
  subs["viz"].app->add_option("output", pos_b, "output .ppm")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e, out, err);
    if (code == 0) {
      return kExitOk;
    }
    err << app.help();
    return kExitUsage;
  }

  try {
    for (auto & [name, s] : subs) {
      if (!s.app->parsed()) {
        continue;
      }
      const Config c = resolve(s.keys);
      parallel::set_threads(static_cast<int>(c.get_int("threads")));
      if (name == "synth") return cmd_synth(c, out, err);
      if (name == "flow-events") return cmd_flow_events(c, out, err);
      if (name == "flow-frames") return cmd_flow_frames(c, out, err);
      if (name == "fuse-run") return cmd_fuse_run(c, out, err);
      if (name == "sweep-thresholds") return cmd_sweep_thresholds(c, out, err);
      if (name == "sweep-rate") return cmd_sweep_rate(c, out, err);
      if (name == "eval-aee") return cmd_eval_aee(c, pos_a, pos_b, out);
      if (name == "viz") return cmd_viz(c, pos_a, pos_b, out);
    }
  } catch (const ConfigError & e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  } catch (const std::invalid_argument & e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception & e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

int run_command(int argc, const char * const * argv)
{
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    args.emplace_back(argv[i]);
  }
  return run_command(args, std::cout, std::cerr);
}

}  // namespace fuseflow::cli
