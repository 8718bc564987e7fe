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

#include "fuseflow/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace fuseflow
{
namespace
{
using VT = ValueType;

std::vector<KeySpec> build_schema()
{
  return {
    {"seed", VT::unsigned_integer, "1", "seed for every random choice"},
    {"threads", VT::integer, "0", "OpenMP threads, 0 = runtime default"},

    {"events", VT::path, "", "event stream path (.bin EVT1 or .csv)"},
    {"events_format", VT::string, "auto", "event file format", {"auto", "csv", "bin"}},
    {"frames", VT::path, "", "frame index file"},
    {"gt", VT::path, "", "ground-truth .flo index file"},
    {"out", VT::path, "", "output directory"},
    {"render", VT::boolean, "false", "also write PPM color renders"},
    {"render_max_mag", VT::real, "4", "flow magnitude at full saturation"},

    {"scene.kind", VT::string, "two_speed", "synthetic scene",
     {"translating_texture", "translating_edge", "moving_square", "two_speed"}},
    {"scene.width", VT::integer, "128", "grid width"},
    {"scene.height", VT::integer, "96", "grid height"},
    {"scene.vx", VT::real, "400", "velocity x, px/s (foreground for two_speed)"},
    {"scene.vy", VT::real, "0", "velocity y, px/s"},
    {"scene.bg_vx", VT::real, "20", "two_speed background velocity x, px/s"},
    {"scene.bg_vy", VT::real, "0", "two_speed background velocity y, px/s"},
    {"scene.frame_rate", VT::real, "20", "frame rate, Hz"},
    {"scene.duration", VT::real, "0.5", "duration, s"},
    {"scene.substeps", VT::integer, "20", "event simulation substeps per frame"},
    {"scene.square_size", VT::integer, "16", "foreground square side, px"},
    {"scene.lo", VT::real, "0.2", "low intensity"},
    {"scene.hi", VT::real, "0.8", "high intensity"},
    {"scene.min_wavelength", VT::real, "6", "texture shortest wavelength, px"},
    {"scene.max_wavelength", VT::real, "24", "texture longest wavelength, px"},
    {"scene.fg_intensity", VT::real, "1", "two_speed foreground intensity (negative = textured)"},
    {"synth.gt_rates", VT::int_list, "1,2,4,8", "rate multipliers whose slice midpoints get gt"},

    {"dvs.contrast", VT::real, "0.2", "contrast threshold, log units"},
    {"dvs.refractory_us", VT::real, "500", "refractory period, us"},
    {"dvs.log_eps", VT::real, "0.001", "intensity floor inside the log"},

    {"leaky.tau_us", VT::real, "30000", "accumulator decay constant, us"},
    {"leaky.smooth_k", VT::integer, "5", "averaging kernel side"},
    {"leaky.act_threshold", VT::real, "0.1", "activation for an active pixel"},
    {"leaky.gain", VT::real, "442.2", "px/s per unit smoothed activation difference"},

    {"farneback.levels", VT::integer, "3", "pyramid levels"},
    {"farneback.pyr_scale", VT::real, "0.5", "pyramid scale"},
    {"farneback.poly_n", VT::integer, "7", "expansion window"},
    {"farneback.poly_sigma", VT::real, "1.5", "expansion Gaussian sigma"},
    {"farneback.avg_window", VT::integer, "15", "displacement averaging window"},
    {"farneback.iterations", VT::integer, "3", "iterations per level"},
    {"farneback.det_eps", VT::real, "1e-6", "minimum normal-matrix determinant"},

    {"fusion.thresh_farneback", VT::real, "4", "condition 1 distance, px/frame"},
    {"fusion.thresh_leakycnn", VT::real, "8", "condition 2 distance, px/frame"},
    {"fusion.thresh_confidence", VT::real, "2", "confidence needed to take event flow"},
    {"fusion.rho", VT::real, "0", "confidence carry-over per frame inference"},
    {"fusion.accumulation", VT::string, "two_level", "belief accumulation",
     {"two_level", "single"}},

    {"run.rate_multiplier", VT::integer, "4", "event inferences per frame interval"},
    {"run.eval_mode", VT::string, "all_gt_pixels", "AEE evaluation set",
     {"all_gt_pixels", "event_active_pixels"}},
    {"run.event_pipeline", VT::boolean, "true", "run the event pipeline"},
    {"run.fast_speed", VT::real, "5", "fast-region speed threshold, px/frame (0 = off)"},

    {"sweep.thresh_farneback", VT::real_list, "0.5,1,2,4,8", "condition 1 grid"},
    {"sweep.thresh_leakycnn", VT::real_list, "0.5,1,2,4,8", "condition 2 grid"},
    {"sweep.rates", VT::int_list, "1,2,4,8", "rate multipliers"},
  };
}

template <typename T>
bool parse_num(const std::string & s, T & out)
{
  if constexpr (std::is_floating_point_v<T>) {
    try {
      std::size_t pos = 0;
      out = std::stod(s, &pos);
      return pos == s.size();
    } catch (const std::exception &) {
      return false;
    }
  } else {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  }
}

std::string trim(const std::string & s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return {};
  }
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::vector<std::string> split_list(const std::string & s)
{
  std::vector<std::string> items;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    items.push_back(trim(item));
  }
  return items;
}

bool valid_value(const KeySpec & spec, const std::string & v)
{
  if (!spec.choices.empty() &&
      std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end()) {
    return false;
  }
  switch (spec.type) {
    case VT::string:
    case VT::path:
      return true;
    case VT::integer: {
      std::int64_t x;
      return parse_num(v, x);
    }
    case VT::unsigned_integer: {
      std::uint64_t x;
      return parse_num(v, x);
    }
    case VT::real: {
      double x;
      return parse_num(v, x);
    }
    case VT::boolean:
      return v == "true" || v == "false" || v == "1" || v == "0";
    case VT::real_list:
    case VT::int_list: {
      const auto items = split_list(v);
      if (items.empty()) {
        return false;
      }
      for (const auto & item : items) {
        double d;
        int i;
        if (spec.type == VT::real_list ? !parse_num(item, d) : !parse_num(item, i)) {
          return false;
        }
      }
      return true;
    }
  }
  return false;
}
}  // namespace

const std::vector<KeySpec> & config_schema()
{
  static const std::vector<KeySpec> schema = build_schema();
  return schema;
}

const KeySpec * find_key(const std::string & name)
{
  for (const auto & k : config_schema()) {
    if (k.name == name) {
      return &k;
    }
  }
  return nullptr;
}

Config::Config()
{
  for (const auto & k : config_schema()) {
    values_[k.name] = k.default_value;
  }
}

void Config::set(const std::string & key, const std::string & value)
{
  const auto * spec = find_key(key);
  if (!spec) {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
  if (!(spec->type == VT::string && spec->choices.empty()) && !valid_value(*spec, value)) {
    std::string msg = "invalid value '" + value + "' for key '" + key + "'";
    if (!spec->choices.empty()) {
      msg += " (expected one of:";
      for (const auto & c : spec->choices) {
        msg += " " + c;
      }
      msg += ")";
    }
    throw ConfigError(msg);
  }
  values_[key] = value;
}

const std::string & Config::get(const std::string & key) const
{
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
  return it->second;
}

std::int64_t Config::get_int(const std::string & key) const
{
  std::int64_t v = 0;
  parse_num(get(key), v);
  return v;
}

std::uint64_t Config::get_uint(const std::string & key) const
{
  std::uint64_t v = 0;
  parse_num(get(key), v);
  return v;
}

double Config::get_real(const std::string & key) const
{
  double v = 0.0;
  parse_num(get(key), v);
  return v;
}

bool Config::get_bool(const std::string & key) const
{
  const auto & v = get(key);
  return v == "true" || v == "1";
}

std::vector<double> Config::get_real_list(const std::string & key) const
{
  std::vector<double> out;
  for (const auto & item : split_list(get(key))) {
    double d = 0.0;
    parse_num(item, d);
    out.push_back(d);
  }
  return out;
}

std::vector<int> Config::get_int_list(const std::string & key) const
{
  std::vector<int> out;
  for (const auto & item : split_list(get(key))) {
    int i = 0;
    parse_num(item, i);
    out.push_back(i);
  }
  return out;
}

void Config::load_file(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw DataError(path.string() + ": cannot open config file");
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const auto body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected key=value");
    }
    try {
      const auto key = trim(body.substr(0, eq));
      auto value = trim(body.substr(eq + 1));
      const auto * spec = find_key(key);
      if (spec && spec->type == VT::path && !value.empty() &&
          std::filesystem::path(value).is_relative()) {
        value = std::filesystem::absolute(path.parent_path() / value).lexically_normal().string();
      }
      set(key, value);
    } catch (const ConfigError & e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

void Config::write_manifest(std::ostream & out) const
{
  for (const auto & k : config_schema()) {
    out << k.name << '=' << values_.at(k.name) << '\n';
  }
}

void Config::write_manifest(const std::filesystem::path & path) const
{
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw DataError(path.string() + ": cannot open for writing");
  }
  write_manifest(out);
}

SceneConfig Config::scene() const
{
  SceneConfig s;
  s.shape = {static_cast<int>(get_int("scene.width")), static_cast<int>(get_int("scene.height"))};
  s.kind = parse_scene_kind(get("scene.kind"));
  s.velocity = {get_real("scene.vx"), get_real("scene.vy")};
  s.bg_velocity = {get_real("scene.bg_vx"), get_real("scene.bg_vy")};
  s.seed = get_uint("seed");
  s.frame_rate = get_real("scene.frame_rate");
  s.duration_s = get_real("scene.duration");
  s.sim_substeps = static_cast<int>(get_int("scene.substeps"));
  s.square_size = static_cast<int>(get_int("scene.square_size"));
  s.intensity_lo = get_real("scene.lo");
  s.intensity_hi = get_real("scene.hi");
  s.min_wavelength = get_real("scene.min_wavelength");
  s.max_wavelength = get_real("scene.max_wavelength");
  s.fg_intensity = get_real("scene.fg_intensity");
  return s;
}

DvsParams Config::dvs() const
{
  return {get_real("dvs.contrast"), get_real("dvs.refractory_us"), get_real("dvs.log_eps")};
}

LeakyParams Config::leaky() const
{
  LeakyParams p;
  p.tau_us = get_real("leaky.tau_us");
  p.smooth_k = static_cast<int>(get_int("leaky.smooth_k"));
  p.act_threshold = get_real("leaky.act_threshold");
  p.gain = get_real("leaky.gain");
  return p;
}

FarnebackParams Config::farneback() const
{
  FarnebackParams p;
  p.pyramid_levels = static_cast<int>(get_int("farneback.levels"));
  p.pyr_scale = get_real("farneback.pyr_scale");
  p.poly_n = static_cast<int>(get_int("farneback.poly_n"));
  p.poly_sigma = get_real("farneback.poly_sigma");
  p.avg_window = static_cast<int>(get_int("farneback.avg_window"));
  p.iterations = static_cast<int>(get_int("farneback.iterations"));
  p.det_eps = get_real("farneback.det_eps");
  return p;
}

FusionParams Config::fusion() const
{
  FusionParams p;
  p.thresh_farneback = get_real("fusion.thresh_farneback");
  p.thresh_leakycnn = get_real("fusion.thresh_leakycnn");
  p.thresh_confidence = get_real("fusion.thresh_confidence");
  p.rho = get_real("fusion.rho");
  p.accumulation =
    get("fusion.accumulation") == "single" ? Accumulation::single : Accumulation::two_level;
  return p;
}

RunConfig Config::run() const
{
  RunConfig r;
  r.leaky = leaky();
  r.farneback = farneback();
  r.fusion = fusion();
  r.rate_multiplier = static_cast<int>(get_int("run.rate_multiplier"));
  r.eval_mode = parse_eval_mode(get("run.eval_mode"));
  r.event_pipeline = get_bool("run.event_pipeline");
  r.fast_speed = get_real("run.fast_speed");
  return r;
}

}  // namespace fuseflow
