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

#include "fuseflow/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fuseflow
{
namespace fs = std::filesystem;

namespace
{
std::string loc(const fs::path & path) { return path.string(); }

std::ofstream open_out(const fs::path & path)
{
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError(loc(path) + ": cannot open for writing");
  }
  return out;
}

std::vector<unsigned char> slurp(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError(loc(path) + ": cannot open for reading");
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
void put_le(std::vector<unsigned char> & buf, T value)
{
  using U = std::make_unsigned_t<T>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<unsigned char>(bits >> (8 * i)));
  }
}

template <typename T>
T get_le(const unsigned char * p)
{
  using U = std::make_unsigned_t<T>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  }
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

void put_f32(std::vector<unsigned char> & buf, float f)
{
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_le(buf, bits);
}

float get_f32(const unsigned char * p)
{
  const auto bits = get_le<std::uint32_t>(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void write_bytes(const fs::path & path, const std::vector<unsigned char> & buf)
{
  auto out = open_out(path);
  out.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) {
    throw DataError(loc(path) + ": write failed");
  }
}

void check_event(const EventStream & s, const Event & e, std::uint64_t prev_t, std::size_t index,
                 const std::string & where)
{
  if (e.x >= s.shape.width || e.y >= s.shape.height) {
    throw DataError(
      where + ": event " + std::to_string(index) + " at (" + std::to_string(e.x) + "," +
      std::to_string(e.y) + ") outside " + std::to_string(s.shape.width) + "x" +
      std::to_string(s.shape.height));
  }
  if (e.p != 1 && e.p != -1) {
    throw DataError(
      where + ": event " + std::to_string(index) + " has polarity " + std::to_string(e.p));
  }
  if (index > 0 && e.t < prev_t) {
    throw DataError(
      where + ": event " + std::to_string(index) + " timestamp " + std::to_string(e.t) +
      " precedes " + std::to_string(prev_t));
  }
}

template <typename T>
bool parse_number(std::string_view s, T & out)
{
  const auto * first = s.data();
  const auto * last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}
}  // namespace

void validate_events(const EventStream & stream)
{
  std::uint64_t prev = 0;
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    check_event(stream, stream.events[i], prev, i, "event stream");
    prev = stream.events[i].t;
  }
}

EventFormat parse_event_format(const std::string & name)
{
  if (name == "csv") {
    return EventFormat::csv;
  }
  if (name == "bin") {
    return EventFormat::bin;
  }
  throw std::invalid_argument("unknown event format '" + name + "' (expected csv or bin)");
}

EventFormat event_format_for(const fs::path & path)
{
  const auto ext = path.extension().string();
  return (ext == ".bin" || ext == ".evt") ? EventFormat::bin : EventFormat::csv;
}

void write_events_bin(const fs::path & path, const EventStream & stream)
{
  validate_events(stream);
  if (stream.shape.width > 0xFFFF || stream.shape.height > 0xFFFF) {
    throw DataError(loc(path) + ": grid too large for EVT1");
  }
  std::vector<unsigned char> buf;
  buf.reserve(kEvtHeaderBytes + kEvtRecordBytes * stream.events.size());
  for (char c : {'E', 'V', 'T', '1'}) {
    buf.push_back(static_cast<unsigned char>(c));
  }
  put_le(buf, static_cast<std::uint16_t>(stream.shape.width));
  put_le(buf, static_cast<std::uint16_t>(stream.shape.height));
  put_le(buf, static_cast<std::uint64_t>(stream.events.size()));
  for (const auto & e : stream.events) {
    put_le(buf, e.t);
    put_le(buf, e.x);
    put_le(buf, e.y);
    put_le(buf, e.p);
  }
  write_bytes(path, buf);
}

EventStream read_events_bin(const fs::path & path)
{
  const auto buf = slurp(path);
  if (buf.size() < kEvtHeaderBytes) {
    throw DataError(loc(path) + ": truncated EVT1 header");
  }
  if (std::memcmp(buf.data(), "EVT1", 4) != 0) {
    throw DataError(loc(path) + ": bad magic (expected EVT1)");
  }
  EventStream s;
  s.shape.width = get_le<std::uint16_t>(&buf[4]);
  s.shape.height = get_le<std::uint16_t>(&buf[6]);
  const auto count = get_le<std::uint64_t>(&buf[8]);
  const std::size_t payload = buf.size() - kEvtHeaderBytes;
  if (payload % kEvtRecordBytes != 0 || payload / kEvtRecordBytes != count) {
    throw DataError(
      loc(path) + ": header declares " + std::to_string(count) + " events but payload holds " +
      std::to_string(payload) + " bytes");
  }
  s.events.resize(count);
  const unsigned char * p = buf.data() + kEvtHeaderBytes;
  std::uint64_t prev = 0;
  for (std::size_t i = 0; i < count; ++i, p += kEvtRecordBytes) {
    Event e;
    e.t = get_le<std::uint64_t>(p);
    e.x = get_le<std::uint16_t>(p + 8);
    e.y = get_le<std::uint16_t>(p + 10);
    e.p = get_le<std::int8_t>(p + 12);
    check_event(s, e, prev, i, loc(path) + " record");
    prev = e.t;
    s.events[i] = e;
  }
  return s;
}

void write_events_csv(const fs::path & path, const EventStream & stream)
{
  validate_events(stream);
  auto out = open_out(path);
  for (const auto & e : stream.events) {
    out << e.t << ',' << e.x << ',' << e.y << ',' << static_cast<int>(e.p) << '\n';
  }
  if (!out) {
    throw DataError(loc(path) + ": write failed");
  }
}

EventStream read_events_csv(const fs::path & path, GridShape shape)
{
  std::ifstream in(path);
  if (!in) {
    throw DataError(loc(path) + ": cannot open for reading");
  }
  EventStream s;
  s.shape = shape;
  std::string line;
  std::size_t lineno = 0;
  std::uint64_t prev = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const std::string where = loc(path) + ":" + std::to_string(lineno);
    std::array<std::string_view, 4> fields;
    std::string_view rest(line);
    for (std::size_t k = 0; k < 4; ++k) {
      const auto comma = rest.find(',');
      if ((k < 3) == (comma == std::string_view::npos)) {
        throw DataError(where + ": expected 4 comma-separated fields t,x,y,p");
      }
      fields[k] = rest.substr(0, comma);
      rest = k < 3 ? rest.substr(comma + 1) : std::string_view{};
    }
    Event e;
    int x = 0, y = 0, p = 0;
    if (!parse_number(fields[0], e.t) || !parse_number(fields[1], x) ||
        !parse_number(fields[2], y) || !parse_number(fields[3], p)) {
      throw DataError(where + ": malformed number");
    }
    if (p != 1 && p != -1) {
      throw DataError(where + ": polarity must be 1 or -1, got " + std::to_string(p));
    }
    if (!shape.contains(x, y)) {
      throw DataError(where + ": coordinate (" + std::to_string(x) + "," + std::to_string(y) +
                      ") out of range");
    }
    if (!s.events.empty() && e.t < prev) {
      throw DataError(where + ": timestamp " + std::to_string(e.t) + " precedes " +
                      std::to_string(prev));
    }
    e.x = static_cast<std::uint16_t>(x);
    e.y = static_cast<std::uint16_t>(y);
    e.p = static_cast<std::int8_t>(p);
    prev = e.t;
    s.events.push_back(e);
  }
  return s;
}

void write_events(const fs::path & path, const EventStream & stream, EventFormat format)
{
  if (format == EventFormat::bin) {
    write_events_bin(path, stream);
  } else {
    write_events_csv(path, stream);
  }
}

EventStream read_events(const fs::path & path, EventFormat format, GridShape shape)
{
  return format == EventFormat::bin ? read_events_bin(path) : read_events_csv(path, shape);
}

void write_flo(const fs::path & path, const FlowField & flow)
{
  std::vector<unsigned char> buf;
  buf.reserve(12 + 8 * flow.size());
  put_f32(buf, kFloMagic);
  put_le(buf, static_cast<std::int32_t>(flow.shape.width));
  put_le(buf, static_cast<std::int32_t>(flow.shape.height));
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const bool ok = flow.valid[i];
    put_f32(buf, ok ? static_cast<float>(flow.u[i]) : static_cast<float>(kFlowSentinel));
    put_f32(buf, ok ? static_cast<float>(flow.v[i]) : static_cast<float>(kFlowSentinel));
  }
  write_bytes(path, buf);
}

FlowField read_flo(const fs::path & path)
{
  const auto buf = slurp(path);
  if (buf.size() < 12) {
    throw DataError(loc(path) + ": truncated .flo header");
  }
  if (get_f32(buf.data()) != kFloMagic) {
    throw DataError(loc(path) + ": bad .flo magic");
  }
  const auto w = get_le<std::int32_t>(&buf[4]);
  const auto h = get_le<std::int32_t>(&buf[8]);
  if (w <= 0 || h <= 0) {
    throw DataError(loc(path) + ": non-positive .flo dimensions");
  }
  GridShape shape{w, h};
  if (buf.size() - 12 != 8 * shape.size()) {
    throw DataError(
      loc(path) + ": size mismatch, header " + std::to_string(w) + "x" + std::to_string(h) +
      " needs " + std::to_string(8 * shape.size()) + " payload bytes, found " +
      std::to_string(buf.size() - 12));
  }
  FlowField f(shape);
  const unsigned char * p = buf.data() + 12;
  for (std::size_t i = 0; i < f.size(); ++i, p += 8) {
    const float u = get_f32(p);
    const float v = get_f32(p + 4);
    if (std::fabs(u) > 1e9f || std::fabs(v) > 1e9f || !std::isfinite(u) || !std::isfinite(v)) {
      f.invalidate(i);
    } else {
      f.set(i, u, v);
    }
  }
  return f;
}

void write_pgm(const fs::path & path, const ScalarMap & image)
{
  auto out = open_out(path);
  out << "P5\n" << image.shape.width << ' ' << image.shape.height << "\n255\n";
  std::vector<unsigned char> px(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    px[i] = static_cast<unsigned char>(std::lround(255.0 * std::clamp(image[i], 0.0, 1.0)));
  }
  out.write(reinterpret_cast<const char *>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) {
    throw DataError(loc(path) + ": write failed");
  }
}

ScalarMap read_pgm(const fs::path & path)
{
  const auto buf = slurp(path);
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < buf.size()) {
      if (buf[pos] == '#') {
        while (pos < buf.size() && buf[pos] != '\n') {
          ++pos;
        }
      } else if (std::isspace(buf[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < buf.size() && !std::isspace(buf[pos])) {
      tok.push_back(static_cast<char>(buf[pos++]));
    }
    return tok;
  };
  if (next_token() != "P5") {
    throw DataError(loc(path) + ": not a binary P5 PGM");
  }
  int w = 0, h = 0, maxval = 0;
  if (!parse_number(next_token(), w) || !parse_number(next_token(), h) ||
      !parse_number(next_token(), maxval) || w <= 0 || h <= 0) {
    throw DataError(loc(path) + ": malformed PGM header");
  }
  if (maxval != 255) {
    throw DataError(loc(path) + ": PGM maxval must be 255, got " + std::to_string(maxval));
  }
  ++pos;  // single whitespace after maxval
  ScalarMap img(GridShape{w, h});
  if (buf.size() < pos || buf.size() - pos != img.size()) {
    throw DataError(loc(path) + ": PGM payload size does not match " + std::to_string(w) + "x" +
                    std::to_string(h));
  }
  for (std::size_t i = 0; i < img.size(); ++i) {
    img[i] = static_cast<double>(buf[pos + i]) / 255.0;
  }
  return img;
}

void write_ppm(const fs::path & path, const RgbImage & image)
{
  auto out = open_out(path);
  out << "P6\n" << image.shape.width << ' ' << image.shape.height << "\n255\n";
  out.write(reinterpret_cast<const char *>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
  if (!out) {
    throw DataError(loc(path) + ": write failed");
  }
}

std::uint64_t FrameSequence::interval() const
{
  if (frames.size() < 2) {
    throw DataError("frame sequence needs at least two frames to define an interval");
  }
  const std::uint64_t dt = frames[1].t - frames[0].t;
  for (std::size_t i = 2; i < frames.size(); ++i) {
    const std::uint64_t d = frames[i].t - frames[i - 1].t;
    if (d + 1 < dt || d > dt + 1) {
      throw DataError("frame " + std::to_string(i) + ": non-uniform spacing (" +
                      std::to_string(d) + " us vs " + std::to_string(dt) + " us)");
    }
  }
  return dt;
}

namespace
{
std::vector<FlowSeriesEntry> read_index(const fs::path & index_file)
{
  std::ifstream in(index_file);
  if (!in) {
    throw DataError(loc(index_file) + ": cannot open index");
  }
  std::vector<FlowSeriesEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = trim(line);
    if (s.empty() || s[0] == '#') {
      continue;
    }
    std::istringstream ls(s);
    std::string ts, name, extra;
    ls >> ts >> name;
    FlowSeriesEntry e;
    if (name.empty() || (ls >> extra) || !parse_number(std::string_view(ts), e.t)) {
      throw DataError(loc(index_file) + ":" + std::to_string(lineno) +
                      ": expected 'timestamp_us filename'");
    }
    if (!entries.empty() && e.t <= entries.back().t) {
      throw DataError(loc(index_file) + ":" + std::to_string(lineno) + ": timestamp " + ts +
                      " is not strictly increasing");
    }
    e.file = index_file.parent_path() / name;
    entries.push_back(std::move(e));
  }
  return entries;
}
}  // namespace

FrameSequence read_frames(const fs::path & index_file)
{
  FrameSequence seq;
  for (const auto & entry : read_index(index_file)) {
    Frame f{entry.t, read_pgm(entry.file)};
    if (seq.frames.empty()) {
      seq.shape = f.image.shape;
    } else if (!(f.image.shape == seq.shape)) {
      throw DataError(loc(entry.file) + ": frame is " + std::to_string(f.image.shape.width) +
                      "x" + std::to_string(f.image.shape.height) + " but the sequence is " +
                      std::to_string(seq.shape.width) + "x" + std::to_string(seq.shape.height));
    }
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

void write_frames(const fs::path & dir, const std::string & index_name, const FrameSequence & seq)
{
  fs::create_directories(dir);
  std::vector<FlowSeriesEntry> entries;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05zu.pgm", i);
    write_pgm(dir / name, seq.frames[i].image);
    entries.push_back({seq.frames[i].t, name});
  }
  write_flow_index(dir / index_name, entries);
}

std::vector<FlowSeriesEntry> read_flow_index(const fs::path & index_file)
{
  return read_index(index_file);
}

void write_flow_index(const fs::path & index_file, const std::vector<FlowSeriesEntry> & entries)
{
  auto out = open_out(index_file);
  for (const auto & e : entries) {
    out << e.t << ' ' << e.file.filename().string() << '\n';
  }
}

}  // namespace fuseflow
