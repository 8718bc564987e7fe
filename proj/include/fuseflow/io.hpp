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

#ifndef FUSEFLOW_IO_HPP
#define FUSEFLOW_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fuseflow/core.hpp"

namespace fuseflow
{
/// One DVS event. t in microseconds, polarity +1 / -1.
struct Event
{
  std::uint64_t t = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t p = 1;

  bool operator==(const Event &) const = default;
};

struct EventStream
{
  GridShape shape;
  std::vector<Event> events;
};

/// Throws DataError naming the first record that is out of range, has a bad
/// polarity or goes back in time.
void validate_events(const EventStream & stream);

enum class EventFormat { csv, bin };

EventFormat parse_event_format(const std::string & name);
/// "bin" for .bin / .evt files, "csv" otherwise.
EventFormat event_format_for(const std::filesystem::path & path);

// EVT1 binary layout, little-endian:
//   header  : "EVT1" | u16 width | u16 height | u64 count   (16 bytes)
//   records : u64 t | u16 x | u16 y | i8 p                  (13 bytes each)
inline constexpr std::size_t kEvtHeaderBytes = 16;
inline constexpr std::size_t kEvtRecordBytes = 13;

void write_events_bin(const std::filesystem::path & path, const EventStream & stream);
EventStream read_events_bin(const std::filesystem::path & path);

/// CSV lines "t,x,y,p". The format has no header so the grid shape is
/// supplied by the caller.
void write_events_csv(const std::filesystem::path & path, const EventStream & stream);
EventStream read_events_csv(const std::filesystem::path & path, GridShape shape);

void write_events(
  const std::filesystem::path & path, const EventStream & stream, EventFormat format);
/// `shape` is only consulted for CSV.
EventStream read_events(
  const std::filesystem::path & path, EventFormat format, GridShape shape = {});

// Middlebury .flo: f32 202021.25 | i32 width | i32 height | (f32 u, f32 v)*
inline constexpr float kFloMagic = 202021.25f;

void write_flo(const std::filesystem::path & path, const FlowField & flow);
/// Pixels with |u| > 1e9 or |v| > 1e9 decode as invalid.
FlowField read_flo(const std::filesystem::path & path);

/// Binary 8-bit P5 PGM. Intensities in [0, 1] are quantized by round(255 i).
void write_pgm(const std::filesystem::path & path, const ScalarMap & image);
ScalarMap read_pgm(const std::filesystem::path & path);

void write_ppm(const std::filesystem::path & path, const RgbImage & image);

struct Frame
{
  std::uint64_t t = 0;
  ScalarMap image;
};

struct FrameSequence
{
  GridShape shape;
  std::vector<Frame> frames;

  /// Frame period in microseconds; throws when spacing is not uniform.
  std::uint64_t interval() const;
};

/// Index lines are "timestamp_us filename"; filenames resolve relative to the
/// index file's directory. Blank lines and '#' comments are skipped.
FrameSequence read_frames(const std::filesystem::path & index_file);
void write_frames(
  const std::filesystem::path & dir, const std::string & index_name,
  const FrameSequence & seq);

/// Timestamped .flo series with the same "timestamp_us filename" index.
struct FlowSeriesEntry
{
  std::uint64_t t = 0;
  std::filesystem::path file;
};

std::vector<FlowSeriesEntry> read_flow_index(const std::filesystem::path & index_file);
void write_flow_index(
  const std::filesystem::path & index_file, const std::vector<FlowSeriesEntry> & entries);

}  // namespace fuseflow

#endif  // FUSEFLOW_IO_HPP
