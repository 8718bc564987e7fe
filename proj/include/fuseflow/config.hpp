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

#ifndef FUSEFLOW_CONFIG_HPP
#define FUSEFLOW_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fuseflow/harness.hpp"
#include "fuseflow/synth.hpp"

namespace fuseflow
{
/// Unknown key or a value that does not parse for its key.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// `path` values are strings; relative ones read from a config file resolve
// against that file's directory.
enum class ValueType { string, path, integer, unsigned_integer, real, boolean, real_list, int_list };

struct KeySpec
{
  std::string name;
  ValueType type;
  std::string default_value;
  std::string help;
  std::vector<std::string> choices = {};  // empty: any value of `type`
};

/// Every configuration key, in manifest order.
const std::vector<KeySpec> & config_schema();
const KeySpec * find_key(const std::string & name);

/// Resolved key=value configuration. Starts from schema defaults; file
/// values and then command-line values override.
class Config
{
public:
  Config();

  /// Validates against the schema; throws ConfigError naming the key.
  void set(const std::string & key, const std::string & value);
  const std::string & get(const std::string & key) const;
  bool is_set(const std::string & key) const { return !get(key).empty(); }

  std::int64_t get_int(const std::string & key) const;
  std::uint64_t get_uint(const std::string & key) const;
  double get_real(const std::string & key) const;
  bool get_bool(const std::string & key) const;
  std::vector<double> get_real_list(const std::string & key) const;
  std::vector<int> get_int_list(const std::string & key) const;

  /// One "key = value" per line; '#' starts a comment. Errors carry
  /// file:line. Relative path values resolve against the file's directory.
  void load_file(const std::filesystem::path & path);
  /// Every key, schema order, as "key=value" lines.
  void write_manifest(std::ostream & out) const;
  void write_manifest(const std::filesystem::path & path) const;

  SceneConfig scene() const;
  DvsParams dvs() const;
  LeakyParams leaky() const;
  FarnebackParams farneback() const;
  FusionParams fusion() const;
  RunConfig run() const;

private:
  std::map<std::string, std::string> values_;
};

}  // namespace fuseflow

#endif  // FUSEFLOW_CONFIG_HPP
