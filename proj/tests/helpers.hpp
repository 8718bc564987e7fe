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

#ifndef FUSEFLOW_TESTS_HELPERS_HPP
#define FUSEFLOW_TESTS_HELPERS_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "fuseflow/core.hpp"

namespace testing
{
/// Fresh, empty scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string & name)
{
  const auto dir = std::filesystem::path(FUSEFLOW_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path & p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline fuseflow::FlowField random_flow(fuseflow::GridShape s, std::mt19937_64 & rng,
                                       double scale = 10.0, double invalid_fraction = 0.2)
{
  std::uniform_real_distribution<double> uni(-scale, scale);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  fuseflow::FlowField f(s);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (coin(rng) >= invalid_fraction) {
      f.set(i, uni(rng), uni(rng));
    }
  }
  return f;
}

inline bool bit_equal(const fuseflow::FlowField & a, const fuseflow::FlowField & b)
{
  return a.shape == b.shape && a.u == b.u && a.v == b.v && a.valid == b.valid;
}

}  // namespace testing

#endif  // FUSEFLOW_TESTS_HELPERS_HPP
