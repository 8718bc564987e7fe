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

#ifndef FUSEFLOW_PARALLEL_HPP
#define FUSEFLOW_PARALLEL_HPP

#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fuseflow::parallel
{
/// Sets the OpenMP team size. n <= 0 selects the runtime default.
inline void set_threads(int n)
{
#ifdef _OPENMP
  omp_set_num_threads(n > 0 ? n : omp_get_num_procs());
#else
  (void)n;
#endif
}

inline int max_threads()
{
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Contiguous [begin, end) share of `rows` for the calling thread of the
/// current parallel region (whole range outside one).
inline std::pair<int, int> row_band(int rows)
{
#ifdef _OPENMP
  const int nt = omp_get_num_threads();
  const int id = omp_get_thread_num();
#else
  const int nt = 1;
  const int id = 0;
#endif
  const int base = rows / nt;
  const int extra = rows % nt;
  const int begin = id * base + (id < extra ? id : extra);
  return {begin, begin + base + (id < extra ? 1 : 0)};
}

/// RAII override of the thread count, restored on scope exit.
class ThreadScope
{
public:
  explicit ThreadScope(int n) : saved_(max_threads()) { set_threads(n); }
  ~ThreadScope() { set_threads(saved_); }
  ThreadScope(const ThreadScope &) = delete;
  ThreadScope & operator=(const ThreadScope &) = delete;

private:
  int saved_;
};

}  // namespace fuseflow::parallel

#endif  // FUSEFLOW_PARALLEL_HPP
