// Copyright 2026 The semfuse Authors
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

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace semfuse
{

/// Raised when an operation's input violates its documented contract
/// (shape mismatch, out-of-range parameter, invalid calibration).
class ContractError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a file or document cannot be read or decoded.
class ParseError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string & message)
{
  if (!condition) {
    throw ContractError(message);
  }
}

/// Name of the environment variable that overrides the worker thread count.
inline constexpr const char * kThreadsEnv = "SEMFUSE_THREADS";

/// Worker count for internally parallel operations. Honors SEMFUSE_THREADS
/// when set to a positive integer, otherwise uses the hardware concurrency.
inline std::size_t worker_count()
{
  if (const char * env = std::getenv(kThreadsEnv); env != nullptr && *env != '\0') {
    char * end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) {
      return static_cast<std::size_t>(value);
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over [0, n) split into contiguous static blocks.
/// Callers must make each index's work independent so the result does not
/// depend on the number of workers.
template <typename Body>
void parallel_for(std::size_t n, Body && body, std::size_t workers = worker_count())
{
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, n));
  if (workers == 1 || n < 2) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = std::min(n, w * block);
    const std::size_t end = std::min(n, begin + block);
    if (begin < end) {
      pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
  }
  body(std::size_t{0}, std::min(n, block));
  for (auto & t : pool) {
    t.join();
  }
}

}  // namespace semfuse
