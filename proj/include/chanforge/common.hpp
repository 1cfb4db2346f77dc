// SPDX-License-Identifier: Apache-2.0
//
// chanforge - multi-frequency double-directional channel model toolkit
// Copyright (C) 2026 chanforge contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace chanforge {

/// Speed of light in m/s.
inline constexpr double c_light = 299792458.0;

/// Input file or record failed validation.
class data_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite value.
class divergence_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Thread budget from CHANFORGE_THREADS (0 or unset = hardware concurrency).
inline unsigned thread_budget() {
    if (const char* env = std::getenv("CHANFORGE_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? hc : 1;
}

/// Index-parallel loop.  Results must be written to per-index slots so the
/// output is identical regardless of the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const unsigned threads = std::min<std::size_t>(thread_budget(), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace chanforge
