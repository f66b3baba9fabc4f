// Copyright 2026 The nucfuse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nucfuse/rng.hpp"

#include <cmath>
#include <numbers>

namespace nucfuse {

namespace {

double box_muller(std::uint64_t a, std::uint64_t b) {
    const double u1 = 1.0 - to_unit_double(a);  // (0, 1]
    const double u2 = to_unit_double(b);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t index) {
    return box_muller(counter_hash(seed, 2 * index + 1), counter_hash(seed, 2 * index + 2));
}

std::uint64_t CounterRng::uniform_index(std::uint64_t n) {
    const auto k = static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
    return k < n ? k : n - 1;
}

long long CounterRng::uniform_int(long long lo, long long hi) {
    if (hi <= lo) {
        next_u64();
        return lo;
    }
    return lo + static_cast<long long>(uniform_index(static_cast<std::uint64_t>(hi - lo) + 1));
}

double CounterRng::normal() {
    const auto a = next_u64();
    const auto b = next_u64();
    return box_muller(a, b);
}

}  // namespace nucfuse
