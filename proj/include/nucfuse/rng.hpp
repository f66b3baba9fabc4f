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

#pragma once

#include <cstdint>

namespace nucfuse {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

/// Value number `counter` (1-based) of the SplitMix64 stream started at `seed`.
/// Random access makes this usable from parallel loops without shared state.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t counter) {
    return splitmix64_mix(seed + counter * kSplitMixGamma);
}

/// 53-bit uniform double in [0, 1).
constexpr double to_unit_double(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Standard normal from two stream positions (Box-Muller, cosine branch).
double counter_normal(std::uint64_t seed, std::uint64_t index);

/// Sequential view of a SplitMix64 stream. Every draw advances the counter by
/// exactly one position (normal draws by two), so the sequence of draws is a
/// documented function of the seed alone.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() { return counter_hash(seed_, ++counter_); }
    double uniform01() { return to_unit_double(next_u64()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);
    /// Uniform integer in [lo, hi], inclusive.
    long long uniform_int(long long lo, long long hi);
    bool bernoulli(double p) { return uniform01() < p; }
    double normal();

    /// Independent child stream keyed by `stream`; does not advance this one.
    CounterRng fork(std::uint64_t stream) const {
        return CounterRng(splitmix64_mix(seed_ ^ splitmix64_mix(stream + kSplitMixGamma)));
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace nucfuse
