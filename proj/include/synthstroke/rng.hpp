/*
 * synthstroke
 *
 * Copyright 2026 The synthstroke Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

/*
 * Counter-based random streams.
 *
 * A stream is a 64-bit key plus a draw counter. Draw k of a stream is
 * mix(key + (k + 1) * golden), the SplitMix64 output function, so any draw
 * is a pure function of (key, k). Child keys are hashed from the parent key,
 * a text label and an integer index; a stream's draws therefore depend only
 * on the master seed and its derivation path, never on the order in which
 * sibling streams were created or consumed.
 */

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "synthstroke/error.hpp"

namespace synthstroke {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// FNV-1a
inline constexpr std::uint64_t hash_label(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace detail

struct PathStep
{
    std::string label;
    std::uint64_t index = 0;
};

class RngStream
{
  public:
    explicit RngStream(std::uint64_t master_seed = 0)
        : seed_(master_seed), key_(detail::mix64(master_seed ^ 0x5DEECE66Dull))
    {
    }

    /// Child stream determined by this stream's path plus (label, index). Does not
    /// consume draws from the parent.
    RngStream derive(std::string_view label, std::uint64_t index) const
    {
        RngStream child(*this);
        const std::uint64_t k1 = detail::mix64(key_ ^ detail::hash_label(label));
        child.key_ = detail::mix64(k1 + (index + 1) * 0xD1B54A32D192ED03ull);
        child.counter_ = 0;
        child.path_.push_back({std::string(label), index});
        return child;
    }

    std::uint64_t next_u64() noexcept
    {
        ++counter_;
        return detail::mix64(key_ + counter_ * detail::kGolden);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b)
    {
        if (!(a <= b))
            throw InvalidArgumentError("uniform: requires a <= b");
        const double u = uniform01();
        return a == b ? a : a + (b - a) * u;
    }

    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi)
    {
        if (lo > hi)
            throw InvalidArgumentError("uniform_int: requires lo <= hi");
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t r = next_u64();
        if (span == 0)
            return static_cast<std::int64_t>(r);
        // 128-bit multiply-shift
        const auto m = static_cast<unsigned __int128>(r) * span;
        return lo + static_cast<std::int64_t>(m >> 64);
    }

    /// Box-Muller; consumes two draws.
    double normal(double mu, double sigma)
    {
        if (!(sigma >= 0))
            throw InvalidArgumentError("normal: requires sigma >= 0");
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        return sigma == 0 ? mu : mu + sigma * z;
    }

    bool bernoulli(double p)
    {
        if (!(p >= 0 && p <= 1))
            throw InvalidArgumentError("bernoulli: requires p in [0,1]");
        return uniform01() < p;
    }

    /// 10^n with n ~ Normal(mu, sigma).
    double log10_normal(double mu, double sigma) { return std::pow(10.0, normal(mu, sigma)); }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }
    const std::vector<PathStep>& path() const noexcept { return path_; }

    std::string path_string() const
    {
        std::string s = std::to_string(seed_);
        for (const auto& p : path_)
            s += "/" + p.label + ":" + std::to_string(p.index);
        return s;
    }

  private:
    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::vector<PathStep> path_;
};

} // namespace synthstroke
