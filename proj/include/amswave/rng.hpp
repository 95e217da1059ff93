/*
   Copyright 2026 The amswave Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace amswave {

/**
 * Philox4x32-10 block function (Salmon et al., SC'11).
 *
 * Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits.
 */
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key)
{
    constexpr std::uint32_t M0 = 0xD2511F53u;
    constexpr std::uint32_t M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u;
    constexpr std::uint32_t W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{M0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{M1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

/// splitmix64 finalizer, used to derive stream identifiers.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/**
 * Counter-based random stream.
 *
 * The key is the experiment seed, the upper half of the Philox counter is the
 * stream id and the lower half is the consumption position. Every draw
 * (uniform or Gaussian) consumes exactly one Philox block, so `counter()` is
 * the number of draws taken so far and a stream can be copied and replayed
 * from any position.
 */
class RngStream {
  public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter = 0)
        : seed_(seed), stream_id_(stream_id), counter_(counter)
    {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t counter() const { return counter_; }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform()
    {
        const auto b = next_block();
        return to_unit(b[0], b[1]);
    }

    /// Standard normal, Box-Muller cosine branch of one block.
    double normal()
    {
        const auto b = next_block();
        const double u1 = 1.0 - to_unit(b[0], b[1]);  // (0, 1]
        const double u2 = to_unit(b[2], b[3]);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Exponential with the given rate.
    double exponential(double rate) { return -std::log(1.0 - uniform()) / rate; }

    /// Raw 128 bits; also one draw.
    std::array<std::uint32_t, 4> next_block()
    {
        const std::array<std::uint32_t, 4> ctr{
            static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
            static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
        const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                               static_cast<std::uint32_t>(seed_ >> 32)};
        ++counter_;
        return philox4x32(ctr, key);
    }

    /// Independent child stream i; the parent is left untouched.
    RngStream split(std::uint64_t i) const
    {
        return RngStream(seed_, mix64(stream_id_ ^ mix64(counter_ ^ mix64(i))));
    }

    friend bool operator==(const RngStream&, const RngStream&) = default;

  private:
    static double to_unit(std::uint32_t lo, std::uint32_t hi)
    {
        const std::uint64_t x = (std::uint64_t{hi} << 32) | lo;
        return static_cast<double>(x >> 11) * 0x1.0p-53;
    }

    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t counter_ = 0;
};

/// What a stream is used for. Part of the stream id derivation.
enum class Purpose : std::uint64_t {
    Lifetime = 1,   // one per particle lifetime: initial draw (if any) then path noise
    Selection = 2,  // AMS / Fleming-Viot parent choices
    Naive = 3,      // i.i.d. baseline paths
    Committor = 4,  // nested committor samples
    Semigroup = 5,  // level-indexed semigroup samples
    Wave = 6,       // level-indexed path demos
    Quadrature = 7, // outer clouds of the variance formula
    Synthetic = 8,  // test-only samplers
};

/// Stream for (seed, replicate, purpose, index). Distinct tuples give distinct ids.
inline RngStream make_stream(std::uint64_t seed, std::uint64_t replicate, Purpose purpose,
                             std::uint64_t index)
{
    std::uint64_t id = mix64(replicate);
    id = mix64(id ^ static_cast<std::uint64_t>(purpose));
    id = mix64(id ^ index);
    return RngStream(seed, id);
}

} // namespace amswave
