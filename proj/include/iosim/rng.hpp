//------------------------------------------------------------------------------
//
//   Copyright 2026 The iosim Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace iosim {

// SplitMix64 finalizer. Used to derive independent seeds and stable hashes.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept
{
  return mix64(a ^ mix64(b));
}

// FNV-1a over bytes; stable across platforms, unlike std::hash.
constexpr std::uint64_t hash_bytes(std::string_view s,
                                   std::uint64_t h = 0xcbf29ce484222325ULL) noexcept
{
  for (unsigned char c : s)
  {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stream purposes, so that one master seed yields non-overlapping streams.
enum class StreamKind : std::uint64_t
{
  Personas = 1,
  Graph    = 2,
  Attach   = 3,
  Agent    = 4,
  Red      = 5,
};

/**
 * Seeded pseudo-random stream.
 *
 * Wraps std::mt19937_64, whose output sequence is fixed by the standard.
 * Distributions are implemented here rather than through <random>
 * distribution objects, whose algorithms are implementation-defined.
 */
class Rng
{
public:
  explicit Rng(std::uint64_t seed)
    : engine_(mix64(seed))
  {}

  static Rng derive(std::uint64_t master, StreamKind kind, std::uint64_t id = 0)
  {
    return Rng(hash_combine(hash_combine(master, static_cast<std::uint64_t>(kind)), id));
  }

  std::uint64_t next_u64()
  {
    return engine_();
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform()
  {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p)
  {
    return uniform() < p;
  }

  /// Uniform integer in [lo, hi], inclusive (modulo with rejection).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi)
  {
    auto const span  = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0)
    {
      return static_cast<std::int64_t>(engine_());
    }
    auto const limit = UINT64_MAX - (UINT64_MAX % span);
    std::uint64_t r;
    do
    {
      r = engine_();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % span);
  }

  std::size_t index(std::size_t n)
  {
    return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
  }

  /// Index drawn proportionally to non-negative weights. Returns weights.size()
  /// when every weight is zero.
  std::size_t weighted(std::span<double const> weights)
  {
    double total = 0.0;
    for (double w : weights)
    {
      total += w;
    }
    if (!(total > 0.0))
    {
      return weights.size();
    }
    double const target = uniform() * total;
    double acc          = 0.0;
    std::size_t last    = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i)
    {
      if (weights[i] <= 0.0)
      {
        continue;
      }
      acc += weights[i];
      last = i;
      if (target < acc)
      {
        return i;
      }
    }
    return last;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace iosim
