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

#include "iosim/content_gen.hpp"
#include "iosim/error.hpp"
#include "iosim/event_log.hpp"
#include "iosim/persona_graph.hpp"

#include <array>
#include <cmath>
#include <span>
#include <string>

namespace iosim {

inline constexpr std::array<double, 5> kLikertValues{0.0, 0.25, 0.5, 0.75, 1.0};
inline constexpr std::array<double, 2> kBinaryValues{1.0, 0.0};
inline constexpr double kBeliefFloor = 1e-9;

/// Five non-negative components, L1-normalized after flooring at 1e-9.
class BeliefVector
{
public:
  static constexpr std::size_t kSize = 5;

  BeliefVector() = default;

  /// Floors each score at kBeliefFloor and normalizes to unit L1 mass.
  static BeliefVector from_scores(std::array<double, kSize> scores)
  {
    double total = 0.0;
    for (auto &s : scores)
    {
      if (!(s >= 0.0) || !std::isfinite(s))
      {
        throw InputError("belief scores must be finite and non-negative");
      }
      s = std::max(s, kBeliefFloor);
      total += s;
    }
    BeliefVector v;
    for (std::size_t i = 0; i < kSize; ++i)
    {
      v.p_[i] = scores[i] / total;
    }
    return v;
  }

  /// Wraps an already-normalized vector, checking the contract.
  static BeliefVector from_normalized(std::array<double, kSize> const &p)
  {
    double total = 0.0;
    for (double x : p)
    {
      if (!(x >= 0.0))
      {
        throw InputError("belief vector has a negative component");
      }
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-9)
    {
      throw InputError("belief vector is not normalized");
    }
    BeliefVector v;
    v.p_ = p;
    return v;
  }

  std::array<double, kSize> const &values() const
  {
    return p_;
  }

  double operator[](std::size_t i) const
  {
    return p_[i];
  }

  std::size_t size() const
  {
    return kSize;
  }

  bool operator==(BeliefVector const &) const = default;

private:
  std::array<double, kSize> p_{0.2, 0.2, 0.2, 0.2, 0.2};
};

namespace detail {

template <std::size_t N>
double expected_score(std::array<double, N> const &dist, std::array<double, N> const &values, char const *what)
{
  double total = 0.0, score = 0.0;
  for (std::size_t k = 0; k < N; ++k)
  {
    if (!(dist[k] >= 0.0))
    {
      throw InputError(std::string(what) + " answer distribution has a negative entry");
    }
    total += dist[k];
    score += dist[k] * values[k];
  }
  if (std::abs(total - 1.0) > 1e-6)
  {
    throw InputError(std::string(what) + " answer distribution sums to " + std::to_string(total));
  }
  return score;
}

}  // namespace detail

/// Per-question scores before normalization: Likert under [0, .25, .5, .75, 1],
/// binary under [1, 0].
inline std::array<double, 5> question_scores(AnswerSet const &a)
{
  return {detail::expected_score(a.likert[0], kLikertValues, "Likert"),
          detail::expected_score(a.likert[1], kLikertValues, "Likert"),
          detail::expected_score(a.binary[0], kBinaryValues, "binary"),
          detail::expected_score(a.binary[1], kBinaryValues, "binary"),
          detail::expected_score(a.binary[2], kBinaryValues, "binary")};
}

inline BeliefVector answers_to_vector(AnswerSet const &a)
{
  return BeliefVector::from_scores(question_scores(a));
}

/// Mean of the two Likert-question scores; the scalar plotted as mean belief.
inline double agreement_score(AnswerSet const &a)
{
  auto const s = question_scores(a);
  return 0.5 * (s[0] + s[1]);
}

inline BeliefVector elicit_belief(Cyberpersona const &persona, std::span<std::string const> read_posts,
                                  std::string const &statement, GeneratorBackend const &backend)
{
  if (trim(statement).empty())
  {
    throw InputError("elicit_belief: statement must be nonempty");
  }
  return answers_to_vector(backend.elicit(persona, read_posts, statement));
}

/**
 * Jensen-Shannon divergence with base-2 logarithms, in [0, 1].
 * Zero components contribute nothing (0 log 0 = 0).
 */
inline double jensen_shannon(std::span<double const> p, std::span<double const> q)
{
  if (p.size() != q.size())
  {
    throw InputError("jensen_shannon: dimension mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    // Each index contributes a + b, which is exactly symmetric in (p, q).
    double const m = 0.5 * (p[i] + q[i]);
    double const a = p[i] > 0.0 ? p[i] * std::log2(p[i] / m) : 0.0;
    double const b = q[i] > 0.0 ? q[i] * std::log2(q[i] / m) : 0.0;
    sum += a + b;
  }
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

inline double jensen_shannon(BeliefVector const &p, BeliefVector const &q)
{
  return jensen_shannon(std::span<double const>(p.values()), std::span<double const>(q.values()));
}

}  // namespace iosim
