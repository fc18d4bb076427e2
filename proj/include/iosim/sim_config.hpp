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

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace iosim {

struct OrganicNarrative
{
  std::string statement;
  double weight{1.0};
};

/// One organic discussion thread: benign accounts hold a fixed stance per topic.
struct DiscussionTopic
{
  std::string topic;
  std::vector<OrganicNarrative> narratives;
};

/// Statement under which beliefs are elicited. A probe without a narrative
/// resolves its statement by identification once the observation window ends.
struct Probe
{
  std::string label;
  std::string topic;
  std::optional<Narrative> narrative;
};

struct SimulationConfig
{
  Tick total_ticks{500};
  std::size_t feed_size{10};
  std::vector<double> checkpoint_fractions{0.25, 0.5, 0.75, 1.0};
  std::uint64_t seed{0};
  std::size_t short_memory_capacity{20};
  std::vector<DiscussionTopic> discussion{default_discussion()};
  // Probes evaluated in runs without a campaign (baseline). Campaign runs use
  // the campaign's own narrative.
  std::vector<Probe> baseline_probes;
  std::optional<Tick> observe_ticks;  // default: 10% of total_ticks
  std::size_t identification_sample{30};
  BackendConfig backend;

  Tick resolved_observe_ticks() const
  {
    if (observe_ticks)
    {
      return *observe_ticks;
    }
    return std::max<Tick>(1, static_cast<Tick>(std::llround(0.1 * static_cast<double>(total_ticks))));
  }

  void validate() const
  {
    if (total_ticks < 1)
    {
      throw ConfigError("total_ticks must be >= 1");
    }
    double prev = 0.0;
    for (double f : checkpoint_fractions)
    {
      if (!(f > prev && f <= 1.0))
      {
        throw ConfigError("checkpoint_fractions must be strictly increasing in (0,1]");
      }
      prev = f;
    }
    for (auto const &t : discussion)
    {
      if (t.topic.empty() || t.narratives.empty())
      {
        throw ConfigError("discussion topics need a name and at least one narrative");
      }
      for (auto const &n : t.narratives)
      {
        if (!(n.weight >= 0.0) || content_words(n.statement).empty())
        {
          throw ConfigError("discussion narrative for topic '" + t.topic + "' is invalid");
        }
      }
    }
    if (observe_ticks && *observe_ticks < 1)
    {
      throw ConfigError("observe_ticks must be >= 1");
    }
    if (identification_sample < 1)
    {
      throw ConfigError("identification_sample must be >= 1");
    }
  }

  /// Organic threads on the three campaign topics used by the default matrix.
  static std::vector<DiscussionTopic> default_discussion()
  {
    return {
        {"immigration",
         {{"Migrants strengthen the local economy and fill labor shortages", 0.6},
          {"Uncontrolled immigration overwhelms public services and housing", 0.4}}},
        {"trade",
         {{"Chinese investment brings Europe cheap goods and new factory jobs", 0.6},
          {"American tariffs protect western workers from unfair Chinese competition", 0.4}}},
        {"ukraine",
         {{"Western military aid helps Ukraine defend its sovereignty against invasion", 0.6},
          {"Sanctions against Russia hurt European families more than Moscow", 0.4}}},
    };
  }
};

/// Checkpoint ticks ceil(f * T), deduplicated and sorted.
inline std::vector<Tick> schedule_checkpoints(Tick total_ticks, std::vector<double> const &fractions)
{
  std::vector<Tick> out;
  for (double f : fractions)
  {
    // The epsilon keeps products such as 0.3 * 10 from rounding up past 3.
    auto t = static_cast<Tick>(std::ceil(f * static_cast<double>(total_ticks) - 1e-9));
    t      = std::clamp<Tick>(t, 1, total_ticks);
    out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace iosim
