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

#include "iosim/behavior.hpp"
#include "iosim/content_gen.hpp"
#include "iosim/error.hpp"
#include "iosim/event_log.hpp"
#include "iosim/persona_graph.hpp"
#include "iosim/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace iosim {

enum class Workflow
{
  Release,
  Support,
  Counter,
};

inline char const *to_string(Workflow w)
{
  switch (w)
  {
  case Workflow::Release:
    return "Release";
  case Workflow::Support:
    return "Support";
  case Workflow::Counter:
    return "Counter";
  }
  return "?";
}

/// Case-insensitive.
inline std::optional<Workflow> workflow_from_string(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto w : {Workflow::Release, Workflow::Support, Workflow::Counter})
  {
    std::string name = to_string(w);
    name[0]          = static_cast<char>(std::tolower(static_cast<unsigned char>(name[0])));
    if (s == name)
    {
      return w;
    }
  }
  return std::nullopt;
}

/// DISARM plan objective for each workflow.
inline std::string default_objective(Workflow w)
{
  switch (w)
  {
  case Workflow::Release:
    return "Divide";
  case Workflow::Support:
    return "Facilitate State Propaganda";
  case Workflow::Counter:
    return "Dismiss";
  }
  return {};
}

/// Demographic predicate over personas. Empty lists match anything.
struct TargetAudience
{
  int age_min{13};
  int age_max{120};
  std::vector<std::string> interests;
  std::vector<std::string> genders;
  std::vector<std::string> occupations;

  bool matches(Cyberpersona const &p) const
  {
    auto any_of = [](std::vector<std::string> const &allowed, std::vector<std::string> const &have) {
      if (allowed.empty())
      {
        return true;
      }
      for (auto const &h : have)
      {
        if (std::find(allowed.begin(), allowed.end(), h) != allowed.end())
        {
          return true;
        }
      }
      return false;
    };
    return p.age >= age_min && p.age <= age_max && any_of(interests, p.interests) &&
           any_of(genders, {p.gender}) && any_of(occupations, {p.occupation});
  }

  std::string description() const
  {
    std::string d = "people aged " + std::to_string(age_min) + "-" + std::to_string(age_max);
    if (!interests.empty())
    {
      d += " interested in " + join(interests, ", ");
    }
    if (!genders.empty())
    {
      d += ", gender: " + join(genders, "/");
    }
    if (!occupations.empty())
    {
      d += ", working as " + join(occupations, "/");
    }
    return d;
  }

  bool operator==(TargetAudience const &) const = default;
};

struct CampaignSpec
{
  Workflow workflow{Workflow::Release};
  std::string osn_ref;
  std::string topic;
  TargetAudience target_audience;
  std::optional<std::string> objective;
  std::optional<Narrative> narrative;
  double red_density{0.0};
  std::optional<std::int64_t> observe_ticks;  // default: 10% of total ticks
  double alignment_threshold{0.35};
  std::uint64_t seed{0};
  double support_author_p{0.5};
  std::size_t identification_sample{30};
  double max_density{0.5};
};

class ValidationError : public Error
{
public:
  enum class Code
  {
    MissingNarrative,
    PresetNarrative,
    EmptyAudience,
    EmptyTopic,
    DensityOutOfRange,
    ThresholdOutOfRange,
    BadObserveWindow,
    NarrativeTopicMismatch,
  };

  ValidationError(Code code, std::string const &what)
    : Error(what)
    , code_(code)
  {}

  Code code() const noexcept
  {
    return code_;
  }

private:
  Code code_;
};

/// A spec that passed validation, with the objective normalized.
struct ValidatedPlan
{
  CampaignSpec spec;
  std::string objective;
  std::size_t audience_size{0};
};

inline ValidatedPlan validate_campaign(CampaignSpec const &spec, std::span<Cyberpersona const> personas)
{
  using C = ValidationError::Code;
  if (trim(spec.topic).empty())
  {
    throw ValidationError(C::EmptyTopic, "campaign topic is empty");
  }
  if (spec.workflow == Workflow::Release && !spec.narrative)
  {
    throw ValidationError(C::MissingNarrative, "Release workflow requires a narrative");
  }
  if (spec.workflow != Workflow::Release && spec.narrative)
  {
    throw ValidationError(C::PresetNarrative, std::string(to_string(spec.workflow)) +
                                                  " workflow identifies its narrative at runtime; "
                                                  "a preset narrative is not allowed");
  }
  if (spec.narrative && spec.narrative->keyword_set.empty())
  {
    throw ValidationError(C::MissingNarrative, "narrative has an empty keyword set");
  }
  if (spec.narrative && !spec.narrative->topic.empty() && spec.narrative->topic != spec.topic)
  {
    throw ValidationError(C::NarrativeTopicMismatch, "narrative topic '" + spec.narrative->topic +
                                                         "' differs from campaign topic '" + spec.topic + "'");
  }
  if (!(spec.red_density >= 0.0 && spec.red_density <= spec.max_density && spec.max_density < 1.0))
  {
    throw ValidationError(C::DensityOutOfRange, "red_density " + std::to_string(spec.red_density) +
                                                    " outside [0, " + std::to_string(spec.max_density) + "]");
  }
  if (!(spec.alignment_threshold >= 0.0 && spec.alignment_threshold <= 1.0))
  {
    throw ValidationError(C::ThresholdOutOfRange, "alignment_threshold outside [0,1]");
  }
  if (spec.observe_ticks && *spec.observe_ticks < 1)
  {
    throw ValidationError(C::BadObserveWindow, "observe_ticks must be >= 1");
  }
  std::size_t audience = 0;
  for (auto const &p : personas)
  {
    if (!p.is_red && spec.target_audience.matches(p))
    {
      ++audience;
    }
  }
  if (audience == 0)
  {
    throw ValidationError(C::EmptyAudience, "target audience matches no persona in the network");
  }
  ValidatedPlan plan{spec, spec.objective && !trim(*spec.objective).empty() ? *spec.objective
                                                                           : default_objective(spec.workflow),
                     audience};
  plan.spec.objective = plan.objective;
  return plan;
}

enum class Phase
{
  Observing,
  Acting,
};

struct RedAgentPolicy
{
  AccountId persona_id{0};
  Workflow workflow{Workflow::Release};
  Phase phase{Phase::Observing};
  std::optional<Narrative> target_narrative;
  std::optional<Narrative> counter_narrative;
  std::vector<std::string> observed_posts;
  std::set<MessageId> observed_ids;
};

struct PreparedCampaign
{
  ValidatedPlan plan;
  FollowerGraph graph;
  std::vector<Cyberpersona> personas;  // benign followed by red
  std::vector<RedAgentPolicy> policies;
  std::vector<AccountId> red_ids;
};

/// Red accounts needed so that red / (benign + red) equals `density`,
/// rounded half away from zero.
inline std::size_t red_account_count(std::size_t benign, double density)
{
  if (density <= 0.0)
  {
    return 0;
  }
  return static_cast<std::size_t>(std::llround(density * static_cast<double>(benign) / (1.0 - density)));
}

namespace detail {

inline Cyberpersona sample_audience_persona(AccountId id, TargetAudience const &aud, DemographicsConfig const &demo,
                                            Rng &rng)
{
  auto p = sample_persona(id, demo, rng);
  int lo = std::max(aud.age_min, demo.age_min);
  int hi = std::min(aud.age_max, demo.age_max);
  if (lo > hi)
  {
    lo = hi = std::clamp(aud.age_min, 13, 120);
  }
  p.age = static_cast<int>(rng.uniform_int(lo, hi));
  if (!aud.interests.empty())
  {
    bool covered = std::any_of(p.interests.begin(), p.interests.end(), [&](std::string const &i) {
      return std::find(aud.interests.begin(), aud.interests.end(), i) != aud.interests.end();
    });
    if (!covered)
    {
      auto const pick = aud.interests[rng.index(aud.interests.size())];
      p.interests.front() = pick;
      p.interests.erase(std::remove(p.interests.begin() + 1, p.interests.end(), pick), p.interests.end());
    }
  }
  if (!aud.genders.empty())
  {
    p.gender = aud.genders[rng.index(aud.genders.size())];
  }
  if (!aud.occupations.empty())
  {
    p.occupation = aud.occupations[rng.index(aud.occupations.size())];
  }
  p.is_red = true;
  return p;
}

}  // namespace detail

/**
 * Creates the red accounts, wires them into the network with the benign
 * attachment rule and builds one policy per account. Red ids follow the
 * largest existing id.
 */
inline PreparedCampaign prepare_campaign(ValidatedPlan const &plan, FollowerGraph const &graph,
                                         std::span<Cyberpersona const> personas, DemographicsConfig const &demo,
                                         GraphConfig const &wiring)
{
  auto const &spec = plan.spec;
  if (!(spec.red_density >= 0.0 && spec.red_density <= spec.max_density && spec.max_density < 1.0))
  {
    throw ConfigError("red_density out of range");
  }
  PreparedCampaign out;
  out.plan = plan;
  out.personas.assign(personas.begin(), personas.end());

  std::size_t benign = 0;
  AccountId next_id  = 0;
  for (auto const &p : personas)
  {
    benign += p.is_red ? 0 : 1;
    next_id = std::max<AccountId>(next_id, p.id + 1);
  }
  auto const count = red_account_count(benign, spec.red_density);

  std::vector<Cyberpersona> red;
  for (std::size_t i = 0; i < count; ++i)
  {
    auto rng = Rng::derive(spec.seed, StreamKind::Red, i);
    red.push_back(detail::sample_audience_persona(next_id + static_cast<AccountId>(i), spec.target_audience,
                                                  demo, rng));
  }
  out.graph = attach_accounts(graph, personas, red, wiring, hash_combine(spec.seed, 0x7265640aULL));

  for (auto const &p : red)
  {
    RedAgentPolicy policy;
    policy.persona_id = p.id;
    policy.workflow   = spec.workflow;
    if (spec.workflow == Workflow::Release)
    {
      policy.phase            = Phase::Acting;
      policy.target_narrative = spec.narrative;
    }
    out.policies.push_back(std::move(policy));
    out.red_ids.push_back(p.id);
    out.personas.push_back(p);
  }
  return out;
}

/// What a red step sees: the agent's identity plus its resolved feed.
struct RedStepContext
{
  ValidatedPlan const &plan;
  Cyberpersona const &persona;
  ActionRow const &row;
  std::vector<Message const *> const &feed;
};

namespace detail {

inline std::string red_message(RedStepContext const &ctx, Narrative const &narrative, GeneratorBackend const &backend,
                               Purpose purpose, std::optional<std::string> const &context)
{
  auto bundle = compose_prompt(ctx.persona, ctx.plan.spec.target_audience.description(), ctx.plan.objective,
                               ctx.plan.spec.topic, narrative);
  return generate_message(bundle, backend, purpose, context);
}

}  // namespace detail

/**
 * Proactive seeding. One draw per tick from the account's row: read draws
 * read the feed head; post draws author a narrative post; reply draws reply
 * to the feed head (or post when the feed is empty). Share and like draws
 * are dropped. Feed content is never scored.
 */
inline std::vector<Action> red_step_release(RedAgentPolicy &policy, RedStepContext const &ctx,
                                            GeneratorBackend const &backend, Rng &rng)
{
  if (policy.workflow != Workflow::Release)
  {
    throw InputError("red_step_release called for a non-Release policy");
  }
  std::vector<Action> out;
  auto const draw = rng.weighted(ctx.row.as_array());
  auto const &n   = *policy.target_narrative;
  auto const &topic = ctx.plan.spec.topic;
  switch (draw)
  {
  case 0:
    if (!ctx.feed.empty())
    {
      out.push_back({ActionKind::Read, ctx.feed.front()->id});
    }
    break;
  case 1:
    out.push_back({ActionKind::Post, std::nullopt, detail::red_message(ctx, n, backend, Purpose::Post, std::nullopt),
                   topic});
    break;
  case 2:
    if (ctx.feed.empty())
    {
      out.push_back(
          {ActionKind::Post, std::nullopt, detail::red_message(ctx, n, backend, Purpose::Post, std::nullopt), topic});
    }
    else
    {
      auto const *head = ctx.feed.front();
      out.push_back({ActionKind::Read, head->id});
      out.push_back({ActionKind::Reply, head->id, detail::red_message(ctx, n, backend, Purpose::Reply, head->text),
                     topic});
    }
    break;
  default:
    break;
  }
  return out;
}

namespace detail {

// Observing: remember unseen feed posts/replies on the campaign topic.
inline void observe(RedAgentPolicy &policy, RedStepContext const &ctx)
{
  for (auto const *m : ctx.feed)
  {
    if (m->author_is_red || m->kind == EventKind::Share || m->topic != ctx.plan.spec.topic)
    {
      continue;
    }
    if (policy.observed_ids.insert(m->id).second)
    {
      policy.observed_posts.push_back(m->text);
    }
  }
}

}  // namespace detail

/**
 * Reactive amplification. Observing: no actions. Acting: every feed item is
 * read; benign items scoring at least the threshold are liked and shared and,
 * with probability support_author_p, answered by an aligned reply or an
 * aligned fresh post (even odds).
 */
inline std::vector<Action> red_step_support(RedAgentPolicy &policy, RedStepContext const &ctx,
                                            GeneratorBackend const &backend, Rng &rng)
{
  if (policy.workflow != Workflow::Support)
  {
    throw InputError("red_step_support called for a non-Support policy");
  }
  if (policy.phase == Phase::Observing)
  {
    detail::observe(policy, ctx);
    return {};
  }
  auto const &spec = ctx.plan.spec;
  auto const &n    = *policy.target_narrative;
  std::vector<Action> out;
  for (auto const *m : ctx.feed)
  {
    out.push_back({ActionKind::Read, m->id});
    if (m->author_is_red)
    {
      continue;
    }
    double const s = score_alignment(m->text, n, backend);
    if (s < spec.alignment_threshold)
    {
      continue;
    }
    out.push_back({ActionKind::Like, m->id, std::nullopt, std::nullopt, s});
    out.push_back({ActionKind::Share, m->id, m->text, m->topic, s});
    if (rng.bernoulli(spec.support_author_p))
    {
      if (rng.bernoulli(0.5))
      {
        out.push_back({ActionKind::Reply, m->id, detail::red_message(ctx, n, backend, Purpose::Reply, m->text),
                       spec.topic, s, spec.support_author_p});
      }
      else
      {
        out.push_back({ActionKind::Post, std::nullopt,
                       detail::red_message(ctx, n, backend, Purpose::Post, std::nullopt), spec.topic, s,
                       spec.support_author_p});
      }
    }
  }
  return out;
}

/**
 * Reply-only countering. Observing: no actions. Acting: every feed item is
 * read; each benign item scoring at least the threshold against the target
 * narrative gets exactly one reply built from the counter-narrative.
 */
inline std::vector<Action> red_step_counter(RedAgentPolicy &policy, RedStepContext const &ctx,
                                            GeneratorBackend const &backend, Rng & /*rng*/)
{
  if (policy.workflow != Workflow::Counter)
  {
    throw InputError("red_step_counter called for a non-Counter policy");
  }
  if (policy.phase == Phase::Observing)
  {
    detail::observe(policy, ctx);
    return {};
  }
  auto const &spec = ctx.plan.spec;
  std::vector<Action> out;
  for (auto const *m : ctx.feed)
  {
    out.push_back({ActionKind::Read, m->id});
    if (m->author_is_red)
    {
      continue;
    }
    double const s = score_alignment(m->text, *policy.target_narrative, backend);
    if (s < spec.alignment_threshold)
    {
      continue;
    }
    out.push_back({ActionKind::Reply, m->id,
                   detail::red_message(ctx, *policy.counter_narrative, backend, Purpose::Reply, m->text), spec.topic,
                   s});
  }
  return out;
}

/**
 * Tick-boundary identification for reactive workflows. Policies are tried in
 * ascending id order; the first successful identification is broadcast to
 * every policy, which switches to Acting. Returns the identifying account and
 * the narrative, or nothing when no policy has observed a usable post yet.
 */
inline std::optional<std::pair<AccountId, Narrative>>
identify_and_broadcast(std::vector<RedAgentPolicy> &policies, ValidatedPlan const &plan,
                       GeneratorBackend const &backend)
{
  for (auto const &p : policies)
  {
    if (p.phase == Phase::Acting)
    {
      return std::nullopt;
    }
  }
  for (auto const &p : policies)
  {
    if (p.observed_posts.empty())
    {
      continue;
    }
    Narrative found;
    try
    {
      found = identify_dominant_narrative(p.observed_posts, backend, plan.spec.identification_sample, plan.spec.topic);
    }
    catch (AnalysisError const &)
    {
      continue;
    }
    std::optional<Narrative> counter;
    if (plan.spec.workflow == Workflow::Counter)
    {
      counter = derive_counter_narrative(found, backend);
    }
    for (auto &q : policies)
    {
      q.phase             = Phase::Acting;
      q.target_narrative  = found;
      q.counter_narrative = counter;
      q.observed_posts.clear();
      q.observed_ids.clear();
    }
    return std::make_pair(p.persona_id, found);
  }
  return std::nullopt;
}

}  // namespace iosim
