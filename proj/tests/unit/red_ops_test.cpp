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

#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace iosim;
using namespace iosim::testing;
using Code = ValidationError::Code;

namespace {

Code rejection(CampaignSpec const &spec, std::vector<Cyberpersona> const &personas)
{
  try
  {
    validate_campaign(spec, personas);
  }
  catch (ValidationError const &ex)
  {
    return ex.code();
  }
  ADD_FAILURE() << "campaign unexpectedly accepted";
  return Code::EmptyTopic;
}

CampaignSpec release_spec()
{
  return ExperimentMatrix::default_campaigns().at(Workflow::Release);
}

Narrative greek()
{
  return Narrative::from_statement("g", "alpha beta gamma delta epsilon zeta eta theta iota kappa", "trade");
}

Message message(MessageId id, std::string text, bool red = false, std::string topic = "trade")
{
  Message m;
  m.id            = id;
  m.author        = 100 + id;
  m.text          = std::move(text);
  m.topic         = std::move(topic);
  m.author_is_red = red;
  return m;
}

struct StepFixture
{
  Workflow workflow;
  ValidatedPlan plan;
  Cyberpersona persona{make_persona(500, {"economy", "politics"}, 25)};
  ActionRow row{0.26, 0.07, 0.04, 0.03, 0.08, 0.52};
  RedAgentPolicy policy;

  explicit StepFixture(Workflow w)
    : workflow(w)
  {
    CampaignSpec spec  = ExperimentMatrix::default_campaigns().at(w);
    spec.topic         = "trade";
    spec.narrative     = w == Workflow::Release ? std::optional<Narrative>(greek()) : std::nullopt;
    plan               = validate_campaign(spec, std::vector<Cyberpersona>{make_persona(1, {"economy", "politics"}, 25)});
    policy.persona_id  = persona.id;
    policy.workflow    = w;
    policy.phase       = w == Workflow::Release ? Phase::Acting : Phase::Observing;
    policy.target_narrative = spec.narrative;
  }

  void activate()
  {
    policy.phase            = Phase::Acting;
    policy.target_narrative = greek();
    StubBackend stub;
    policy.counter_narrative = derive_counter_narrative(greek(), stub);
  }

  std::vector<Action> step(std::vector<Message const *> const &feed, std::uint64_t seed = 1)
  {
    StubBackend stub;
    Rng rng(seed);
    RedStepContext ctx{plan, persona, row, feed};
    switch (workflow)
    {
    case Workflow::Release:
      return red_step_release(policy, ctx, stub, rng);
    case Workflow::Support:
      return red_step_support(policy, ctx, stub, rng);
    case Workflow::Counter:
      return red_step_counter(policy, ctx, stub, rng);
    }
    return {};
  }
};

std::size_t count_kind(std::vector<Action> const &acts, ActionKind k)
{
  return static_cast<std::size_t>(std::count_if(acts.begin(), acts.end(), [&](Action const &a) { return a.kind == k; }));
}

}  // namespace

TEST(ValidateCampaign, ReleaseWithNarrativeAccepted)
{
  auto const osn  = make_osn(200, 1);
  auto const plan = validate_campaign(release_spec(), osn.personas);
  EXPECT_EQ(plan.objective, "Divide");
  EXPECT_EQ(plan.spec.objective, "Divide");
  EXPECT_GT(plan.audience_size, 0u);
}

TEST(ValidateCampaign, DefaultObjectivesPerWorkflow)
{
  auto const osn = make_osn(200, 1);
  EXPECT_EQ(validate_campaign(ExperimentMatrix::default_campaigns().at(Workflow::Support), osn.personas).objective,
            "Facilitate State Propaganda");
  EXPECT_EQ(validate_campaign(ExperimentMatrix::default_campaigns().at(Workflow::Counter), osn.personas).objective,
            "Dismiss");
  auto custom      = release_spec();
  custom.objective = "Distract";
  EXPECT_EQ(validate_campaign(custom, osn.personas).objective, "Distract");
}

TEST(ValidateCampaign, EachRuleHasItsOwnError)
{
  auto const ps = make_osn(200, 1).personas;

  auto s      = release_spec();
  s.narrative = std::nullopt;
  EXPECT_EQ(rejection(s, ps), Code::MissingNarrative);

  s           = ExperimentMatrix::default_campaigns().at(Workflow::Support);
  s.narrative = Narrative::from_statement("p", "Tariffs protect workers", "trade");
  EXPECT_EQ(rejection(s, ps), Code::PresetNarrative);

  s                          = release_spec();
  s.target_audience.age_min  = 90;
  s.target_audience.age_max  = 99;
  EXPECT_EQ(rejection(s, ps), Code::EmptyAudience);

  s       = release_spec();
  s.topic = " ";
  EXPECT_EQ(rejection(s, ps), Code::EmptyTopic);

  s             = release_spec();
  s.red_density = 0.6;
  EXPECT_EQ(rejection(s, ps), Code::DensityOutOfRange);
  s.red_density = -0.1;
  EXPECT_EQ(rejection(s, ps), Code::DensityOutOfRange);

  s                     = release_spec();
  s.alignment_threshold = 1.5;
  EXPECT_EQ(rejection(s, ps), Code::ThresholdOutOfRange);

  s               = release_spec();
  s.observe_ticks = 0;
  EXPECT_EQ(rejection(s, ps), Code::BadObserveWindow);

  s       = release_spec();
  s.topic = "trade";
  EXPECT_EQ(rejection(s, ps), Code::NarrativeTopicMismatch);
}

TEST(PrepareCampaign, ZeroDensityLeavesGraphAlone)
{
  auto const osn  = make_osn(100, 2);
  auto spec       = release_spec();
  spec.red_density = 0.0;
  auto const prep = prepare_campaign(validate_campaign(spec, osn.personas), osn.graph, osn.personas,
                                     DemographicsConfig::defaults(), GraphConfig{});
  EXPECT_EQ(prep.graph, osn.graph);
  EXPECT_TRUE(prep.policies.empty());
  EXPECT_TRUE(prep.red_ids.empty());
}

TEST(PrepareCampaign, RedCountMatchesDensityShare)
{
  EXPECT_EQ(red_account_count(1000, 0.04), 42u);
  EXPECT_EQ(red_account_count(200, 0.45), 164u);
  EXPECT_EQ(red_account_count(200, 0.0), 0u);
  for (double d : {0.04, 0.06, 0.08, 0.15, 0.30, 0.45})
  {
    for (std::size_t n : {50u, 200u, 1000u})
    {
      auto const r = static_cast<double>(red_account_count(n, d));
      // Within one account of the exact share.
      EXPECT_LE(std::abs(r - d * (static_cast<double>(n) + r)), 1.0) << n << " " << d;
    }
  }
}

TEST(PrepareCampaign, ReleaseAccountsStartActing)
{
  auto const osn  = make_osn(1000, 3);
  auto const prep = make_campaign(osn, Workflow::Release, 0.04, 3);
  ASSERT_EQ(prep.policies.size(), 42u);
  EXPECT_EQ(prep.personas.size(), 1042u);
  EXPECT_EQ(prep.graph.node_count(), 1042u);
  for (auto const &pol : prep.policies)
  {
    EXPECT_EQ(pol.phase, Phase::Acting);
    ASSERT_TRUE(pol.target_narrative.has_value());
    EXPECT_EQ(*pol.target_narrative, *prep.plan.spec.narrative);
  }
  for (std::size_t i = 1000; i < prep.personas.size(); ++i)
  {
    auto const &p = prep.personas[i];
    EXPECT_TRUE(p.is_red);
    EXPECT_TRUE(prep.plan.spec.target_audience.matches(p)) << p.id;
    EXPECT_FALSE(prep.graph.followers(p.id).empty());
  }
  for (auto const &e : osn.graph.edges())
  {
    EXPECT_TRUE(prep.graph.has_edge(e.first, e.second));
  }
}

TEST(PrepareCampaign, ReactiveAccountsStartObserving)
{
  auto const osn = make_osn(200, 3);
  for (auto w : {Workflow::Support, Workflow::Counter})
  {
    auto const prep = make_campaign(osn, w, 0.08, 3);
    ASSERT_FALSE(prep.policies.empty());
    for (auto const &pol : prep.policies)
    {
      EXPECT_EQ(pol.phase, Phase::Observing);
      EXPECT_FALSE(pol.target_narrative.has_value());
    }
  }
}

TEST(PrepareCampaign, Deterministic)
{
  auto const osn = make_osn(150, 4);
  auto const a   = make_campaign(osn, Workflow::Support, 0.15, 4);
  auto const b   = make_campaign(osn, Workflow::Support, 0.15, 4);
  EXPECT_EQ(a.graph, b.graph);
  EXPECT_EQ(a.personas, b.personas);
}

TEST(ReleaseStep, EmptyFeedPostDraw)
{
  StepFixture f(Workflow::Release);
  f.row           = {0, 1, 0, 0, 0, 0};
  auto const acts = f.step({});
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_EQ(acts[0].kind, ActionKind::Post);
  std::size_t hits = 0;
  auto const words = content_words(*acts[0].text);
  for (auto const &k : greek().keyword_set)
  {
    hits += contains_word(words, k) ? 1 : 0;
  }
  EXPECT_GE(hits, 2u);
}

TEST(ReleaseStep, NeverLikesOrShares)
{
  StepFixture f(Workflow::Release);
  f.row        = {0, 0, 0, 0.5, 0.5, 0};
  auto const m = message(1, "alpha beta gamma");
  for (std::uint64_t s = 0; s < 50; ++s)
  {
    EXPECT_TRUE(f.step({&m}, s).empty());
  }
  f.row = {0.2, 0.2, 0.2, 0.2, 0.2, 0};
  for (std::uint64_t s = 0; s < 200; ++s)
  {
    for (auto const &a : f.step({&m}, s))
    {
      EXPECT_TRUE(a.kind == ActionKind::Post || a.kind == ActionKind::Reply || a.kind == ActionKind::Read);
    }
  }
}

TEST(ReleaseStep, ReplyDrawAnswersFeedHead)
{
  StepFixture f(Workflow::Release);
  f.row            = {0, 0, 1, 0, 0, 0};
  auto const head  = message(4, "something about trade");
  auto const other = message(5, "another");
  auto const acts  = f.step({&head, &other});
  ASSERT_EQ(acts.size(), 2u);
  EXPECT_EQ(acts[0].kind, ActionKind::Read);
  EXPECT_EQ(acts[1].kind, ActionKind::Reply);
  EXPECT_EQ(acts[1].target, MessageId{4});
}

TEST(SupportStep, ObservingEmitsNothing)
{
  StepFixture f(Workflow::Support);
  auto const m = message(1, "alpha beta gamma delta");
  EXPECT_TRUE(f.step({&m}).empty());
  EXPECT_EQ(f.policy.observed_posts, (std::vector<std::string>{m.text}));
  // Already observed ids and off-topic or red posts are not collected twice.
  auto const off = message(2, "off topic", false, "sports");
  auto const red = message(3, "red post", true);
  EXPECT_TRUE(f.step({&m, &off, &red}).empty());
  EXPECT_EQ(f.policy.observed_posts.size(), 1u);
}

TEST(SupportStep, AlignedMessageIsLikedAndShared)
{
  StepFixture f(Workflow::Support);
  f.activate();
  auto const aligned = message(1, "alpha beta gamma delta epsilon zeta eta theta iota");
  ASSERT_DOUBLE_EQ(jaccard(content_words(aligned.text), greek().keyword_set), 0.9);
  auto const acts = f.step({&aligned});
  EXPECT_EQ(count_kind(acts, ActionKind::Like), 1u);
  EXPECT_EQ(count_kind(acts, ActionKind::Share), 1u);
  for (auto const &a : acts)
  {
    if (a.kind == ActionKind::Like || a.kind == ActionKind::Share)
    {
      EXPECT_EQ(a.target, MessageId{1});
      ASSERT_TRUE(a.alignment_score.has_value());
      EXPECT_DOUBLE_EQ(*a.alignment_score, 0.9);
    }
  }
}

TEST(SupportStep, UnalignedMessageOnlyRead)
{
  StepFixture f(Workflow::Support);
  f.activate();
  auto const weak = message(1, "alpha");
  ASSERT_DOUBLE_EQ(jaccard(content_words(weak.text), greek().keyword_set), 0.1);
  auto const acts = f.step({&weak});
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_EQ(acts[0].kind, ActionKind::Read);
}

TEST(SupportStep, AuthoringRateFollowsProbability)
{
  StepFixture f(Workflow::Support);
  f.activate();
  auto const aligned = message(1, "alpha beta gamma delta epsilon zeta eta theta iota kappa");
  std::size_t authored = 0;
  int const n          = 2000;
  for (int s = 0; s < n; ++s)
  {
    auto const acts = f.step({&aligned}, static_cast<std::uint64_t>(s));
    authored += count_kind(acts, ActionKind::Reply) + count_kind(acts, ActionKind::Post);
    for (auto const &a : acts)
    {
      if (a.kind == ActionKind::Reply || a.kind == ActionKind::Post)
      {
        EXPECT_EQ(a.p_author, 0.5);
      }
    }
  }
  EXPECT_NEAR(static_cast<double>(authored) / n, 0.5, 2.5758 * std::sqrt(0.25 / n));
}

TEST(CounterStep, ObservingAtStartIsSilent)
{
  StepFixture f(Workflow::Counter);
  auto const m = message(1, "alpha beta gamma");
  EXPECT_TRUE(f.step({&m}).empty());
}

TEST(CounterStep, OneReplyPerAlignedMessage)
{
  StepFixture f(Workflow::Counter);
  f.activate();
  auto const a    = message(1, "alpha beta gamma delta epsilon zeta eta theta");
  auto const b    = message(2, "alpha beta gamma delta epsilon zeta eta theta iota kappa");
  auto const weak = message(3, "kappa");
  auto const acts = f.step({&a, &weak, &b});
  EXPECT_EQ(count_kind(acts, ActionKind::Reply), 2u);
  EXPECT_EQ(count_kind(acts, ActionKind::Post), 0u);
  EXPECT_EQ(count_kind(acts, ActionKind::Like), 0u);
  EXPECT_EQ(count_kind(acts, ActionKind::Share), 0u);
  std::vector<MessageId> targets;
  for (auto const &x : acts)
  {
    if (x.kind == ActionKind::Reply)
    {
      targets.push_back(*x.target);
      EXPECT_GE(*x.alignment_score, f.plan.spec.alignment_threshold);
      // Replies argue the counter-narrative.
      auto const w = content_words(*x.text);
      EXPECT_TRUE(contains_word(w, "not")) << *x.text;
    }
  }
  EXPECT_EQ(targets, (std::vector<MessageId>{1, 2}));
}

TEST(StepFunctions, RejectForeignPolicies)
{
  StepFixture f(Workflow::Release);
  StubBackend stub;
  Rng rng(1);
  std::vector<Message const *> feed;
  RedStepContext ctx{f.plan, f.persona, f.row, feed};
  EXPECT_THROW(red_step_support(f.policy, ctx, stub, rng), InputError);
  EXPECT_THROW(red_step_counter(f.policy, ctx, stub, rng), InputError);
}

TEST(Identification, BroadcastsOnceToAllPolicies)
{
  auto const osn = make_osn(200, 5);
  auto prep      = make_campaign(osn, Workflow::Counter, 0.08, 5);
  StubBackend stub;
  EXPECT_FALSE(identify_and_broadcast(prep.policies, prep.plan, stub).has_value());
  prep.policies.back().observed_posts = {"Western military aid helps Ukraine defend its sovereignty",
                                         "Western military aid helps Ukraine defend itself"};
  auto const found = identify_and_broadcast(prep.policies, prep.plan, stub);
  ASSERT_TRUE(found.has_value());
  EXPECT_EQ(found->first, prep.policies.back().persona_id);
  for (auto const &p : prep.policies)
  {
    EXPECT_EQ(p.phase, Phase::Acting);
    EXPECT_EQ(*p.target_narrative, found->second);
    ASSERT_TRUE(p.counter_narrative.has_value());
    EXPECT_EQ(p.counter_narrative->topic, "ukraine");
  }
  // Acting never reverts and identification does not repeat.
  prep.policies.front().observed_posts = {"something else entirely"};
  EXPECT_FALSE(identify_and_broadcast(prep.policies, prep.plan, stub).has_value());
  EXPECT_EQ(prep.policies.front().phase, Phase::Acting);
}

TEST(Workflow, NamesParseCaseInsensitively)
{
  EXPECT_EQ(workflow_from_string("release"), Workflow::Release);
  EXPECT_EQ(workflow_from_string("SUPPORT"), Workflow::Support);
  EXPECT_EQ(workflow_from_string("Counter"), Workflow::Counter);
  EXPECT_FALSE(workflow_from_string("amplify").has_value());
}
