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
#include "iosim/belief.hpp"
#include "iosim/content_gen.hpp"
#include "iosim/event_log.hpp"
#include "iosim/persona_graph.hpp"
#include "iosim/red_ops.hpp"
#include "iosim/rng.hpp"
#include "iosim/serialize.hpp"
#include "iosim/sim_config.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace iosim {

struct Osn
{
  std::vector<Cyberpersona> personas;
  FollowerGraph graph;
};

struct RunResult
{
  EventLog log;
  std::map<AccountId, AgentState> agents;
  std::vector<RedAgentPolicy> policies;
  std::size_t missing_elicitations{0};
};

inline std::string utc_timestamp()
{
  auto const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Serialized log with the wall-clock field blanked, for determinism checks.
inline std::string canonical_log_text(EventLog log)
{
  log.header().wall_clock.clear();
  std::ostringstream os;
  write_jsonl(log, os);
  return os.str();
}

/**
 * Discrete-tick simulation of one network, with or without a campaign.
 *
 * Each tick visits every account in ascending id order: build feed, choose
 * actions (benign automaton or red workflow step), append events, update
 * memory. Messages created at tick t become visible from tick t + 1, so the
 * visiting order does not leak same-tick content. Reactive identification
 * and belief elicitation run at tick boundaries.
 */
class Simulation
{
public:
  Simulation(SimulationConfig config, Osn const &osn, std::optional<PreparedCampaign> campaign,
             GeneratorBackend const &backend, ActionModel model = ActionModel::defaults(),
             DemographicsConfig demographics = DemographicsConfig::defaults())
    : config_(std::move(config))
    , campaign_(std::move(campaign))
    , backend_(backend)
    , model_(std::move(model))
    , demographics_(std::move(demographics))
  {
    config_.validate();
    if (campaign_)
    {
      personas_ = campaign_->personas;
      graph_    = campaign_->graph;
      for (auto const &p : osn.personas)
      {
        if (!graph_.contains(p.id))
        {
          throw InputError("campaign was not prepared against this network");
        }
      }
    }
    else
    {
      personas_ = osn.personas;
      graph_    = osn.graph;
    }
    for (auto const &p : personas_)
    {
      if (!graph_.contains(p.id))
      {
        throw InputError("persona " + std::to_string(p.id) + " missing from the follower graph");
      }
      persona_index_.emplace(p.id, &p);
    }
    checkpoints_ = schedule_checkpoints(config_.total_ticks, config_.checkpoint_fractions);
  }

  Simulation(Simulation const &)            = delete;
  Simulation &operator=(Simulation const &) = delete;

  RunResult run()
  {
    RunResult result;
    result.log = EventLog(make_header());
    EventLog &log = result.log;

    std::map<AccountId, AgentState> agents;
    std::unordered_map<AccountId, Rng> rngs;
    std::unordered_map<AccountId, std::size_t> policy_of;
    for (auto const &p : personas_)
    {
      agents.emplace(p.id, AgentState::for_persona(p, demographics_, config_.short_memory_capacity));
      rngs.emplace(p.id, Rng::derive(config_.seed, StreamKind::Agent, p.id));
    }
    std::vector<RedAgentPolicy> policies = campaign_ ? campaign_->policies : std::vector<RedAgentPolicy>{};
    for (std::size_t i = 0; i < policies.size(); ++i)
    {
      policy_of.emplace(policies[i].persona_id, i);
    }

    std::vector<Probe> probes = initial_probes();
    std::set<AccountId> reached;
    Tick const observe = campaign_ && campaign_->plan.spec.observe_ticks ? *campaign_->plan.spec.observe_ticks
                                                                         : config_.resolved_observe_ticks();

    try
    {
      for (Tick t = 1; t <= config_.total_ticks; ++t)
      {
        for (auto const id : graph_.nodes())
        {
          auto &state       = agents.at(id);
          auto const &who   = *persona_index_.at(id);
          auto const feed   = build_feed(state, graph_, log, t, config_.feed_size);
          std::vector<Message const *> feed_msgs;
          for (auto m : feed)
          {
            feed_msgs.push_back(log.message(m));
          }

          std::vector<Action> actions;
          auto pit = policy_of.find(id);
          if (pit != policy_of.end())
          {
            auto &policy = policies[pit->second];
            RedStepContext ctx{campaign_->plan, who, model_.row(state.bracket), feed_msgs};
            switch (policy.workflow)
            {
            case Workflow::Release:
              actions = red_step_release(policy, ctx, backend_, rngs.at(id));
              break;
            case Workflow::Support:
              actions = red_step_support(policy, ctx, backend_, rngs.at(id));
              break;
            case Workflow::Counter:
              actions = red_step_counter(policy, ctx, backend_, rngs.at(id));
              break;
            }
          }
          else
          {
            actions = decide_actions(state, feed, model_, rngs.at(id));
            author_benign(who, actions, log, rngs.at(id));
          }

          std::vector<Message const *> read;
          for (auto const &a : actions)
          {
            Event e;
            e.tick         = t;
            e.actor_id     = id;
            e.kind         = to_event_kind(a.kind);
            e.actor_is_red = who.is_red;
            e.text         = a.text;
            e.topic        = a.topic;
            e.alignment_score = a.alignment_score;
            e.p_author     = a.p_author;
            if (a.kind == ActionKind::Read || a.kind == ActionKind::Like)
            {
              e.message_id = a.target;
            }
            else
            {
              e.parent_id = a.target;
            }
            if (a.kind == ActionKind::Share && !e.text)
            {
              e.text = log.message(*a.target)->text;
            }
            log.append(std::move(e));
            if (a.kind == ActionKind::Read)
            {
              auto const *m = log.message(*a.target);
              read.push_back(m);
              if (!who.is_red && m->author_is_red)
              {
                reached.insert(id);
              }
            }
          }
          state = update_memory(std::move(state), actions, read);
        }

        if (!policies.empty() && policies.front().workflow != Workflow::Release && t >= observe)
        {
          if (auto found = identify_and_broadcast(policies, campaign_->plan, backend_))
          {
            Event e;
            e.tick         = t;
            e.actor_id     = found->first;
            e.kind         = EventKind::NarrativeIdentified;
            e.actor_is_red = true;
            e.topic        = found->second.topic;
            e.probe        = to_string(campaign_->plan.spec.workflow);
            e.statement    = found->second.statement;
            log.append(std::move(e));
            probes.front().narrative = found->second;
          }
          else if (policies.front().phase == Phase::Observing && t == observe)
          {
            std::clog << "iosim: tick " << t << ": no narrative identified yet, observation continues\n";
          }
        }
        if (!campaign_ && t >= observe)
        {
          resolve_baseline_probes(probes, log);
        }

        auto const cp = std::find(checkpoints_.begin(), checkpoints_.end(), t);
        if (cp != checkpoints_.end())
        {
          int const index = static_cast<int>(cp - checkpoints_.begin()) + 1;
          elicit(log, t, index, probes, agents, reached, result.missing_elicitations);
        }
      }
    }
    catch (BackendError const &ex)
    {
      log.mark_aborted(std::string("backend failure: ") + ex.what());
    }

    result.agents   = std::move(agents);
    result.policies = std::move(policies);
    return result;
  }

  std::vector<Tick> const &checkpoints() const
  {
    return checkpoints_;
  }

  std::vector<Cyberpersona> const &personas() const
  {
    return personas_;
  }

  FollowerGraph const &graph() const
  {
    return graph_;
  }

private:
  LogHeader make_header() const
  {
    LogHeader h;
    h.config_digest   = digest(to_json(config_));
    h.campaign_digest = campaign_ ? digest(to_json(campaign_->plan)) : "none";
    h.seed            = config_.seed;
    h.wall_clock      = utc_timestamp();
    h.workflow        = campaign_ ? to_string(campaign_->plan.spec.workflow) : "none";
    h.red_density     = campaign_ ? campaign_->plan.spec.red_density : 0.0;
    h.total_ticks     = config_.total_ticks;
    h.checkpoints     = checkpoints_;
    for (auto const &p : personas_)
    {
      (p.is_red ? h.red_ids : h.benign_ids).push_back(p.id);
    }
    std::sort(h.benign_ids.begin(), h.benign_ids.end());
    std::sort(h.red_ids.begin(), h.red_ids.end());
    return h;
  }

  std::vector<Probe> initial_probes() const
  {
    if (campaign_)
    {
      auto const &spec = campaign_->plan.spec;
      return {Probe{to_string(spec.workflow), spec.topic, spec.narrative}};
    }
    return config_.baseline_probes;
  }

  DiscussionTopic const *find_topic(std::string const &topic) const
  {
    for (auto const &t : config_.discussion)
    {
      if (t.topic == topic)
      {
        return &t;
      }
    }
    return nullptr;
  }

  // Fixed per (seed, account, topic): which organic narrative the account holds.
  std::optional<Narrative> stance(Cyberpersona const &who, DiscussionTopic const &topic) const
  {
    std::vector<double> w;
    for (auto const &n : topic.narratives)
    {
      w.push_back(n.weight);
    }
    Rng rng(hash_combine(hash_combine(config_.seed, who.id), hash_bytes(topic.topic)));
    auto const k = rng.weighted(w);
    if (k >= w.size())
    {
      return std::nullopt;
    }
    return Narrative::from_statement(topic.topic + "-" + std::to_string(k), topic.narratives[k].statement,
                                     topic.topic);
  }

  // Fills text and topic of benign Post/Reply actions through the backend.
  void author_benign(Cyberpersona const &who, std::vector<Action> &actions, EventLog const &log, Rng &rng) const
  {
    for (auto &a : actions)
    {
      if (a.kind != ActionKind::Post && a.kind != ActionKind::Reply)
      {
        continue;
      }
      std::optional<std::string> context;
      std::string topic;
      if (a.kind == ActionKind::Reply)
      {
        auto const *parent = log.message(*a.target);
        context            = parent->text;
        topic              = parent->topic;
      }
      if (topic.empty())
      {
        if (config_.discussion.empty())
        {
          topic = who.interests.front();
        }
        else
        {
          topic = config_.discussion[rng.index(config_.discussion.size())].topic;
        }
      }
      std::optional<Narrative> held;
      if (auto const *t = find_topic(topic))
      {
        held = stance(who, *t);
      }
      auto bundle = compose_prompt(who, "my followers", "share my honest opinion", topic, held);
      a.text      = generate_message(bundle, backend_,
                                     a.kind == ActionKind::Post ? Purpose::Post : Purpose::Reply, context);
      a.topic     = topic;
    }
  }

  // Baseline probes without a narrative identify one from the benign posts on
  // their topic, in creation order.
  void resolve_baseline_probes(std::vector<Probe> &probes, EventLog const &log) const
  {
    for (auto &probe : probes)
    {
      if (probe.narrative)
      {
        continue;
      }
      std::vector<std::string> posts;
      for (auto const &e : log.events())
      {
        if ((e.kind == EventKind::Post || e.kind == EventKind::Reply) && !e.actor_is_red &&
            e.topic.value_or("") == probe.topic)
        {
          posts.push_back(e.text.value_or(""));
          if (posts.size() >= config_.identification_sample)
          {
            break;
          }
        }
      }
      if (posts.empty())
      {
        continue;
      }
      try
      {
        probe.narrative = identify_dominant_narrative(posts, backend_, config_.identification_sample, probe.topic);
      }
      catch (AnalysisError const &)
      {
      }
    }
  }

  void elicit(EventLog &log, Tick t, int index, std::vector<Probe> const &probes,
              std::map<AccountId, AgentState> const &agents, std::set<AccountId> const &reached,
              std::size_t &missing)
  {
    for (auto const &probe : probes)
    {
      if (!probe.narrative)
      {
        continue;
      }
      auto const &statement = probe.narrative->statement;
      for (auto const &[id, state] : agents)
      {
        auto const &who = *persona_index_.at(id);
        if (who.is_red || (campaign_ && !reached.count(id)))
        {
          continue;
        }
        std::vector<MessageId> ids(state.read_set.begin(), state.read_set.end());
        std::sort(ids.begin(), ids.end());
        std::vector<std::string> texts;
        texts.reserve(ids.size());
        for (auto m : ids)
        {
          texts.push_back(log.message(m)->text);
        }
        try
        {
          auto const key = std::make_pair(id, statement);
          auto pit       = priors_.find(key);
          if (pit == priors_.end())
          {
            pit = priors_.emplace(key, elicit_answers(who, {}, statement)).first;
          }
          auto const posterior = elicit_answers(who, texts, statement);
          Event e;
          e.tick         = t;
          e.actor_id     = id;
          e.kind         = EventKind::CheckpointElicitation;
          e.actor_is_red = false;
          e.checkpoint   = index;
          e.probe        = probe.label;
          e.statement    = statement;
          e.prior        = pit->second.vector;
          e.posterior    = posterior.vector;
          e.agreement    = posterior.agreement;
          e.prior_agreement = pit->second.agreement;
          log.append(std::move(e));
        }
        catch (BackendError const &ex)
        {
          ++missing;
          std::clog << "iosim: elicitation for agent " << id << " at checkpoint " << index
                    << " failed: " << ex.what() << '\n';
        }
      }
    }
  }

  struct Elicited
  {
    BeliefArray vector;
    double agreement;
  };

  Elicited elicit_answers(Cyberpersona const &who, std::vector<std::string> const &texts,
                          std::string const &statement) const;

  SimulationConfig config_;
  std::optional<PreparedCampaign> campaign_;
  GeneratorBackend const &backend_;
  ActionModel model_;
  DemographicsConfig demographics_;
  std::vector<Cyberpersona> personas_;
  FollowerGraph graph_;
  std::unordered_map<AccountId, Cyberpersona const *> persona_index_;
  std::vector<Tick> checkpoints_;
  std::map<std::pair<AccountId, std::string>, Elicited> priors_;
};

inline Simulation::Elicited Simulation::elicit_answers(Cyberpersona const &who, std::vector<std::string> const &texts,
                                                       std::string const &statement) const
{
  auto const answers = backend_.elicit(who, texts, statement);
  return {answers_to_vector(answers).values(), agreement_score(answers)};
}

/// One complete run. The result's log is byte-identical for identical inputs
/// apart from the header wall clock.
inline RunResult run_simulation(SimulationConfig const &config, Osn const &osn,
                                std::optional<PreparedCampaign> const &campaign, GeneratorBackend const &backend,
                                ActionModel const &model = ActionModel::defaults(),
                                DemographicsConfig const &demographics = DemographicsConfig::defaults())
{
  Simulation sim(config, osn, campaign, backend, model, demographics);
  return sim.run();
}

}  // namespace iosim
