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
#include "iosim/persona_graph.hpp"
#include "iosim/red_ops.hpp"
#include "iosim/sim_config.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace iosim {

using json = nlohmann::json;

/// 64-bit FNV-1a of the canonical (sorted-key) dump, as 16 hex digits.
inline std::string digest(json const &j)
{
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash_bytes(j.dump());
  return os.str();
}

namespace detail {

template <typename T>
T get_or(json const &j, char const *key, T fallback)
{
  auto it = j.find(key);
  if (it == j.end() || it->is_null())
  {
    return fallback;
  }
  try
  {
    return it->get<T>();
  }
  catch (json::exception const &ex)
  {
    throw ConfigError(std::string("field '") + key + "': " + ex.what());
  }
}

template <typename T>
T require(json const &j, char const *key)
{
  auto it = j.find(key);
  if (it == j.end() || it->is_null())
  {
    throw ConfigError(std::string("missing field '") + key + "'");
  }
  try
  {
    return it->get<T>();
  }
  catch (json::exception const &ex)
  {
    throw ConfigError(std::string("field '") + key + "': " + ex.what());
  }
}

inline void require_object(json const &j, char const *what)
{
  if (!j.is_object())
  {
    throw ConfigError(std::string(what) + " must be a JSON object");
  }
}

}  // namespace detail

// ---- personas and graphs ----------------------------------------------------

inline json to_json(Cyberpersona const &p)
{
  return json{{"id", p.id},
              {"name", p.name},
              {"age", p.age},
              {"gender", p.gender},
              {"traits", p.traits},
              {"interests", p.interests},
              {"occupation", p.occupation},
              {"is_red", p.is_red}};
}

inline Cyberpersona persona_from_json(json const &j)
{
  detail::require_object(j, "persona");
  Cyberpersona p;
  p.id         = detail::require<AccountId>(j, "id");
  p.name       = detail::get_or<std::string>(j, "name", "");
  p.age        = detail::require<int>(j, "age");
  p.gender     = detail::get_or<std::string>(j, "gender", "");
  p.traits     = detail::get_or<std::vector<std::string>>(j, "traits", {});
  p.interests  = detail::require<std::vector<std::string>>(j, "interests");
  p.occupation = detail::get_or<std::string>(j, "occupation", "");
  p.is_red     = detail::get_or<bool>(j, "is_red", false);
  if (p.interests.empty())
  {
    throw ConfigError("persona " + std::to_string(p.id) + " has no interests");
  }
  if (p.age < 13)
  {
    throw ConfigError("persona " + std::to_string(p.id) + " is younger than 13");
  }
  return p;
}

inline json to_json(DemographicsConfig const &c)
{
  auto table = [](auto const &t) {
    json a = json::array();
    for (auto const &e : t)
    {
      a.push_back({{"name", e.name}, {"probability", e.probability}});
    }
    return a;
  };
  json occ = json::array();
  for (auto const &o : c.occupations)
  {
    occ.push_back({{"name", o.name}, {"probability", o.probability}, {"occupation_class", o.occupation_class}});
  }
  return json{{"age_min", c.age_min},
              {"age_max", c.age_max},
              {"genders", table(c.genders)},
              {"occupations", occ},
              {"interests", table(c.interests)},
              {"traits", table(c.traits)},
              {"interests_min", c.interests_min},
              {"interests_max", c.interests_max},
              {"traits_per_persona", c.traits_per_persona},
              {"first_names", c.first_names},
              {"last_names", c.last_names}};
}

inline DemographicsConfig demographics_from_json(json const &j)
{
  detail::require_object(j, "demographics");
  auto c     = DemographicsConfig::defaults();
  auto table = [&](char const *key, std::vector<Category> fallback) {
    if (!j.contains(key))
    {
      return fallback;
    }
    std::vector<Category> out;
    for (auto const &e : j.at(key))
    {
      out.push_back({detail::require<std::string>(e, "name"), detail::require<double>(e, "probability")});
    }
    return out;
  };
  c.age_min   = detail::get_or(j, "age_min", c.age_min);
  c.age_max   = detail::get_or(j, "age_max", c.age_max);
  c.genders   = table("genders", c.genders);
  c.interests = table("interests", c.interests);
  c.traits    = table("traits", c.traits);
  if (j.contains("occupations"))
  {
    c.occupations.clear();
    for (auto const &e : j.at("occupations"))
    {
      c.occupations.push_back({detail::require<std::string>(e, "name"), detail::require<double>(e, "probability"),
                               detail::get_or<std::string>(e, "occupation_class", "other")});
    }
  }
  c.interests_min      = detail::get_or(j, "interests_min", c.interests_min);
  c.interests_max      = detail::get_or(j, "interests_max", c.interests_max);
  c.traits_per_persona = detail::get_or(j, "traits_per_persona", c.traits_per_persona);
  c.first_names        = detail::get_or(j, "first_names", c.first_names);
  c.last_names         = detail::get_or(j, "last_names", c.last_names);
  c.validate();
  return c;
}

inline json to_json(GraphConfig const &g)
{
  return json{{"n", g.n},
              {"mean_out_degree", g.mean_out_degree},
              {"attachment_exponent", g.attachment_exponent},
              {"reciprocity_p", g.reciprocity_p},
              {"homophily_weight", g.homophily_weight}};
}

inline GraphConfig graph_config_from_json(json const &j)
{
  detail::require_object(j, "graph config");
  GraphConfig g;
  g.n                   = detail::get_or(j, "n", g.n);
  g.mean_out_degree     = detail::get_or(j, "mean_out_degree", g.mean_out_degree);
  g.attachment_exponent = detail::get_or(j, "attachment_exponent", g.attachment_exponent);
  g.reciprocity_p       = detail::get_or(j, "reciprocity_p", g.reciprocity_p);
  g.homophily_weight    = detail::get_or(j, "homophily_weight", g.homophily_weight);
  g.validate();
  return g;
}

/// Persisted network: personas plus follower edges.
struct NetworkSnapshot
{
  std::vector<Cyberpersona> personas;
  FollowerGraph graph;
};

inline json to_json(NetworkSnapshot const &s)
{
  json personas = json::array();
  for (auto const &p : s.personas)
  {
    personas.push_back(to_json(p));
  }
  json edges = json::array();
  for (auto const &[a, b] : s.graph.edges())
  {
    edges.push_back({{"follower_id", a}, {"followee_id", b}});
  }
  return json{{"personas", personas}, {"edges", edges}};
}

inline NetworkSnapshot snapshot_from_json(json const &j)
{
  detail::require_object(j, "network snapshot");
  NetworkSnapshot s;
  for (auto const &p : detail::require<json>(j, "personas"))
  {
    s.personas.push_back(persona_from_json(p));
    if (!s.graph.add_node(s.personas.back().id))
    {
      throw InputError("duplicate persona id " + std::to_string(s.personas.back().id) + " in snapshot");
    }
  }
  for (auto const &e : detail::require<json>(j, "edges"))
  {
    auto const a = detail::require<AccountId>(e, "follower_id");
    auto const b = detail::require<AccountId>(e, "followee_id");
    if (a == b || !s.graph.contains(a) || !s.graph.contains(b))
    {
      throw InputError("snapshot edge " + std::to_string(a) + "->" + std::to_string(b) + " is invalid");
    }
    if (!s.graph.add_edge(a, b))
    {
      throw InputError("duplicate snapshot edge " + std::to_string(a) + "->" + std::to_string(b));
    }
  }
  return s;
}

inline json load_json_file(std::string const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ConfigError("cannot open '" + path + "'");
  }
  try
  {
    return json::parse(in);
  }
  catch (json::parse_error const &ex)
  {
    throw ConfigError("'" + path + "': " + ex.what());
  }
}

inline void save_json_file(std::string const &path, json const &j)
{
  std::ofstream out(path);
  if (!out)
  {
    throw ConfigError("cannot write '" + path + "'");
  }
  out << j.dump(2) << '\n';
}

// ---- content and campaigns --------------------------------------------------

inline json to_json(Narrative const &n)
{
  return json{{"id", n.id}, {"statement", n.statement}, {"topic", n.topic}, {"keyword_set", n.keyword_set}};
}

/// keyword_set is recomputed from the statement; a supplied set must match it.
inline Narrative narrative_from_json(json const &j, std::string const &default_topic = {})
{
  detail::require_object(j, "narrative");
  auto n = Narrative::from_statement(detail::get_or<std::string>(j, "id", "narrative"),
                                     detail::require<std::string>(j, "statement"),
                                     detail::get_or<std::string>(j, "topic", default_topic));
  if (j.contains("keyword_set"))
  {
    auto given = j.at("keyword_set").get<std::vector<std::string>>();
    std::sort(given.begin(), given.end());
    given.erase(std::unique(given.begin(), given.end()), given.end());
    if (given != n.keyword_set)
    {
      throw ConfigError("narrative keyword_set does not match its statement");
    }
  }
  return n;
}

inline json to_json(TargetAudience const &a)
{
  return json{{"age_min", a.age_min},
              {"age_max", a.age_max},
              {"interests", a.interests},
              {"genders", a.genders},
              {"occupations", a.occupations}};
}

inline TargetAudience audience_from_json(json const &j)
{
  detail::require_object(j, "target_audience");
  TargetAudience a;
  a.age_min     = detail::get_or(j, "age_min", a.age_min);
  a.age_max     = detail::get_or(j, "age_max", a.age_max);
  a.interests   = detail::get_or(j, "interests", a.interests);
  a.genders     = detail::get_or(j, "genders", a.genders);
  a.occupations = detail::get_or(j, "occupations", a.occupations);
  if (a.age_min > a.age_max)
  {
    throw ConfigError("target_audience age_min exceeds age_max");
  }
  return a;
}

inline json to_json(CampaignSpec const &c)
{
  json j{{"workflow", to_string(c.workflow)},
         {"osn_ref", c.osn_ref},
         {"topic", c.topic},
         {"target_audience", to_json(c.target_audience)},
         {"red_density", c.red_density},
         {"alignment_threshold", c.alignment_threshold},
         {"seed", c.seed},
         {"support_author_p", c.support_author_p},
         {"identification_sample", c.identification_sample}};
  j["objective"]     = c.objective ? json(*c.objective) : json(nullptr);
  j["narrative"]     = c.narrative ? to_json(*c.narrative) : json(nullptr);
  j["observe_ticks"] = c.observe_ticks ? json(*c.observe_ticks) : json(nullptr);
  return j;
}

inline CampaignSpec campaign_from_json(json const &j)
{
  detail::require_object(j, "campaign");
  CampaignSpec c;
  auto const wf = workflow_from_string(detail::require<std::string>(j, "workflow"));
  if (!wf)
  {
    throw ConfigError("workflow must be one of Release, Support, Counter");
  }
  c.workflow = *wf;
  c.osn_ref  = detail::get_or<std::string>(j, "osn_ref", "");
  c.topic    = detail::require<std::string>(j, "topic");
  if (j.contains("target_audience") && !j.at("target_audience").is_null())
  {
    c.target_audience = audience_from_json(j.at("target_audience"));
  }
  if (j.contains("objective") && !j.at("objective").is_null())
  {
    c.objective = j.at("objective").get<std::string>();
  }
  if (j.contains("narrative") && !j.at("narrative").is_null())
  {
    c.narrative = narrative_from_json(j.at("narrative"), c.topic);
  }
  c.red_density = detail::get_or(j, "red_density", c.red_density);
  if (j.contains("observe_ticks") && !j.at("observe_ticks").is_null())
  {
    c.observe_ticks = j.at("observe_ticks").get<std::int64_t>();
  }
  c.alignment_threshold   = detail::get_or(j, "alignment_threshold", c.alignment_threshold);
  c.seed                  = detail::get_or(j, "seed", c.seed);
  c.support_author_p      = detail::get_or(j, "support_author_p", c.support_author_p);
  c.identification_sample = detail::get_or(j, "identification_sample", c.identification_sample);
  return c;
}

inline json to_json(ValidatedPlan const &p)
{
  auto j             = to_json(p.spec);
  j["objective"]     = p.objective;
  j["audience_size"] = p.audience_size;
  return j;
}

// ---- backend and simulation --------------------------------------------------

inline json to_json(BackendConfig const &b)
{
  return json{{"kind", b.kind == BackendKind::Stub ? "stub" : "external"},
              {"stub",
               {{"seed", b.stub.seed},
                {"cluster_similarity", b.stub.cluster_similarity},
                {"prior_low", b.stub.prior_low},
                {"prior_high", b.stub.prior_high},
                {"lambda", b.stub.lambda},
                {"exposure_coverage", b.stub.exposure_coverage},
                {"likert_spread", b.stub.likert_spread}}},
              {"endpoint", b.endpoint},
              {"model", b.model},
              {"samples", b.samples},
              {"timeout_seconds", b.timeout_seconds},
              {"retries", b.retries},
              {"temperature", b.temperature}};
}

inline BackendConfig backend_from_json(json const &j)
{
  detail::require_object(j, "backend");
  BackendConfig b;
  auto const kind = detail::get_or<std::string>(j, "kind", "stub");
  if (kind == "stub")
  {
    b.kind = BackendKind::Stub;
  }
  else if (kind == "external")
  {
    b.kind = BackendKind::External;
  }
  else
  {
    throw ConfigError("backend kind must be 'stub' or 'external'");
  }
  if (j.contains("stub"))
  {
    auto const &s            = j.at("stub");
    b.stub.seed              = detail::get_or(s, "seed", b.stub.seed);
    b.stub.cluster_similarity = detail::get_or(s, "cluster_similarity", b.stub.cluster_similarity);
    b.stub.prior_low         = detail::get_or(s, "prior_low", b.stub.prior_low);
    b.stub.prior_high        = detail::get_or(s, "prior_high", b.stub.prior_high);
    b.stub.lambda            = detail::get_or(s, "lambda", b.stub.lambda);
    b.stub.exposure_coverage = detail::get_or(s, "exposure_coverage", b.stub.exposure_coverage);
    b.stub.likert_spread     = detail::get_or(s, "likert_spread", b.stub.likert_spread);
  }
  b.endpoint        = detail::get_or(j, "endpoint", b.endpoint);
  b.model           = detail::get_or(j, "model", b.model);
  b.samples         = detail::get_or(j, "samples", b.samples);
  b.timeout_seconds = detail::get_or(j, "timeout_seconds", b.timeout_seconds);
  b.retries         = detail::get_or(j, "retries", b.retries);
  b.temperature     = detail::get_or(j, "temperature", b.temperature);
  if (b.samples < 1 || b.retries < 0 || !(b.timeout_seconds > 0.0))
  {
    throw ConfigError("backend samples >= 1, retries >= 0 and timeout > 0 are required");
  }
  return b;
}

inline json to_json(Probe const &p)
{
  return json{{"label", p.label}, {"topic", p.topic}, {"narrative", p.narrative ? to_json(*p.narrative) : json()}};
}

inline Probe probe_from_json(json const &j)
{
  Probe p;
  p.label = detail::require<std::string>(j, "label");
  p.topic = detail::require<std::string>(j, "topic");
  if (j.contains("narrative") && !j.at("narrative").is_null())
  {
    p.narrative = narrative_from_json(j.at("narrative"), p.topic);
  }
  return p;
}

inline json to_json(SimulationConfig const &c)
{
  json discussion = json::array();
  for (auto const &t : c.discussion)
  {
    json ns = json::array();
    for (auto const &n : t.narratives)
    {
      ns.push_back({{"statement", n.statement}, {"weight", n.weight}});
    }
    discussion.push_back({{"topic", t.topic}, {"narratives", ns}});
  }
  json probes = json::array();
  for (auto const &p : c.baseline_probes)
  {
    probes.push_back(to_json(p));
  }
  return json{{"total_ticks", c.total_ticks},
              {"feed_size", c.feed_size},
              {"checkpoint_fractions", c.checkpoint_fractions},
              {"seed", c.seed},
              {"short_memory_capacity", c.short_memory_capacity},
              {"discussion", discussion},
              {"baseline_probes", probes},
              {"observe_ticks", c.observe_ticks ? json(*c.observe_ticks) : json()},
              {"identification_sample", c.identification_sample},
              {"backend", to_json(c.backend)}};
}

inline SimulationConfig simulation_from_json(json const &j)
{
  detail::require_object(j, "simulation");
  SimulationConfig c;
  c.total_ticks           = detail::get_or(j, "total_ticks", c.total_ticks);
  c.feed_size             = detail::get_or(j, "feed_size", c.feed_size);
  c.checkpoint_fractions  = detail::get_or(j, "checkpoint_fractions", c.checkpoint_fractions);
  c.seed                  = detail::get_or(j, "seed", c.seed);
  c.short_memory_capacity = detail::get_or(j, "short_memory_capacity", c.short_memory_capacity);
  if (j.contains("discussion"))
  {
    c.discussion.clear();
    for (auto const &t : j.at("discussion"))
    {
      DiscussionTopic topic{detail::require<std::string>(t, "topic"), {}};
      for (auto const &n : detail::require<json>(t, "narratives"))
      {
        topic.narratives.push_back({detail::require<std::string>(n, "statement"), detail::get_or(n, "weight", 1.0)});
      }
      c.discussion.push_back(std::move(topic));
    }
  }
  if (j.contains("baseline_probes"))
  {
    for (auto const &p : j.at("baseline_probes"))
    {
      c.baseline_probes.push_back(probe_from_json(p));
    }
  }
  if (j.contains("observe_ticks") && !j.at("observe_ticks").is_null())
  {
    c.observe_ticks = j.at("observe_ticks").get<Tick>();
  }
  c.identification_sample = detail::get_or(j, "identification_sample", c.identification_sample);
  if (j.contains("backend"))
  {
    c.backend = backend_from_json(j.at("backend"));
  }
  c.validate();
  return c;
}

}  // namespace iosim
