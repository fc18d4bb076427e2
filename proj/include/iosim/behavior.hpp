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

#include "iosim/error.hpp"
#include "iosim/event_log.hpp"
#include "iosim/persona_graph.hpp"
#include "iosim/rng.hpp"
#include "iosim/text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

namespace iosim {

enum class AgeBracket
{
  Age13To24,
  Age25To44,
  Age45To64,
  Age65Plus,
};

inline AgeBracket age_bracket(int age)
{
  if (age < 25)
    return AgeBracket::Age13To24;
  if (age < 45)
    return AgeBracket::Age25To44;
  if (age < 65)
    return AgeBracket::Age45To64;
  return AgeBracket::Age65Plus;
}

inline char const *to_string(AgeBracket b)
{
  switch (b)
  {
  case AgeBracket::Age13To24:
    return "13-24";
  case AgeBracket::Age25To44:
    return "25-44";
  case AgeBracket::Age45To64:
    return "45-64";
  case AgeBracket::Age65Plus:
    return "65+";
  }
  return "?";
}

inline std::optional<AgeBracket> age_bracket_from_string(std::string const &s)
{
  for (auto b : {AgeBracket::Age13To24, AgeBracket::Age25To44, AgeBracket::Age45To64, AgeBracket::Age65Plus})
  {
    if (s == to_string(b))
    {
      return b;
    }
  }
  return std::nullopt;
}

inline constexpr std::array<char const *, 5> kOccupationClasses{"student", "professional", "manual",
                                                                "retired", "other"};

struct Bracket
{
  AgeBracket age{AgeBracket::Age25To44};
  std::string occupation_class{"other"};

  auto operator<=>(Bracket const &) const = default;
};

struct ActionRow
{
  double p_read{0.0};
  double p_post{0.0};
  double p_reply{0.0};
  double p_share{0.0};
  double p_like{0.0};
  double p_idle{1.0};

  std::array<double, 6> as_array() const
  {
    return {p_read, p_post, p_reply, p_share, p_like, p_idle};
  }
};

/// Per-bracket action probabilities. Each row is one draw per tick.
class ActionModel
{
public:
  void set(Bracket const &b, ActionRow const &row)
  {
    check_row(row, "row " + std::string(to_string(b.age)) + "/" + b.occupation_class);
    rows_[b] = row;
  }

  ActionRow const &row(Bracket const &b) const
  {
    auto it = rows_.find(b);
    if (it == rows_.end())
    {
      throw ConfigError(std::string("action model has no row for bracket ") + to_string(b.age) + "/" +
                        b.occupation_class);
    }
    return it->second;
  }

  bool has(Bracket const &b) const
  {
    return rows_.count(b) != 0;
  }

  std::map<Bracket, ActionRow> const &rows() const
  {
    return rows_;
  }

  static void check_row(ActionRow const &row, std::string const &where)
  {
    double sum = 0.0;
    for (double p : row.as_array())
    {
      if (!(p >= 0.0 && p <= 1.0))
      {
        throw ConfigError(where + ": probability outside [0,1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
    {
      throw ConfigError(where + ": probabilities sum to " + std::to_string(sum));
    }
  }

  /**
   * Default table. Activity declines with age; retired accounts read more,
   * professionals read less. Declared values, not fitted to platform data.
   */
  static ActionModel defaults()
  {
    ActionModel m;
    std::map<AgeBracket, ActionRow> base{
        {AgeBracket::Age13To24, {0.30, 0.08, 0.05, 0.04, 0.10, 0.43}},
        {AgeBracket::Age25To44, {0.26, 0.07, 0.04, 0.03, 0.08, 0.52}},
        {AgeBracket::Age45To64, {0.22, 0.06, 0.03, 0.03, 0.06, 0.60}},
        {AgeBracket::Age65Plus, {0.18, 0.05, 0.02, 0.02, 0.05, 0.68}},
    };
    for (auto const &[age, row] : base)
    {
      for (char const *cls : kOccupationClasses)
      {
        ActionRow r         = row;
        std::string const c = cls;
        if (c == "retired")
        {
          r.p_read += 0.04;
          r.p_idle -= 0.04;
        }
        else if (c == "professional")
        {
          r.p_read -= 0.02;
          r.p_idle += 0.02;
        }
        m.set({age, c}, r);
      }
    }
    return m;
  }

private:
  std::map<Bracket, ActionRow> rows_;
};

/**
 * Loads an action model from comma-separated text:
 *
 *   age_bracket,occupation_class,p_read,p_post,p_reply,p_share,p_like,p_idle
 *   13-24,student,0.3,0.08,0.05,0.04,0.1,0.43
 *
 * Blank lines and lines starting with '#' are skipped. Errors name the line
 * and the field.
 */
inline ActionModel parse_action_model(std::istream &is)
{
  static constexpr std::array<char const *, 8> kColumns{"age_bracket", "occupation_class", "p_read", "p_post",
                                                        "p_reply",     "p_share",          "p_like", "p_idle"};
  ActionModel model;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen   = false;
  std::set<Bracket> seen;
  while (std::getline(is, line))
  {
    ++lineno;
    auto const t = trim(line);
    if (t.empty() || t[0] == '#')
    {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(t);
    for (std::string f; std::getline(ss, f, ',');)
    {
      fields.push_back(trim(f));
    }
    if (!header_seen)
    {
      if (fields.size() != kColumns.size())
      {
        throw ParseError(lineno, "header must have 8 columns");
      }
      for (std::size_t i = 0; i < kColumns.size(); ++i)
      {
        if (fields[i] != kColumns[i])
        {
          throw ParseError(lineno, "header column " + std::to_string(i + 1) + " must be '" + kColumns[i] + "'");
        }
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != kColumns.size())
    {
      throw ParseError(lineno, "expected 8 fields, got " + std::to_string(fields.size()));
    }
    auto age = age_bracket_from_string(fields[0]);
    if (!age)
    {
      throw ParseError(lineno, "field 'age_bracket': unknown bracket '" + fields[0] + "'");
    }
    if (std::find(kOccupationClasses.begin(), kOccupationClasses.end(), fields[1]) == kOccupationClasses.end())
    {
      throw ParseError(lineno, "field 'occupation_class': unknown class '" + fields[1] + "'");
    }
    std::array<double, 6> p{};
    for (std::size_t i = 0; i < 6; ++i)
    {
      std::size_t used = 0;
      try
      {
        p[i] = std::stod(fields[i + 2], &used);
      }
      catch (std::exception const &)
      {
        used = 0;
      }
      if (used == 0 || used != fields[i + 2].size())
      {
        throw ParseError(lineno, std::string("field '") + kColumns[i + 2] + "': not a number");
      }
      if (!(p[i] >= 0.0 && p[i] <= 1.0))
      {
        throw ParseError(lineno, std::string("field '") + kColumns[i + 2] + "': outside [0,1]");
      }
    }
    ActionRow row{p[0], p[1], p[2], p[3], p[4], p[5]};
    Bracket b{*age, fields[1]};
    if (!seen.insert(b).second)
    {
      throw ParseError(lineno, "duplicate row for bracket");
    }
    try
    {
      model.set(b, row);
    }
    catch (ConfigError const &ex)
    {
      throw ParseError(lineno, ex.what());
    }
  }
  if (!header_seen)
  {
    throw ParseError(lineno, "missing header line");
  }
  return model;
}

inline void write_action_model(ActionModel const &model, std::ostream &os)
{
  os << "age_bracket,occupation_class,p_read,p_post,p_reply,p_share,p_like,p_idle\n";
  for (auto const &[b, r] : model.rows())
  {
    os << to_string(b.age) << ',' << b.occupation_class << ',' << r.p_read << ',' << r.p_post << ','
       << r.p_reply << ',' << r.p_share << ',' << r.p_like << ',' << r.p_idle << '\n';
  }
}

enum class AutomatonState
{
  Idle,
  Reading,
  Acting,
};

struct LongMemory
{
  std::map<std::string, std::size_t> topic_counts;
  std::size_t own_posts{0};

  bool operator==(LongMemory const &) const = default;
};

struct AgentState
{
  AccountId persona_id{0};
  Bracket bracket;
  AutomatonState automaton_state{AutomatonState::Idle};
  std::size_t short_capacity{20};
  std::deque<MessageId> short_memory;
  LongMemory long_memory;
  std::unordered_set<MessageId> read_set;

  static AgentState for_persona(Cyberpersona const &p, DemographicsConfig const &demo, std::size_t capacity = 20)
  {
    AgentState s;
    s.persona_id     = p.id;
    s.bracket        = {age_bracket(p.age), demo.occupation_class(p.occupation)};
    s.short_capacity = capacity;
    return s;
  }
};

/**
 * Unread posts, replies and reposts by accounts the agent follows, created
 * strictly before `tick`. Newest first; ties by ascending author id, then
 * ascending message id. At most `feed_size` entries.
 */
inline std::vector<MessageId> build_feed(AgentState const &agent, FollowerGraph const &graph,
                                         EventLog const &log, Tick tick, std::size_t feed_size)
{
  std::vector<Message const *> candidates;
  if (feed_size == 0 || !graph.contains(agent.persona_id))
  {
    return {};
  }
  for (auto author : graph.followees(agent.persona_id))
  {
    auto const &ids     = log.messages_by(author);
    std::size_t counted = 0;
    for (auto it = ids.rbegin(); it != ids.rend() && counted < feed_size; ++it)
    {
      auto const *m = log.message(*it);
      if (m->tick >= tick || agent.read_set.count(m->id))
      {
        continue;
      }
      candidates.push_back(m);
      ++counted;
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](Message const *a, Message const *b) {
    return std::tuple(-a->tick, a->author, a->id) < std::tuple(-b->tick, b->author, b->id);
  });
  if (candidates.size() > feed_size)
  {
    candidates.resize(feed_size);
  }
  std::vector<MessageId> out;
  out.reserve(candidates.size());
  for (auto const *m : candidates)
  {
    out.push_back(m->id);
  }
  return out;
}

enum class ActionKind
{
  Read,
  Post,
  Reply,
  Share,
  Like,
};

inline EventKind to_event_kind(ActionKind k)
{
  switch (k)
  {
  case ActionKind::Read:
    return EventKind::Read;
  case ActionKind::Post:
    return EventKind::Post;
  case ActionKind::Reply:
    return EventKind::Reply;
  case ActionKind::Share:
    return EventKind::Share;
  case ActionKind::Like:
    return EventKind::Like;
  }
  return EventKind::Read;
}

struct Action
{
  ActionKind kind{ActionKind::Read};
  std::optional<MessageId> target;
  // Filled for authored content; benign text is generated by the engine.
  std::optional<std::string> text;
  std::optional<std::string> topic;
  std::optional<double> alignment_score;
  std::optional<double> p_author;

  bool operator==(Action const &) const = default;
};

/**
 * One automaton step: a single draw from the agent's row.
 *
 * Read consumes the feed head. Reply, Share and Like target a uniformly
 * chosen feed item and are preceded by a Read of that item. Draws that
 * need a feed item are dropped when the feed is empty.
 */
inline std::vector<Action> decide_actions(AgentState &agent, std::vector<MessageId> const &feed,
                                          ActionModel const &model, Rng &rng)
{
  auto const &row = model.row(agent.bracket);
  auto const p    = row.as_array();
  auto const draw = rng.weighted(p);
  std::vector<Action> out;
  switch (draw)
  {
  case 0:
    if (!feed.empty())
    {
      out.push_back({ActionKind::Read, feed.front()});
    }
    break;
  case 1:
    out.push_back({ActionKind::Post});
    break;
  case 2:
  case 3:
  case 4:
    if (!feed.empty())
    {
      auto const target = feed[rng.index(feed.size())];
      auto const kind   = draw == 2 ? ActionKind::Reply : draw == 3 ? ActionKind::Share : ActionKind::Like;
      out.push_back({ActionKind::Read, target});
      out.push_back({kind, target});
    }
    break;
  default:
    break;
  }
  agent.automaton_state = out.empty()                                      ? AutomatonState::Idle
                          : (out.size() == 1 && out[0].kind == ActionKind::Read) ? AutomatonState::Reading
                                                                                 : AutomatonState::Acting;
  return out;
}

/// Records reads into read_set, short_memory (FIFO) and topic counts; counts own posts.
inline AgentState update_memory(AgentState agent, std::vector<Action> const &actions,
                                std::vector<Message const *> const &read_messages)
{
  for (auto const *m : read_messages)
  {
    if (!agent.read_set.insert(m->id).second)
    {
      continue;
    }
    agent.short_memory.push_back(m->id);
    while (agent.short_memory.size() > agent.short_capacity)
    {
      agent.short_memory.pop_front();
    }
    if (!m->topic.empty())
    {
      ++agent.long_memory.topic_counts[m->topic];
    }
  }
  for (auto const &a : actions)
  {
    if (a.kind == ActionKind::Post || a.kind == ActionKind::Reply)
    {
      ++agent.long_memory.own_posts;
    }
  }
  return agent;
}

}  // namespace iosim
