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
#include "iosim/persona_graph.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace iosim {

using MessageId = std::uint64_t;
using Tick      = std::int64_t;

enum class EventKind
{
  Post,
  Reply,
  Share,
  Like,
  Read,
  CheckpointElicitation,
  NarrativeIdentified,
};

inline char const *to_string(EventKind k)
{
  switch (k)
  {
  case EventKind::Post:
    return "Post";
  case EventKind::Reply:
    return "Reply";
  case EventKind::Share:
    return "Share";
  case EventKind::Like:
    return "Like";
  case EventKind::Read:
    return "Read";
  case EventKind::CheckpointElicitation:
    return "CheckpointElicitation";
  case EventKind::NarrativeIdentified:
    return "NarrativeIdentified";
  }
  return "?";
}

inline std::optional<EventKind> event_kind_from_string(std::string const &s)
{
  for (auto k : {EventKind::Post, EventKind::Reply, EventKind::Share, EventKind::Like, EventKind::Read,
                 EventKind::CheckpointElicitation, EventKind::NarrativeIdentified})
  {
    if (s == to_string(k))
    {
      return k;
    }
  }
  return std::nullopt;
}

/// Post, Reply and Share create a new message that can appear in feeds.
inline bool creates_message(EventKind k)
{
  return k == EventKind::Post || k == EventKind::Reply || k == EventKind::Share;
}

using BeliefArray = std::array<double, 5>;

struct Event
{
  std::uint64_t seq{0};
  Tick tick{0};
  AccountId actor_id{0};
  EventKind kind{EventKind::Read};
  std::optional<MessageId> message_id;
  std::optional<MessageId> parent_id;
  std::optional<std::string> text;
  std::optional<std::string> topic;
  std::optional<double> alignment_score;
  bool actor_is_red{false};
  // Support workflow: probability of authoring on a trigger.
  std::optional<double> p_author;
  // CheckpointElicitation / NarrativeIdentified payload.
  std::optional<int> checkpoint;
  std::optional<std::string> probe;
  std::optional<std::string> statement;
  std::optional<BeliefArray> prior;
  std::optional<BeliefArray> posterior;
  std::optional<double> agreement;
  std::optional<double> prior_agreement;

  bool operator==(Event const &) const = default;
};

struct LogHeader
{
  std::string config_digest;
  std::string campaign_digest;
  std::uint64_t seed{0};
  std::string wall_clock;  // excluded from determinism comparisons
  std::string workflow{"none"};
  double red_density{0.0};
  Tick total_ticks{0};
  std::vector<Tick> checkpoints;
  std::vector<AccountId> benign_ids;
  std::vector<AccountId> red_ids;

  bool operator==(LogHeader const &) const = default;
};

/// Index entry for every message created in the log.
struct Message
{
  MessageId id{0};
  AccountId author{0};
  Tick tick{0};
  EventKind kind{EventKind::Post};
  std::optional<MessageId> parent;
  std::string text;
  std::string topic;
  bool author_is_red{false};
};

/**
 * Append-only event sequence plus a message index rebuilt on every append.
 *
 * append() assigns `seq` and, for message-creating events without an id,
 * the next message id.
 */
class EventLog
{
public:
  EventLog() = default;

  explicit EventLog(LogHeader header)
    : header_(std::move(header))
  {}

  LogHeader const &header() const
  {
    return header_;
  }

  LogHeader &header()
  {
    return header_;
  }

  Event const &append(Event e)
  {
    e.seq = events_.empty() ? 1 : events_.back().seq + 1;
    if (!events_.empty() && e.tick < events_.back().tick)
    {
      throw InputError("event tick decreases at seq " + std::to_string(e.seq));
    }
    if (creates_message(e.kind))
    {
      if (!e.message_id)
      {
        e.message_id = next_message_id_;
      }
      if (messages_.count(*e.message_id))
      {
        throw InputError("duplicate message id " + std::to_string(*e.message_id));
      }
      next_message_id_ = std::max(next_message_id_, *e.message_id + 1);
      Message m;
      m.id            = *e.message_id;
      m.author        = e.actor_id;
      m.tick          = e.tick;
      m.kind          = e.kind;
      m.parent        = e.parent_id;
      m.text          = e.text.value_or("");
      m.topic         = e.topic.value_or("");
      m.author_is_red = e.actor_is_red;
      by_author_[m.author].push_back(m.id);
      messages_.emplace(m.id, std::move(m));
    }
    events_.push_back(std::move(e));
    return events_.back();
  }

  std::vector<Event> const &events() const
  {
    return events_;
  }

  Message const *message(MessageId id) const
  {
    auto it = messages_.find(id);
    return it == messages_.end() ? nullptr : &it->second;
  }

  /// Message ids authored by `author`, in creation order.
  std::vector<MessageId> const &messages_by(AccountId author) const
  {
    static std::vector<MessageId> const kEmpty;
    auto it = by_author_.find(author);
    return it == by_author_.end() ? kEmpty : it->second;
  }

  std::size_t message_count() const
  {
    return messages_.size();
  }

  bool aborted() const
  {
    return abort_reason_.has_value();
  }

  std::optional<std::string> const &abort_reason() const
  {
    return abort_reason_;
  }

  void mark_aborted(std::string reason)
  {
    abort_reason_ = std::move(reason);
  }

private:
  LogHeader header_;
  std::vector<Event> events_;
  std::unordered_map<MessageId, Message> messages_;
  std::unordered_map<AccountId, std::vector<MessageId>> by_author_;
  MessageId next_message_id_{1};
  std::optional<std::string> abort_reason_;
};

// ---- line-delimited JSON ---------------------------------------------------

using ojson = nlohmann::ordered_json;

inline ojson to_json(LogHeader const &h)
{
  ojson j;
  j["type"]            = "header";
  j["config_digest"]   = h.config_digest;
  j["campaign_digest"] = h.campaign_digest;
  j["seed"]            = h.seed;
  j["wall_clock"]      = h.wall_clock;
  j["workflow"]        = h.workflow;
  j["red_density"]     = h.red_density;
  j["total_ticks"]     = h.total_ticks;
  j["checkpoints"]     = h.checkpoints;
  j["benign_ids"]      = h.benign_ids;
  j["red_ids"]         = h.red_ids;
  return j;
}

inline ojson to_json(Event const &e)
{
  ojson j;
  j["seq"]      = e.seq;
  j["tick"]     = e.tick;
  j["actor_id"] = e.actor_id;
  j["kind"]     = to_string(e.kind);
  if (e.message_id)
    j["message_id"] = *e.message_id;
  if (e.parent_id)
    j["parent_id"] = *e.parent_id;
  if (e.text)
    j["text"] = *e.text;
  if (e.topic)
    j["topic"] = *e.topic;
  if (e.alignment_score)
    j["alignment_score"] = *e.alignment_score;
  j["actor_is_red"] = e.actor_is_red;
  if (e.p_author)
    j["p_author"] = *e.p_author;
  if (e.checkpoint)
    j["checkpoint"] = *e.checkpoint;
  if (e.probe)
    j["probe"] = *e.probe;
  if (e.statement)
    j["statement"] = *e.statement;
  if (e.prior)
    j["prior"] = *e.prior;
  if (e.posterior)
    j["posterior"] = *e.posterior;
  if (e.agreement)
    j["agreement"] = *e.agreement;
  if (e.prior_agreement)
    j["prior_agreement"] = *e.prior_agreement;
  return j;
}

inline void write_jsonl(EventLog const &log, std::ostream &os)
{
  os << to_json(log.header()).dump() << '\n';
  for (auto const &e : log.events())
  {
    os << to_json(e).dump() << '\n';
  }
  if (log.aborted())
  {
    ojson j;
    j["type"]   = "abort";
    j["reason"] = *log.abort_reason();
    os << j.dump() << '\n';
  }
}

namespace detail {

template <typename T>
T field(ojson const &j, char const *key, std::size_t line)
{
  auto it = j.find(key);
  if (it == j.end())
  {
    throw ParseError(line, std::string("missing field '") + key + "'");
  }
  try
  {
    return it->template get<T>();
  }
  catch (nlohmann::json::exception const &ex)
  {
    throw ParseError(line, std::string("field '") + key + "': " + ex.what());
  }
}

template <typename T>
std::optional<T> opt_field(ojson const &j, char const *key, std::size_t line)
{
  if (!j.contains(key))
  {
    return std::nullopt;
  }
  return field<T>(j, key, line);
}

}  // namespace detail

/**
 * Parses a log written by write_jsonl. Line 1 must be the header. Errors carry
 * the 1-based line number. Causality (every referenced message exists
 * earlier in the log) is enforced.
 */
inline EventLog read_jsonl(std::istream &is)
{
  std::string line;
  std::size_t lineno = 0;
  EventLog log;
  bool have_header = false;
  while (std::getline(is, line))
  {
    ++lineno;
    if (line.empty())
    {
      continue;
    }
    ojson j;
    try
    {
      j = ojson::parse(line);
    }
    catch (nlohmann::json::parse_error const &ex)
    {
      throw ParseError(lineno, std::string("invalid JSON: ") + ex.what());
    }
    if (!j.is_object())
    {
      throw ParseError(lineno, "record is not an object");
    }
    if (!have_header)
    {
      if (j.value("type", "") != "header")
      {
        throw ParseError(lineno, "first record must be the header");
      }
      LogHeader h;
      h.config_digest   = detail::field<std::string>(j, "config_digest", lineno);
      h.campaign_digest = detail::field<std::string>(j, "campaign_digest", lineno);
      h.seed            = detail::field<std::uint64_t>(j, "seed", lineno);
      h.wall_clock      = detail::field<std::string>(j, "wall_clock", lineno);
      h.workflow        = detail::field<std::string>(j, "workflow", lineno);
      h.red_density     = detail::field<double>(j, "red_density", lineno);
      h.total_ticks     = detail::field<Tick>(j, "total_ticks", lineno);
      h.checkpoints     = detail::field<std::vector<Tick>>(j, "checkpoints", lineno);
      h.benign_ids      = detail::field<std::vector<AccountId>>(j, "benign_ids", lineno);
      h.red_ids         = detail::field<std::vector<AccountId>>(j, "red_ids", lineno);
      log               = EventLog(std::move(h));
      have_header       = true;
      continue;
    }
    if (j.value("type", "") == "abort")
    {
      log.mark_aborted(j.value("reason", ""));
      continue;
    }
    Event e;
    auto const seq  = detail::field<std::uint64_t>(j, "seq", lineno);
    e.tick          = detail::field<Tick>(j, "tick", lineno);
    e.actor_id      = detail::field<AccountId>(j, "actor_id", lineno);
    auto const kind = event_kind_from_string(detail::field<std::string>(j, "kind", lineno));
    if (!kind)
    {
      throw ParseError(lineno, "unknown event kind");
    }
    e.kind            = *kind;
    e.message_id      = detail::opt_field<MessageId>(j, "message_id", lineno);
    e.parent_id       = detail::opt_field<MessageId>(j, "parent_id", lineno);
    e.text            = detail::opt_field<std::string>(j, "text", lineno);
    e.topic           = detail::opt_field<std::string>(j, "topic", lineno);
    e.alignment_score = detail::opt_field<double>(j, "alignment_score", lineno);
    e.actor_is_red    = detail::field<bool>(j, "actor_is_red", lineno);
    e.p_author        = detail::opt_field<double>(j, "p_author", lineno);
    e.checkpoint      = detail::opt_field<int>(j, "checkpoint", lineno);
    e.probe           = detail::opt_field<std::string>(j, "probe", lineno);
    e.statement       = detail::opt_field<std::string>(j, "statement", lineno);
    e.prior           = detail::opt_field<BeliefArray>(j, "prior", lineno);
    e.posterior       = detail::opt_field<BeliefArray>(j, "posterior", lineno);
    e.agreement       = detail::opt_field<double>(j, "agreement", lineno);
    e.prior_agreement = detail::opt_field<double>(j, "prior_agreement", lineno);

    bool const references = e.kind == EventKind::Read || e.kind == EventKind::Like ||
                            e.kind == EventKind::Reply || e.kind == EventKind::Share;
    if (references)
    {
      auto const ref = (e.kind == EventKind::Read || e.kind == EventKind::Like) ? e.message_id : e.parent_id;
      if (!ref || !log.message(*ref))
      {
        throw ParseError(lineno, "event references a message not created earlier in the log");
      }
    }
    if (creates_message(e.kind) && !e.message_id)
    {
      throw ParseError(lineno, "message-creating event without message_id");
    }
    try
    {
      auto const &stored = log.append(std::move(e));
      if (stored.seq != seq)
      {
        throw ParseError(lineno, "non-contiguous seq");
      }
    }
    catch (InputError const &ex)
    {
      throw ParseError(lineno, ex.what());
    }
  }
  if (!have_header)
  {
    throw ParseError(lineno, "empty log: missing header");
  }
  return log;
}

/// Read sets reconstructed purely from Read events.
inline std::map<AccountId, std::set<MessageId>> replay_read_sets(EventLog const &log)
{
  std::map<AccountId, std::set<MessageId>> out;
  for (auto const &e : log.events())
  {
    if (e.kind == EventKind::Read && e.message_id)
    {
      out[e.actor_id].insert(*e.message_id);
    }
  }
  return out;
}

}  // namespace iosim
