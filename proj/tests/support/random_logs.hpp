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

#include "iosim/metrics.hpp"
#include "iosim/rng.hpp"

#include <json.hpp>

#include <map>
#include <set>
#include <sstream>
#include <string>

namespace iosim::testing {

/// Random but well-formed log: n <= 50 accounts, some red, posts and reads.
inline EventLog random_log(std::uint64_t seed)
{
  Rng rng(seed);
  auto const n   = 1 + rng.index(50);
  LogHeader h;
  h.seed        = seed;
  h.total_ticks = 20;
  h.checkpoints = {5, 10, 15, 20};
  std::vector<bool> red(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    red[i] = rng.bernoulli(0.25);
    (red[i] ? h.red_ids : h.benign_ids).push_back(i);
  }
  EventLog log(h);
  std::vector<MessageId> messages;
  for (Tick t = 1; t <= 20; ++t)
  {
    for (std::size_t k = rng.index(8); k > 0; --k)
    {
      auto const actor = static_cast<AccountId>(rng.index(n));
      Event e;
      e.tick         = t;
      e.actor_id     = actor;
      e.actor_is_red = red[actor];
      double const u = rng.uniform();
      if (messages.empty() || u < 0.3)
      {
        e.kind  = EventKind::Post;
        e.text  = "post";
        e.topic = "t";
      }
      else if (u < 0.4)
      {
        e.kind      = EventKind::Share;
        e.parent_id = messages[rng.index(messages.size())];
        e.text      = "share";
      }
      else if (u < 0.5)
      {
        e.kind       = EventKind::Like;
        e.message_id = messages[rng.index(messages.size())];
      }
      else
      {
        e.kind       = EventKind::Read;
        e.message_id = messages[rng.index(messages.size())];
      }
      auto const &added = log.append(std::move(e));
      if (creates_message(added.kind))
      {
        messages.push_back(*added.message_id);
      }
    }
  }
  return log;
}

/// Brute-force reach from the serialized log text alone.
inline double reach_oracle(std::string const &jsonl)
{
  std::istringstream in(jsonl);
  std::string line;
  std::getline(in, line);
  auto const header = nlohmann::json::parse(line);
  std::set<std::uint64_t> red, benign;
  for (auto const &id : header.at("red_ids"))
  {
    red.insert(id.get<std::uint64_t>());
  }
  for (auto const &id : header.at("benign_ids"))
  {
    benign.insert(id.get<std::uint64_t>());
  }
  std::map<std::uint64_t, std::uint64_t> author_of;
  std::set<std::uint64_t> reached;
  while (std::getline(in, line))
  {
    auto const e = nlohmann::json::parse(line);
    if (!e.contains("kind"))
    {
      continue;
    }
    auto const kind = e.at("kind").get<std::string>();
    auto const actor = e.at("actor_id").get<std::uint64_t>();
    if (kind == "Post" || kind == "Reply" || kind == "Share")
    {
      author_of[e.at("message_id").get<std::uint64_t>()] = actor;
    }
    if (kind == "Read" && benign.count(actor))
    {
      if (red.count(author_of.at(e.at("message_id").get<std::uint64_t>())))
      {
        reached.insert(actor);
      }
    }
  }
  return benign.empty() ? 0.0 : static_cast<double>(reached.size()) / static_cast<double>(benign.size());
}

}  // namespace iosim::testing
