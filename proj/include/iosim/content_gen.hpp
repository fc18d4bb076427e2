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
#include "iosim/rng.hpp"
#include "iosim/text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace iosim {

inline constexpr std::size_t kMaxMessageLength = 500;

/// A canonical claim. keyword_set is always content_words(statement).
struct Narrative
{
  std::string id;
  std::string statement;
  std::string topic;
  std::vector<std::string> keyword_set;

  static Narrative from_statement(std::string id, std::string statement, std::string topic)
  {
    Narrative n{std::move(id), std::move(statement), std::move(topic), {}};
    n.keyword_set = content_words(n.statement);
    if (n.keyword_set.empty())
    {
      throw InputError("narrative statement has no content words: '" + n.statement + "'");
    }
    return n;
  }

  bool operator==(Narrative const &) const = default;
};

/// Four-part request. `slots` carries persona fields for template backends and
/// is not part of the wire document.
struct PromptBundle
{
  std::string system;
  std::string target;
  std::string objective;
  std::string task;
  std::map<std::string, std::string> slots;

  bool operator==(PromptBundle const &) const = default;
};

enum class Purpose
{
  Post,
  Reply,
};

inline char const *to_string(Purpose p)
{
  return p == Purpose::Post ? "post" : "reply";
}

/// Per-question answer distributions: 2 Likert (5 options), 3 binary.
struct AnswerSet
{
  std::array<std::array<double, 5>, 2> likert{};
  std::array<std::array<double, 2>, 3> binary{};
};

enum class BackendKind
{
  Stub,
  External,
};

/**
 * Content and bounded-analysis backend.
 *
 * Implementations must be shareable across threads; every method is const.
 * Callers go through the free functions below, which enforce the
 * preconditions and output contracts for every backend.
 */
class GeneratorBackend
{
public:
  virtual ~GeneratorBackend() = default;

  virtual BackendKind kind() const = 0;

  virtual std::string generate(PromptBundle const &bundle, Purpose purpose,
                               std::optional<std::string> const &context) const = 0;

  /// `posts` is already truncated to the sample and contains a nonempty post.
  virtual Narrative identify(std::span<std::string const> posts, std::string const &topic) const = 0;

  virtual double score(std::string const &message, Narrative const &narrative) const = 0;

  virtual Narrative counter(Narrative const &target) const = 0;

  virtual AnswerSet elicit(Cyberpersona const &persona, std::span<std::string const> read_posts,
                           std::string const &statement) const = 0;
};

inline std::string join(std::vector<std::string> const &items, std::string const &sep)
{
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i)
  {
    if (i)
    {
      out += sep;
    }
    out += items[i];
  }
  return out;
}

/// Identity sentence shared by every prompt about a persona.
inline std::string persona_system_prompt(Cyberpersona const &persona)
{
  std::ostringstream sys;
  sys << "You are " << persona.name << ", a " << persona.age << "-year-old " << persona.gender << " "
      << persona.occupation << ".";
  if (!persona.traits.empty())
  {
    sys << " Personality: " << join(persona.traits, ", ") << ".";
  }
  sys << " Interests: " << join(persona.interests, ", ") << ".";
  return sys.str();
}

inline PromptBundle compose_prompt(Cyberpersona const &persona, std::string const &audience,
                                   std::string const &objective, std::string const &topic,
                                   std::optional<Narrative> const &narrative)
{
  if (trim(objective).empty())
  {
    throw InputError("compose_prompt: objective must be nonempty");
  }
  if (trim(topic).empty())
  {
    throw InputError("compose_prompt: topic must be nonempty");
  }
  PromptBundle b;
  b.system = persona_system_prompt(persona) + " Write as this person on a microblogging platform.";

  b.target    = "Your audience: " + (trim(audience).empty() ? std::string("the general public") : audience) + ".";
  b.objective = "Operational goal: " + objective + ".";
  b.task      = "Topic: " + topic + ".";
  if (narrative)
  {
    b.task += " Narrative: \"" + narrative->statement + "\"";
  }

  b.slots["name"]       = persona.name;
  b.slots["age"]        = std::to_string(persona.age);
  b.slots["occupation"] = persona.occupation;
  b.slots["interest"]   = persona.interests.empty() ? topic : persona.interests.front();
  b.slots["topic"]      = topic;
  if (narrative)
  {
    b.slots["narrative"] = narrative->statement;
  }
  return b;
}

inline std::string generate_message(PromptBundle const &bundle, GeneratorBackend const &backend,
                                    Purpose purpose, std::optional<std::string> const &context)
{
  if (purpose == Purpose::Reply && !context)
  {
    throw InputError("generate_message: a reply requires a context message");
  }
  auto text = trim(backend.generate(bundle, purpose, context));
  if (text.empty())
  {
    throw BackendError("generator returned empty output", false);
  }
  return truncate_utf8(std::move(text), kMaxMessageLength);
}

inline Narrative identify_dominant_narrative(std::span<std::string const> posts,
                                             GeneratorBackend const &backend, std::size_t sample_size,
                                             std::string const &topic = {})
{
  if (posts.empty())
  {
    throw InputError("identify_dominant_narrative: no posts");
  }
  if (sample_size < 1)
  {
    throw InputError("identify_dominant_narrative: sample_size must be >= 1");
  }
  auto const sample = posts.first(std::min(sample_size, posts.size()));
  bool any          = std::any_of(sample.begin(), sample.end(),
                                  [](std::string const &p) { return !content_words(p).empty(); });
  if (!any)
  {
    throw AnalysisError("identify_dominant_narrative: every sampled post is empty");
  }
  return backend.identify(sample, topic);
}

inline double score_alignment(std::string const &message, Narrative const &narrative,
                              GeneratorBackend const &backend)
{
  return std::clamp(backend.score(message, narrative), 0.0, 1.0);
}

inline Narrative derive_counter_narrative(Narrative const &target, GeneratorBackend const &backend)
{
  auto n  = backend.counter(target);
  n.topic = target.topic;
  return n;
}

/// Parameters of the deterministic stub. All values are declared defaults.
struct StubConfig
{
  std::uint64_t seed{0};
  // Identification: posts with Jaccard >= this are in one cluster.
  double cluster_similarity{0.34};
  // Elicitation: agreement = clamp(prior + lambda * net aligned exposure).
  double prior_low{0.25};
  double prior_high{0.75};
  double lambda{0.05};
  // A read post counts as exposure to the statement when it covers at
  // least this fraction of the statement's content words.
  double exposure_coverage{0.6};
  std::array<double, 2> likert_spread{0.2, 0.3};
};

inline bool has_negation(std::vector<std::string> const &sorted_words)
{
  for (char const *w : {"not", "no", "never", "false", "myth"})
  {
    if (contains_word(sorted_words, w))
    {
      return true;
    }
  }
  return false;
}

/**
 * Offline template backend. Pure: every output is a function of the inputs
 * and the configured seed.
 */
class StubBackend final : public GeneratorBackend
{
public:
  explicit StubBackend(StubConfig cfg = {})
    : cfg_(cfg)
  {}

  StubConfig const &config() const
  {
    return cfg_;
  }

  BackendKind kind() const override
  {
    return BackendKind::Stub;
  }

  std::string generate(PromptBundle const &b, Purpose purpose,
                       std::optional<std::string> const &context) const override
  {
    std::uint64_t h = hash_bytes(b.system);
    h               = hash_bytes(b.target, h);
    h               = hash_bytes(b.objective, h);
    h               = hash_bytes(b.task, h);
    h               = hash_bytes(to_string(purpose), h);
    h               = hash_bytes(context.value_or(""), h);
    h               = hash_combine(h, cfg_.seed);

    auto slot = [&](char const *key) {
      auto it = b.slots.find(key);
      return it == b.slots.end() ? std::string() : it->second;
    };
    auto fill = [&](std::string s) {
      for (char const *key : {"name", "age", "occupation", "interest", "topic"})
      {
        std::string const pat = std::string("{") + key + "}";
        for (auto pos = s.find(pat); pos != std::string::npos; pos = s.find(pat))
        {
          s.replace(pos, pat.size(), slot(key));
        }
      }
      return s;
    };

    static constexpr char const *kOpeners[] = {
        "",
        "Honestly, ",
        "As a {occupation}, I say it: ",
        "Real talk: ",
        "At {age}, I know this: ",
        "Reminder: ",
        "From a {occupation}: ",
        "Hot take: ",
        "Every {occupation} knows it: ",
        "Listen: ",
        "Speaking as a {occupation}: ",
        "{age} and still saying it: ",
        "Into {interest}, and still: ",
        "Quick thought: ",
        "Said it before: ",
        "Unpopular opinion? ",
        "{name} here. ",
        "{name}, {occupation}: ",
        "{name} ({age}): ",
        "A {age}-year-old {occupation} writes: ",
    };
    static constexpr char const *kReplyOpeners[] = {
        "Exactly. ", "Well, ", "Good point, but ", "Agreed: ", "Hmm. ", "Let me add: ",
    };
    static constexpr char const *kClosers[] = {
        "",           " #{topic}",  " Thoughts?",     " ({age})",      " #{interest}",           " Agree?",
        " Just saying.", " #{topic} #{interest}", " Your move.", " #{occupation}", " ({occupation}, {age})", " Prove me wrong.",
        " - {name}", " Signed, {name}.", " ({name})",
    };
    static constexpr char const *kCores[] = {
        "Been reading a lot about {topic} lately.",
        "Everyone is talking about {topic} today.",
        "Still making up my mind on {topic}.",
        "Interesting times for {topic}.",
    };

    std::string core = slot("narrative");
    if (core.empty())
    {
      core = kCores[(h >> 40) % std::size(kCores)];
    }
    else if (core.back() != '.' && core.back() != '!' && core.back() != '?')
    {
      core += '.';
    }

    std::string text;
    if (purpose == Purpose::Reply)
    {
      text += kReplyOpeners[(h >> 8) % std::size(kReplyOpeners)];
    }
    text += kOpeners[h % std::size(kOpeners)];
    text += core;
    text += kClosers[(h >> 24) % std::size(kClosers)];
    return fill(text);
  }

  // Medoid clustering: the post with the most neighbours (Jaccard >=
  // cluster_similarity, itself included) defines the dominant cluster; its
  // keyword set is the words present in more than half of that cluster.
  Narrative identify(std::span<std::string const> posts, std::string const &topic) const override
  {
    std::vector<std::vector<std::string>> words;
    words.reserve(posts.size());
    for (auto const &p : posts)
    {
      words.push_back(content_words(p));
    }
    std::size_t best = posts.size(), best_count = 0;
    for (std::size_t i = 0; i < words.size(); ++i)
    {
      if (words[i].empty())
      {
        continue;
      }
      std::size_t count = 0;
      for (std::size_t j = 0; j < words.size(); ++j)
      {
        if (!words[j].empty() && jaccard(words[i], words[j]) >= cfg_.cluster_similarity)
        {
          ++count;
        }
      }
      if (count > best_count)
      {
        best       = i;
        best_count = count;
      }
    }
    if (best == posts.size())
    {
      throw AnalysisError("no nonempty post to cluster");
    }

    std::map<std::string, std::size_t> freq;
    for (std::size_t j = 0; j < words.size(); ++j)
    {
      if (!words[j].empty() && jaccard(words[best], words[j]) >= cfg_.cluster_similarity)
      {
        for (auto const &w : words[j])
        {
          ++freq[w];
        }
      }
    }
    std::vector<std::string> ordered;
    for (auto const &w : content_words_ordered(posts[best]))
    {
      if (2 * freq[w] > best_count)
      {
        ordered.push_back(w);
      }
    }
    if (ordered.empty())
    {
      ordered = content_words_ordered(posts[best]);
    }
    auto statement = join(ordered, " ");
    std::ostringstream id;
    id << "identified-" << std::hex << hash_bytes(statement);
    return Narrative::from_statement(id.str(), statement, topic);
  }

  double score(std::string const &message, Narrative const &narrative) const override
  {
    return jaccard(content_words(message), narrative.keyword_set);
  }

  // Negation template: "X is Y" -> "X is not Y — <frame>"; otherwise
  // "It is not true that X — <frame>".
  Narrative counter(Narrative const &target) const override
  {
    static constexpr char const *kFrames[] = {
        "the evidence says otherwise",
        "look at who benefits from this claim",
        "the numbers tell a different story",
        "do your own research",
        "this is spin",
        "ask who is paying for this message",
    };
    std::string base = target.statement;
    while (!base.empty() && (base.back() == '.' || base.back() == '!'))
    {
      base.pop_back();
    }
    auto const h     = hash_combine(hash_bytes(target.statement), cfg_.seed);
    std::string const frame = kFrames[h % std::size(kFrames)];

    std::vector<std::string> tokens;
    std::istringstream in(base);
    for (std::string t; in >> t;)
    {
      tokens.push_back(t);
    }
    auto const verb = std::find_if(tokens.begin(), tokens.end(), [](std::string const &t) {
      auto const w = split_words(t);
      return w.size() == 1 && (w[0] == "is" || w[0] == "are" || w[0] == "will" || w[0] == "can" ||
                               w[0] == "should" || w[0] == "does" || w[0] == "do");
    });
    std::string statement;
    if (verb != tokens.end())
    {
      tokens.insert(std::next(verb), "not");
      statement = join(tokens, " ");
    }
    else
    {
      statement = "It is not true that " + base;
    }
    statement += " \xE2\x80\x94 " + frame;
    return Narrative::from_statement("counter-" + target.id, statement, target.topic);
  }

  AnswerSet elicit(Cyberpersona const &persona, std::span<std::string const> read_posts,
                   std::string const &statement) const override
  {
    double const a = agreement(persona, read_posts, statement);
    AnswerSet out;
    static constexpr std::array<double, 5> kLevels{0.0, 0.25, 0.5, 0.75, 1.0};
    for (std::size_t q = 0; q < 2; ++q)
    {
      double const s = cfg_.likert_spread[q];
      double total   = 0.0;
      for (std::size_t k = 0; k < 5; ++k)
      {
        double const d   = kLevels[k] - a;
        out.likert[q][k] = std::exp(-d * d / (2.0 * s * s));
        total += out.likert[q][k];
      }
      for (auto &p : out.likert[q])
      {
        p /= total;
      }
    }
    // Option order is [yes/true, no/false]; the third question is reverse-coded.
    out.binary[0] = {a, 1.0 - a};
    double const t = 0.05 + 0.9 * a;
    out.binary[1]  = {t, 1.0 - t};
    out.binary[2]  = {1.0 - a, a};
    return out;
  }

  /// Latent agreement in [0,1] driving every stub answer.
  double agreement(Cyberpersona const &persona, std::span<std::string const> read_posts,
                   std::string const &statement) const
  {
    auto const stmt = content_words(statement);
    auto const h    = hash_combine(hash_combine(cfg_.seed, persona.id), hash_bytes(statement));
    double const u  = static_cast<double>(h >> 11) * 0x1.0p-53;
    double a        = cfg_.prior_low + (cfg_.prior_high - cfg_.prior_low) * u;
    if (stmt.empty())
    {
      return a;
    }
    bool const stmt_negated = has_negation(stmt);
    int net                 = 0;
    for (auto const &post : read_posts)
    {
      auto const w        = content_words(post);
      std::size_t covered = 0;
      for (auto const &k : stmt)
      {
        covered += contains_word(w, k) ? 1 : 0;
      }
      if (static_cast<double>(covered) >= cfg_.exposure_coverage * static_cast<double>(stmt.size()))
      {
        net += has_negation(w) != stmt_negated ? -1 : 1;
      }
    }
    return std::clamp(a + cfg_.lambda * net, 0.0, 1.0);
  }

private:
  StubConfig cfg_;
};

/// Backend selection as stored in configuration files.
struct BackendConfig
{
  BackendKind kind{BackendKind::Stub};
  StubConfig stub;
  std::string endpoint{"http://127.0.0.1:8080/v1/generate"};
  std::string model{"default"};
  int samples{10};  // m repeated samples per elicitation question
  double timeout_seconds{30.0};
  int retries{3};
  double temperature{0.7};
};

}  // namespace iosim
