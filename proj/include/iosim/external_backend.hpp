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
#include "iosim/text.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <thread>

namespace iosim {

/// Fixed survey wording. Answers to the third binary question are reverse-coded.
struct ElicitationQuestion
{
  bool likert;
  char const *text;
};

inline constexpr ElicitationQuestion kElicitationQuestions[5] = {
    {true, "On a scale from 1 (strongly disagree) to 5 (strongly agree), how much do you agree with the "
           "statement? Answer with a single digit."},
    {true, "On a scale from 1 (certainly false) to 5 (certainly true), how true do you believe the statement "
           "is? Answer with a single digit."},
    {false, "Do you agree with the statement? Answer yes or no."},
    {false, "Is the statement true or false? Answer true or false."},
    {false, "Is the statement misleading? Answer yes or no."},
};

/// One request on the wire.
struct WireRequest
{
  std::string model;
  std::array<std::string, 4> parts;  // system, target, objective, task
  std::string purpose;               // post, reply, identify, score, counter, elicit
  std::optional<std::string> context;
  double temperature{0.7};

  nlohmann::json to_json() const
  {
    nlohmann::json j;
    j["model"]       = model;
    j["parts"]       = parts;
    j["purpose"]     = purpose;
    j["context"]     = context ? nlohmann::json(*context) : nlohmann::json(nullptr);
    j["temperature"] = temperature;
    return j;
  }
};

namespace detail {

struct Endpoint
{
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline Endpoint parse_endpoint(std::string const &url)
{
  static std::regex const re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re))
  {
    throw ConfigError("backend endpoint is not an http(s) URL: '" + url + "'");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (url.rfind("https://", 0) == 0)
  {
    throw ConfigError("https endpoints need a TLS-enabled build");
  }
#endif
  return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

/// Zero-based Likert option from the first digit in the reply, if it is 1..5.
inline std::optional<std::size_t> parse_likert(std::string const &text)
{
  for (char c : text)
  {
    if (c >= '1' && c <= '5')
    {
      return static_cast<std::size_t>(c - '1');
    }
    if (c >= '0' && c <= '9')
    {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

/// 0 for yes/true, 1 for no/false, from the first such word.
inline std::optional<std::size_t> parse_binary(std::string const &text)
{
  for (auto const &w : split_words(text))
  {
    if (w == "yes" || w == "true")
    {
      return 0;
    }
    if (w == "no" || w == "false")
    {
      return 1;
    }
  }
  return std::nullopt;
}

}  // namespace detail

/**
 * HTTP client for a hosted generator.
 *
 * Each call is one POST of WireRequest::to_json(); the reply must be a JSON
 * object with a string field "text". Transport failures, 429 and 5xx are
 * retried up to `retries` times with exponential backoff; other statuses and
 * malformed replies fail immediately. Answer distributions are estimated
 * from `samples` repeated requests per question.
 */
class ExternalBackend final : public GeneratorBackend
{
public:
  explicit ExternalBackend(BackendConfig cfg, std::optional<std::string> api_key = std::nullopt)
    : cfg_(std::move(cfg))
    , endpoint_(detail::parse_endpoint(cfg_.endpoint))
  {
    if (api_key)
    {
      api_key_ = *api_key;
    }
    else if (char const *env = std::getenv("IOSIM_API_KEY"); env && *env)
    {
      api_key_ = env;
    }
    else
    {
      throw ConfigError("IOSIM_API_KEY is not set");
    }
    if (cfg_.samples < 1)
    {
      throw ConfigError("backend samples must be >= 1");
    }
    if (cfg_.retries < 0 || !(cfg_.timeout_seconds > 0.0))
    {
      throw ConfigError("backend retries must be >= 0 and timeout positive");
    }
  }

  BackendKind kind() const override
  {
    return BackendKind::External;
  }

  BackendConfig const &config() const
  {
    return cfg_;
  }

  std::string generate(PromptBundle const &b, Purpose purpose,
                       std::optional<std::string> const &context) const override
  {
    return call({cfg_.model, {b.system, b.target, b.objective, b.task}, to_string(purpose), context,
                 cfg_.temperature});
  }

  Narrative identify(std::span<std::string const> posts, std::string const &topic) const override
  {
    std::string task = "Topic: " + (topic.empty() ? std::string("any") : topic) + ". Posts:\n";
    for (std::size_t i = 0; i < posts.size(); ++i)
    {
      task += std::to_string(i + 1) + ". " + posts[i] + "\n";
    }
    task += "Reply with one sentence stating the dominant narrative.";
    auto const text = trim(call({cfg_.model,
                                 {"You analyze social media discussions.", "", "Identify the dominant narrative.",
                                  task},
                                 "identify", std::nullopt, 0.0}));
    if (content_words(text).empty())
    {
      throw AnalysisError("backend returned an empty narrative");
    }
    return Narrative::from_statement("identified-" + topic, text, topic);
  }

  double score(std::string const &message, Narrative const &narrative) const override
  {
    auto const text = call({cfg_.model,
                            {"You rate stance alignment.", "",
                             "Rate how strongly the message supports the narrative.",
                             "Narrative: \"" + narrative.statement +
                                 "\"\nReply with a single number between 0 and 1."},
                            "score", message, 0.0});
    static std::regex const num(R"([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)");
    std::smatch m;
    if (!std::regex_search(text, m, num))
    {
      throw BackendError("score reply has no number: '" + text + "'", false);
    }
    return std::stod(m.str());
  }

  Narrative counter(Narrative const &target) const override
  {
    auto const text = trim(call({cfg_.model,
                                 {"You write concise counter-arguments.", "",
                                  "State the opposing claim in one sentence.",
                                  "Narrative: \"" + target.statement + "\""},
                                 "counter", std::nullopt, 0.0}));
    if (content_words(text).empty())
    {
      throw BackendError("backend returned an empty counter-narrative", false);
    }
    return Narrative::from_statement(target.id + "-counter", text, target.topic);
  }

  AnswerSet elicit(Cyberpersona const &persona, std::span<std::string const> read_posts,
                   std::string const &statement) const override
  {
    std::string seen;
    for (auto const &p : read_posts)
    {
      seen += "- " + p + "\n";
    }
    AnswerSet out;
    for (std::size_t q = 0; q < 5; ++q)
    {
      auto const &question = kElicitationQuestions[q];
      std::array<double, 5> counts{};
      double valid = 0.0;
      for (int s = 0; s < cfg_.samples; ++s)
      {
        auto const reply = call({cfg_.model,
                                 {persona_system_prompt(persona), "", "Answer a survey question honestly.",
                                  "Statement: \"" + statement + "\"\n" + question.text},
                                 "elicit", seen, cfg_.temperature});
        auto const k = question.likert ? detail::parse_likert(reply) : detail::parse_binary(reply);
        if (k)
        {
          counts[*k] += 1.0;
          valid += 1.0;
        }
      }
      if (valid == 0.0)
      {
        throw BackendError("no parseable answer for elicitation question " + std::to_string(q + 1), false);
      }
      if (question.likert)
      {
        for (std::size_t k = 0; k < 5; ++k)
        {
          out.likert[q][k] = counts[k] / valid;
        }
      }
      else
      {
        out.binary[q - 2] = {counts[0] / valid, counts[1] / valid};
      }
    }
    return out;
  }

  /// One request with retries; returns the "text" field of the reply.
  std::string call(WireRequest const &req) const
  {
    auto const body = req.to_json().dump();
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt)
    {
      if (attempt > 0)
      {
        std::this_thread::sleep_for(std::chrono::milliseconds(100) * (1 << std::min(attempt - 1, 6)));
      }
      httplib::Client cli(endpoint_.origin);
      auto const timeout = std::chrono::duration<double>(cfg_.timeout_seconds);
      auto const secs    = static_cast<time_t>(timeout.count());
      auto const usecs   = static_cast<time_t>((timeout.count() - static_cast<double>(secs)) * 1e6);
      cli.set_connection_timeout(secs, usecs);
      cli.set_read_timeout(secs, usecs);
      cli.set_write_timeout(secs, usecs);
      cli.set_bearer_token_auth(api_key_);
      auto res = cli.Post(endpoint_.path, body, "application/json");
      if (!res)
      {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500)
      {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
      {
        throw BackendError("HTTP " + std::to_string(res->status) + " from backend", false);
      }
      auto const reply = nlohmann::json::parse(res->body, nullptr, false);
      if (reply.is_discarded() || !reply.is_object() || !reply.contains("text") || !reply["text"].is_string())
      {
        throw BackendError("backend reply lacks a string 'text' field", false);
      }
      return reply["text"].get<std::string>();
    }
    throw BackendError("backend unavailable after " + std::to_string(cfg_.retries + 1) + " attempts: " + last_error,
                       true);
  }

private:
  BackendConfig cfg_;
  detail::Endpoint endpoint_;
  std::string api_key_;
};

/// Backend selected by configuration. External requires IOSIM_API_KEY.
inline std::unique_ptr<GeneratorBackend> make_backend(BackendConfig const &cfg)
{
  if (cfg.kind == BackendKind::External)
  {
    return std::make_unique<ExternalBackend>(cfg);
  }
  return std::make_unique<StubBackend>(cfg.stub);
}

}  // namespace iosim
