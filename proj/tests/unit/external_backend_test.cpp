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

#include <cstdlib>
#include <mutex>
#include <thread>

using namespace iosim;
using namespace iosim::testing;
using nlohmann::json;

namespace {

/// Loopback generator. `reply` decides each response from the request body.
class FakeGenerator
{
public:
  using Reply = std::function<std::pair<int, std::string>(json const &, std::size_t call)>;

  explicit FakeGenerator(Reply reply)
    : reply_(std::move(reply))
  {
    server_.Post("/v1/generate", [this](httplib::Request const &req, httplib::Response &res) {
      std::size_t call = 0;
      auto const body  = json::parse(req.body);
      {
        std::lock_guard lock(mu_);
        bodies_.push_back(body);
        auths_.push_back(req.get_header_value("Authorization"));
        call = bodies_.size();
      }
      auto [status, reply] = reply_(body, call);
      res.status           = status;
      res.set_content(reply, "application/json");
    });
    port_   = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeGenerator()
  {
    server_.stop();
    thread_.join();
  }

  BackendConfig config(int retries = 3, int samples = 2) const
  {
    BackendConfig c;
    c.kind            = BackendKind::External;
    c.endpoint        = "http://127.0.0.1:" + std::to_string(port_) + "/v1/generate";
    c.model           = "test-model";
    c.retries         = retries;
    c.samples         = samples;
    c.timeout_seconds = 5.0;
    return c;
  }

  std::vector<json> bodies() const
  {
    std::lock_guard lock(mu_);
    return bodies_;
  }

  std::vector<std::string> auths() const
  {
    std::lock_guard lock(mu_);
    return auths_;
  }

private:
  Reply reply_;
  httplib::Server server_;
  int port_{0};
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<json> bodies_;
  std::vector<std::string> auths_;
};

std::pair<int, std::string> text(std::string const &t)
{
  return {200, json{{"text", t}}.dump()};
}

// Answers every purpose with something the client can parse.
std::pair<int, std::string> well_behaved(json const &req, std::size_t)
{
  auto const purpose = req.at("purpose").get<std::string>();
  if (purpose == "score")
  {
    return text("0.8");
  }
  if (purpose == "identify")
  {
    return text("Tariffs protect factory workers.");
  }
  if (purpose == "counter")
  {
    return text("Tariffs raise prices for factory workers.");
  }
  if (purpose == "elicit")
  {
    auto const task = req.at("parts").at(3).get<std::string>();
    if (task.find("scale") != std::string::npos)
    {
      return text("4");
    }
    return text(task.find("misleading") != std::string::npos ? "no" : "yes");
  }
  return text("A generated " + purpose + " about " + req.at("parts").at(3).get<std::string>());
}

}  // namespace

TEST(ExternalBackend, WireFormatAndAuth)
{
  FakeGenerator server(well_behaved);
  ExternalBackend backend(server.config(), std::string("secret-token"));
  auto const b = compose_prompt(make_persona(1), "young adults", "Divide", "immigration", std::nullopt);
  auto const t = generate_message(b, backend, Purpose::Reply, std::string("parent text"));
  EXPECT_EQ(t.rfind("A generated reply", 0), 0u);

  auto const bodies = server.bodies();
  ASSERT_EQ(bodies.size(), 1u);
  auto const &req = bodies[0];
  EXPECT_EQ(req.at("parts"), (json{b.system, b.target, b.objective, b.task}));
  EXPECT_EQ(req.at("purpose"), "reply");
  EXPECT_EQ(req.at("context"), "parent text");
  EXPECT_EQ(req.at("model"), "test-model");
  EXPECT_EQ(server.auths().at(0), "Bearer secret-token");
}

TEST(ExternalBackend, PostHasNullContext)
{
  FakeGenerator server(well_behaved);
  ExternalBackend backend(server.config(), std::string("k"));
  auto const b = compose_prompt(make_persona(1), "x", "Divide", "trade", std::nullopt);
  generate_message(b, backend, Purpose::Post, std::nullopt);
  EXPECT_TRUE(server.bodies().at(0).at("context").is_null());
  EXPECT_EQ(server.bodies().at(0).at("purpose"), "post");
}

TEST(ExternalBackend, RetriesTransientStatuses)
{
  FakeGenerator server([](json const &req, std::size_t call) -> std::pair<int, std::string> {
    if (call == 1)
    {
      return {503, "{}"};
    }
    if (call == 2)
    {
      return {429, "{}"};
    }
    return well_behaved(req, call);
  });
  ExternalBackend backend(server.config(3), std::string("k"));
  EXPECT_EQ(backend.call({"m", {"s", "t", "o", "x"}, "post", std::nullopt, 0.5}), "A generated post about x");
  EXPECT_EQ(server.bodies().size(), 3u);
}

TEST(ExternalBackend, ExhaustedRetriesAreRetryable)
{
  FakeGenerator server([](json const &, std::size_t) -> std::pair<int, std::string> { return {500, "{}"}; });
  ExternalBackend backend(server.config(2), std::string("k"));
  try
  {
    backend.call({"m", {"s", "t", "o", "x"}, "post", std::nullopt, 0.5});
    FAIL() << "expected BackendError";
  }
  catch (BackendError const &ex)
  {
    EXPECT_TRUE(ex.retryable());
  }
  EXPECT_EQ(server.bodies().size(), 3u);
}

TEST(ExternalBackend, ClientErrorsFailFast)
{
  FakeGenerator server([](json const &, std::size_t) -> std::pair<int, std::string> { return {401, "{}"}; });
  ExternalBackend backend(server.config(3), std::string("k"));
  try
  {
    backend.call({"m", {"s", "t", "o", "x"}, "post", std::nullopt, 0.5});
    FAIL() << "expected BackendError";
  }
  catch (BackendError const &ex)
  {
    EXPECT_FALSE(ex.retryable());
  }
  EXPECT_EQ(server.bodies().size(), 1u);
}

TEST(ExternalBackend, MalformedReplyAndEmptyText)
{
  FakeGenerator server([](json const &, std::size_t call) -> std::pair<int, std::string> {
    if (call == 1)
    {
      return {200, "not json"};
    }
    return text("   ");
  });
  ExternalBackend backend(server.config(0), std::string("k"));
  auto const b = compose_prompt(make_persona(1), "x", "Divide", "trade", std::nullopt);
  EXPECT_THROW(generate_message(b, backend, Purpose::Post, std::nullopt), BackendError);
  EXPECT_THROW(generate_message(b, backend, Purpose::Post, std::nullopt), BackendError);
}

TEST(ExternalBackend, AnalysisOperations)
{
  FakeGenerator server(well_behaved);
  ExternalBackend backend(server.config(), std::string("k"));
  std::vector<std::string> const posts{"tariffs protect workers", "tariffs good"};
  auto const n = identify_dominant_narrative(posts, backend, 5, "trade");
  EXPECT_EQ(n.statement, "Tariffs protect factory workers.");
  EXPECT_EQ(n.topic, "trade");
  EXPECT_DOUBLE_EQ(score_alignment("anything", n, backend), 0.8);
  auto const c = derive_counter_narrative(n, backend);
  EXPECT_EQ(c.topic, "trade");
  EXPECT_EQ(c.statement, "Tariffs raise prices for factory workers.");

  std::vector<std::string> purposes;
  for (auto const &b : server.bodies())
  {
    purposes.push_back(b.at("purpose"));
  }
  EXPECT_EQ(purposes, (std::vector<std::string>{"identify", "score", "counter"}));
}

TEST(ExternalBackend, ElicitationSamplesEachQuestion)
{
  FakeGenerator server(well_behaved);
  ExternalBackend backend(server.config(3, 4), std::string("k"));
  std::vector<std::string> const read{"first post", "second post"};
  auto const a = backend.elicit(make_persona(2), read, "Tariffs protect workers");
  EXPECT_EQ(server.bodies().size(), 5u * 4u);
  // "4" on both Likert questions, yes/true on the first two binaries, "no" on the reverse-coded one.
  EXPECT_EQ(a.likert[0], (std::array<double, 5>{0, 0, 0, 1, 0}));
  EXPECT_EQ(a.likert[1], (std::array<double, 5>{0, 0, 0, 1, 0}));
  EXPECT_EQ(a.binary[0], (std::array<double, 2>{1, 0}));
  EXPECT_EQ(a.binary[2], (std::array<double, 2>{0, 1}));
  EXPECT_DOUBLE_EQ(agreement_score(a), 0.75);
  auto const ctx = server.bodies().front().at("context").get<std::string>();
  EXPECT_NE(ctx.find("first post"), std::string::npos);
  EXPECT_EQ(server.bodies().front().at("purpose"), "elicit");
}

TEST(ExternalBackend, UnparseableAnswersFail)
{
  FakeGenerator server([](json const &, std::size_t) { return text("maybe"); });
  ExternalBackend backend(server.config(0, 2), std::string("k"));
  EXPECT_THROW(backend.elicit(make_persona(2), {}, "Tariffs protect workers"), BackendError);
}

TEST(ExternalBackend, ConfigurationChecks)
{
  BackendConfig c;
  c.kind = BackendKind::External;
  ::unsetenv("IOSIM_API_KEY");
  EXPECT_THROW(ExternalBackend{c}, ConfigError);
  EXPECT_THROW(make_backend(c), ConfigError);

  ::setenv("IOSIM_API_KEY", "from-env", 1);
  EXPECT_NO_THROW(ExternalBackend{c});
  ::unsetenv("IOSIM_API_KEY");

  c.endpoint = "ftp://example.org/x";
  EXPECT_THROW(ExternalBackend(c, std::string("k")), ConfigError);
  c.endpoint = "http://127.0.0.1:1/x";
  c.samples  = 0;
  EXPECT_THROW(ExternalBackend(c, std::string("k")), ConfigError);

  BackendConfig stub;
  EXPECT_EQ(make_backend(stub)->kind(), BackendKind::Stub);
}

TEST(ExternalBackend, AnswerParsing)
{
  EXPECT_EQ(detail::parse_likert("I'd say 4 out of 5"), 3u);
  EXPECT_EQ(detail::parse_likert("1"), 0u);
  EXPECT_FALSE(detail::parse_likert("7").has_value());
  EXPECT_FALSE(detail::parse_likert("none").has_value());
  EXPECT_EQ(detail::parse_binary("Yes, definitely"), 0u);
  EXPECT_EQ(detail::parse_binary("It is FALSE."), 1u);
  EXPECT_FALSE(detail::parse_binary("unsure").has_value());
}

// An unreachable generator aborts the run with a marker; the partial log survives.
TEST(ExternalBackend, UnreachableGeneratorAbortsRun)
{
  auto const osn = make_osn(20, 1);
  BackendConfig c;
  c.kind            = BackendKind::External;
  c.endpoint        = "http://127.0.0.1:9/v1/generate";
  c.retries         = 1;
  c.timeout_seconds = 0.5;
  ExternalBackend backend(c, std::string("k"));
  auto const run = run_simulation(make_sim(10, 1), osn, std::nullopt, backend);
  ASSERT_TRUE(run.log.aborted());
  EXPECT_NE(run.log.abort_reason()->find("backend"), std::string::npos);

  std::stringstream ss;
  write_jsonl(run.log, ss);
  auto const back = read_jsonl(ss);
  EXPECT_TRUE(back.aborted());
  EXPECT_EQ(back.events().size(), run.log.events().size());
}
