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

#include "iosim/experiment.hpp"

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace iosim::testing {

/// Scratch directory removed on destruction.
class TempDir
{
public:
  explicit TempDir(std::string const &tag = "iosim")
  {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }

  ~TempDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  TempDir(TempDir const &)            = delete;
  TempDir &operator=(TempDir const &) = delete;

  std::filesystem::path const &path() const
  {
    return path_;
  }

private:
  std::filesystem::path path_;
};

inline Osn make_osn(std::size_t n, std::uint64_t seed, GraphConfig cfg = {})
{
  cfg.n         = n;
  auto personas = generate_personas(n, DemographicsConfig::defaults(), seed);
  auto graph    = generate_follower_graph(personas, cfg, seed);
  return {std::move(personas), std::move(graph)};
}

inline Cyberpersona make_persona(AccountId id, std::vector<std::string> interests = {"politics"}, int age = 30,
                                 std::string occupation = "teacher")
{
  Cyberpersona p;
  p.id         = id;
  p.name       = "Agent " + std::to_string(id);
  p.age        = age;
  p.gender     = "female";
  p.traits     = {"curious"};
  p.interests  = std::move(interests);
  p.occupation = std::move(occupation);
  return p;
}

inline SimulationConfig make_sim(Tick ticks, std::uint64_t seed)
{
  SimulationConfig c;
  c.total_ticks = ticks;
  c.seed        = seed;
  return c;
}

/// Campaign from the default matrix templates, prepared on `osn`.
inline PreparedCampaign make_campaign(Osn const &osn, Workflow w, double density, std::uint64_t seed,
                                      std::optional<std::int64_t> observe = std::nullopt)
{
  auto spec          = ExperimentMatrix::default_campaigns().at(w);
  spec.red_density   = density;
  spec.seed          = seed;
  spec.observe_ticks = observe;
  auto const plan    = validate_campaign(spec, osn.personas);
  GraphConfig wiring;
  wiring.n = osn.personas.size();
  return prepare_campaign(plan, osn.graph, osn.personas, DemographicsConfig::defaults(), wiring);
}

/// Stub that starts failing every generation request after `ok_calls` calls.
class FailingBackend final : public GeneratorBackend
{
public:
  explicit FailingBackend(std::size_t ok_calls, bool fail_elicit = false)
    : ok_calls_(ok_calls)
    , fail_elicit_(fail_elicit)
  {}

  BackendKind kind() const override
  {
    return BackendKind::Stub;
  }

  std::string generate(PromptBundle const &b, Purpose p, std::optional<std::string> const &ctx) const override
  {
    if (calls_++ >= ok_calls_)
    {
      throw BackendError("injected failure", true);
    }
    return stub_.generate(b, p, ctx);
  }

  Narrative identify(std::span<std::string const> posts, std::string const &topic) const override
  {
    return stub_.identify(posts, topic);
  }

  double score(std::string const &m, Narrative const &n) const override
  {
    return stub_.score(m, n);
  }

  Narrative counter(Narrative const &t) const override
  {
    return stub_.counter(t);
  }

  AnswerSet elicit(Cyberpersona const &p, std::span<std::string const> r, std::string const &s) const override
  {
    if (fail_elicit_)
    {
      throw BackendError("injected elicitation failure", false);
    }
    return stub_.elicit(p, r, s);
  }

private:
  StubBackend stub_;
  std::size_t ok_calls_;
  bool fail_elicit_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace iosim::testing
