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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. argv[1] is a scratch directory for the matrix run.

#include "fixtures.hpp"
#include "jsd_oracle.hpp"
#include "random_logs.hpp"

#include "iosim/report.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>

using namespace iosim;
using namespace iosim::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
  bool pass{false};
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4)
{
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// ---- shared scaled matrix ---------------------------------------------------

struct MatrixRun
{
  fs::path dir;
  ExperimentMatrix matrix{ExperimentMatrix::scaled()};
  MatrixSummary summary;
  double seconds{0.0};
  std::map<std::string, ManifestEntry> manifest;
  std::vector<fs::path> charts;
  std::string error;

  double reach(std::string const &id) const
  {
    return manifest.at(id).reach;
  }

  EventLog log(Cell const &c) const
  {
    std::ifstream in(dir / manifest.at(c.id()).events);
    return read_jsonl(in);
  }
};

MatrixRun run_scaled_matrix(fs::path const &dir)
{
  MatrixRun r;
  r.dir = dir;
  fs::remove_all(dir);
  StubBackend stub;
  auto const start = Clock::now();
  try
  {
    r.summary  = run_matrix(r.matrix, std::max(1u, std::thread::hardware_concurrency()), dir, stub, nullptr);
    r.charts   = emit_reports(dir).charts;
    r.manifest = detail::read_manifest(dir / kManifestFile);
  }
  catch (std::exception const &ex)
  {
    r.error = ex.what();
  }
  r.seconds = seconds_since(start);
  return r;
}

// ---- criteria ---------------------------------------------------------------

Outcome determinism()
{
  auto const start = Clock::now();
  auto const osn   = make_osn(200, 21);
  StubBackend stub;
  std::vector<std::optional<PreparedCampaign>> runs{std::nullopt};
  for (auto w : {Workflow::Release, Workflow::Support, Workflow::Counter})
  {
    runs.push_back(make_campaign(osn, w, 0.08, 21));
  }
  auto cfg = make_sim(100, 21);
  cfg.baseline_probes.push_back(
      {"Release", "immigration", ExperimentMatrix::default_campaigns().at(Workflow::Release).narrative});
  std::size_t identical = 0;
  for (auto const &c : runs)
  {
    auto const &sim = c ? make_sim(100, 21) : cfg;
    auto const a    = canonical_log_text(run_simulation(sim, osn, c, stub).log);
    auto const b    = canonical_log_text(run_simulation(sim, osn, c, stub).log);
    identical += a == b ? 1 : 0;
  }
  double const secs = seconds_since(start);
  return {identical == runs.size() && secs < 60.0,
          std::to_string(identical) + "/" + std::to_string(runs.size()) + " run pairs byte-identical, " + fmt(secs, 3) +
              " s"};
}

Outcome reach_oracle_agreement()
{
  std::size_t agree = 0;
  std::size_t const total = 200;
  for (std::uint64_t seed = 1; seed <= total; ++seed)
  {
    auto const log = random_log(seed);
    std::ostringstream os;
    write_jsonl(log, os);
    std::istringstream in(os.str());
    double const oracle = reach_oracle(os.str());
    agree += compute_reach(log) == oracle && compute_reach(in) == oracle ? 1 : 0;
  }
  return {agree == total, std::to_string(agree) + "/" + std::to_string(total) + " random logs match"};
}

Outcome jsd_suite()
{
  auto span = [](BeliefArray const &a) { return std::span<double const>(a); };
  BeliefArray const e0{1, 0, 0, 0, 0}, e1{0, 1, 0, 0, 0};
  bool ok = jensen_shannon(span(e0), span(e1)) == 1.0 && jensen_shannon(span(e0), span(e0)) == 0.0;
  Rng rng(314159);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i)
  {
    BeliefArray p{}, q{};
    double sp = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < 5; ++k)
    {
      p[k] = rng.bernoulli(0.1) ? 0.0 : rng.uniform();
      q[k] = rng.bernoulli(0.1) ? 0.0 : rng.uniform();
      sp += p[k];
      sq += q[k];
    }
    p[0] += sp == 0.0 ? 1.0 : 0.0;
    q[0] += sq == 0.0 ? 1.0 : 0.0;
    auto const bp   = BeliefVector::from_scores(p);
    auto const bq   = BeliefVector::from_scores(q);
    double const pq = jensen_shannon(bp, bq);
    ok              = ok && pq == jensen_shannon(bq, bp) && pq >= 0.0 && pq <= 1.0 && jensen_shannon(bp, bp) == 0.0;
    worst           = std::max(worst, std::abs(pq - jsd_oracle(bp.values(), bq.values())));
  }
  return {ok && worst <= 1e-10, "max |error| vs 50-digit oracle " + fmt(worst, 3) + " over 10000 pairs"};
}

Outcome baseline_purity(MatrixRun const &mr)
{
  std::size_t red_events = 0, nonzero = 0, runs = 0;
  auto scan = [&](EventLog const &log) {
    ++runs;
    for (auto const &e : log.events())
    {
      red_events += e.actor_is_red ? 1 : 0;
    }
    nonzero += compute_reach(log) != 0.0 ? 1 : 0;
  };
  for (auto const &c : matrix_cells(mr.matrix))
  {
    if (!c.workflow)
    {
      scan(mr.log(c));
    }
  }
  // A campaign prepared at zero density contributes no accounts.
  auto const osn = make_osn(100, 4);
  StubBackend stub;
  for (auto w : {Workflow::Release, Workflow::Support, Workflow::Counter})
  {
    scan(run_simulation(make_sim(50, 4), osn, make_campaign(osn, w, 0.0, 4), stub).log);
  }
  return {red_events == 0 && nonzero == 0 && runs == 8,
          std::to_string(runs) + " zero-density runs, " + std::to_string(red_events) + " red events, " +
              std::to_string(nonzero) + " with nonzero reach"};
}

bool is_action(EventKind k)
{
  return k == EventKind::Post || k == EventKind::Reply || k == EventKind::Share || k == EventKind::Like ||
         k == EventKind::Read;
}

Outcome action_closure(MatrixRun const &mr)
{
  std::size_t violations = 0, red_actions = 0, logs = 0, support_engagements = 0;
  for (auto const &c : matrix_cells(mr.matrix))
  {
    if (!c.workflow)
    {
      continue;
    }
    auto const log       = mr.log(c);
    double const thresh  = mr.matrix.campaigns.at(*c.workflow).alignment_threshold;
    ++logs;
    for (auto const &e : log.events())
    {
      if (!e.actor_is_red || !is_action(e.kind))
      {
        continue;
      }
      ++red_actions;
      switch (*c.workflow)
      {
      case Workflow::Release:
        violations += (e.kind == EventKind::Share || e.kind == EventKind::Like) ? 1 : 0;
        break;
      case Workflow::Counter:
        violations += (e.kind == EventKind::Reply || e.kind == EventKind::Read) ? 0 : 1;
        break;
      case Workflow::Support:
        if (e.kind == EventKind::Like || e.kind == EventKind::Share)
        {
          ++support_engagements;
          violations += (e.alignment_score && *e.alignment_score >= thresh) ? 0 : 1;
        }
        break;
      }
    }
  }
  return {violations == 0 && logs == 90 && support_engagements > 0,
          std::to_string(logs) + " campaign logs, " + std::to_string(red_actions) + " red actions, " +
              std::to_string(support_engagements) + " support engagements, " + std::to_string(violations) +
              " violations"};
}

Outcome checkpoint_schedule()
{
  StubBackend stub;
  auto const osn  = make_osn(20, 6);
  bool ok         = true;
  std::string detail;
  for (Tick T : {1, 7, 100, 500})
  {
    std::set<Tick> expected;
    for (Tick k = 1; k <= 4; ++k)
    {
      expected.insert((k * T + 3) / 4);  // ceil(k/4 * T) in integers
    }
    auto cfg = make_sim(T, 6);
    cfg.baseline_probes.push_back({"Counter", "ukraine", std::nullopt});
    std::vector<EventLog> logs;
    logs.push_back(run_simulation(cfg, osn, std::nullopt, stub).log);
    logs.push_back(run_simulation(make_sim(T, 6), osn, make_campaign(osn, Workflow::Release, 0.2, 6), stub).log);
    for (std::size_t which = 0; which < logs.size(); ++which)
    {
      auto const &log = logs[which];
      std::set<Tick> seen;
      std::optional<Tick> first_reach;
      std::set<AccountId> const benign(log.header().benign_ids.begin(), log.header().benign_ids.end());
      for (auto const &e : log.events())
      {
        if (e.kind == EventKind::CheckpointElicitation)
        {
          seen.insert(e.tick);
        }
        if (e.kind == EventKind::Read && benign.count(e.actor_id) && !first_reach)
        {
          auto const *m = log.message(*e.message_id);
          if (m && m->author_is_red)
          {
            first_reach = e.tick;
          }
        }
      }
      // Baselines elicit everyone at every checkpoint. Campaign runs elicit
      // reached agents only, so a checkpoint before the first exposure is empty.
      std::set<Tick> want;
      for (auto t : expected)
      {
        if (which == 0 || (first_reach && *first_reach <= t))
        {
          want.insert(t);
        }
      }
      ok = ok && seen == want;
    }
    detail += (detail.empty() ? "T=" : ", T=") + std::to_string(T) + " -> {";
    for (auto t : expected)
    {
      detail += (t == *expected.begin() ? "" : ",") + std::to_string(t);
    }
    detail += "}";
  }
  return {ok, detail};
}

Outcome vector_contracts(MatrixRun const &mr)
{
  std::size_t vectors = 0, bad = 0;
  auto check = [&](BeliefArray const &v) {
    ++vectors;
    double sum = 0.0;
    for (double x : v)
    {
      bad += x < 0.0 ? 1 : 0;
      sum += x;
    }
    bad += std::abs(sum - 1.0) <= 1e-9 ? 0 : 1;
  };
  for (auto const &c : matrix_cells(mr.matrix))
  {
    auto const log = mr.log(c);
    for (auto const &e : log.events())
    {
      if (e.kind == EventKind::CheckpointElicitation)
      {
        bad += (e.prior && e.posterior) ? 0 : 1;
        if (e.prior && e.posterior)
        {
          check(*e.prior);
          check(*e.posterior);
        }
      }
    }
  }
  // Hand-computed: Likert top box scores 1.0, uniform Likert 0.5, 70% yes 0.7.
  AnswerSet a;
  a.likert     = {{{0, 0, 0, 0, 1}, {0.2, 0.2, 0.2, 0.2, 0.2}}};
  a.binary     = {{{0.7, 0.3}, {1, 0}, {0, 1}}};
  auto const s = question_scores(a);
  auto const v = answers_to_vector(a);
  double const total = 1.0 + 0.5 + 0.7 + 1.0 + 1e-9;
  std::array<double, 5> const want{1.0 / total, 0.5 / total, 0.7 / total, 1.0 / total, 1e-9 / total};
  bool mapped = std::abs(s[0] - 1.0) <= 1e-12 && std::abs(s[1] - 0.5) <= 1e-12 && std::abs(s[2] - 0.7) <= 1e-12 &&
                std::abs(s[3] - 1.0) <= 1e-12 && std::abs(s[4]) <= 1e-12;
  for (std::size_t i = 0; i < 5; ++i)
  {
    mapped = mapped && std::abs(v[i] - want[i]) <= 1e-12;
  }
  return {bad == 0 && vectors > 0 && mapped,
          std::to_string(vectors) + " logged vectors checked, " + std::to_string(bad) + " violations, mapping " +
              (mapped ? "exact" : "wrong")};
}

double mean_reach(MatrixRun const &mr, Workflow w, double d)
{
  double sum = 0.0;
  for (auto s : mr.matrix.seeds)
  {
    sum += mr.reach(Cell{w, d, s}.id());
  }
  return sum / static_cast<double>(mr.matrix.seeds.size());
}

Outcome release_trend(MatrixRun const &mr)
{
  std::vector<double> const ds{0.04, 0.08, 0.15, 0.30, 0.45};
  std::vector<double> means;
  std::string detail = "mean reach";
  for (double d : ds)
  {
    means.push_back(mean_reach(mr, Workflow::Release, d));
    detail += " " + detail::format_double(d) + ":" + fmt(means.back(), 3);
  }
  int inversions = 0;
  bool small     = true;
  for (std::size_t i = 1; i < means.size(); ++i)
  {
    if (means[i] < means[i - 1])
    {
      ++inversions;
      small = small && means[i - 1] - means[i] <= 0.05;
    }
  }
  double const lift = means.back() - means.front();
  detail += ", lift " + fmt(lift, 3);
  return {inversions <= 1 && small && lift >= 0.2, detail};
}

Outcome reactive_efficiency(MatrixRun const &mr)
{
  int wins = 0;
  std::string detail;
  for (auto s : mr.matrix.seeds)
  {
    double const rel = mr.reach(Cell{Workflow::Release, 0.04, s}.id());
    double const sup = mr.reach(Cell{Workflow::Support, 0.04, s}.id());
    double const cou = mr.reach(Cell{Workflow::Counter, 0.04, s}.id());
    bool const win   = sup > rel && cou > rel;
    wins += win ? 1 : 0;
    detail += (detail.empty() ? "" : "; ") + std::string("s") + std::to_string(s) + " R=" + fmt(rel, 3) +
              " S=" + fmt(sup, 3) + " C=" + fmt(cou, 3);
  }
  return {wins >= 4, std::to_string(wins) + "/5 seeds (" + detail + ")"};
}

Outcome end_to_end(MatrixRun const &mr)
{
  if (!mr.error.empty())
  {
    return {false, mr.error};
  }
  std::size_t done = 0;
  for (auto const &[id, e] : mr.manifest)
  {
    done += e.status == "done" && fs::exists(mr.dir / e.events) && fs::exists(mr.dir / e.metrics) ? 1 : 0;
  }
  std::size_t charts = 0;
  for (auto const &c : mr.charts)
  {
    charts += fs::exists(c) && c.extension() == ".svg" ? 1 : 0;
  }
  bool const ok = mr.summary.total == 95 && done == 95 && mr.summary.failed == 0 &&
                  fs::exists(mr.dir / kAggregateFile) && charts == 6 && mr.seconds < 600.0;
  return {ok, std::to_string(done) + "/95 cells done, " + std::to_string(charts) + " charts, " + fmt(mr.seconds, 3) +
                  " s"};
}

}  // namespace

int main(int argc, char **argv)
{
  fs::path const work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "iosim-acceptance";
  fs::create_directories(work);
  auto const matrix = run_scaled_matrix(work / "scaled_matrix");
  bool const have_matrix = matrix.error.empty();

  auto needs_matrix = [&](std::function<Outcome(MatrixRun const &)> f) {
    return [&matrix, have_matrix, f]() -> Outcome {
      if (!have_matrix)
      {
        return {false, "matrix run failed: " + matrix.error};
      }
      return f(matrix);
    };
  };

  std::vector<std::pair<std::string, std::function<Outcome()>>> const criteria{
      {"determinism", determinism},
      {"reach-oracle", reach_oracle_agreement},
      {"jsd-suite", jsd_suite},
      {"baseline-purity", needs_matrix(baseline_purity)},
      {"action-closure", needs_matrix(action_closure)},
      {"checkpoint-schedule", checkpoint_schedule},
      {"belief-vector-contracts", needs_matrix(vector_contracts)},
      {"release-trend", needs_matrix(release_trend)},
      {"reactive-efficiency", needs_matrix(reactive_efficiency)},
      {"end-to-end-matrix", needs_matrix(end_to_end)},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i)
  {
    Outcome o;
    try
    {
      o = criteria[i].second();
    }
    catch (std::exception const &ex)
    {
      o = {false, std::string("exception: ") + ex.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
