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

#include "iosim/belief.hpp"
#include "iosim/error.hpp"
#include "iosim/event_log.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace iosim {

/**
 * Fraction of benign accounts with at least one Read of a red-authored
 * message. Red accounts are excluded from numerator and denominator.
 */
inline double compute_reach(EventLog const &log)
{
  auto const &benign = log.header().benign_ids;
  if (benign.empty())
  {
    return 0.0;
  }
  std::set<AccountId> const red(log.header().red_ids.begin(), log.header().red_ids.end());
  std::set<AccountId> const benign_set(benign.begin(), benign.end());
  std::set<AccountId> reached;
  for (auto const &e : log.events())
  {
    if (e.kind != EventKind::Read || !e.message_id || !benign_set.count(e.actor_id))
    {
      continue;
    }
    auto const *m = log.message(*e.message_id);
    if (m && red.count(m->author))
    {
      reached.insert(e.actor_id);
    }
  }
  return static_cast<double>(reached.size()) / static_cast<double>(benign_set.size());
}

inline double compute_reach(std::istream &jsonl)
{
  return compute_reach(read_jsonl(jsonl));
}

struct BeliefTrace
{
  AccountId agent_id{0};
  std::string statement;
  BeliefVector prior;
  std::vector<std::optional<BeliefVector>> posteriors;  // index i = checkpoint i + 1
  std::vector<std::optional<double>> agreements;
  std::optional<double> prior_agreement;
};

/// Traces of one probe, one per benign agent with at least one elicitation.
inline std::vector<BeliefTrace> traces_from_log(EventLog const &log, std::string const &probe)
{
  std::set<AccountId> const red(log.header().red_ids.begin(), log.header().red_ids.end());
  auto const n_cp = log.header().checkpoints.size();
  std::map<AccountId, BeliefTrace> traces;
  for (auto const &e : log.events())
  {
    if (e.kind != EventKind::CheckpointElicitation || e.probe.value_or("") != probe || red.count(e.actor_id) ||
        !e.prior || !e.posterior || !e.checkpoint)
    {
      continue;
    }
    auto const idx = static_cast<std::size_t>(*e.checkpoint);
    if (idx < 1 || idx > n_cp)
    {
      throw InputError("elicitation event with checkpoint index out of range");
    }
    auto [it, fresh] = traces.try_emplace(e.actor_id);
    auto &t          = it->second;
    if (fresh)
    {
      t.agent_id  = e.actor_id;
      t.statement = e.statement.value_or("");
      t.prior     = BeliefVector::from_normalized(*e.prior);
      t.prior_agreement = e.prior_agreement;
      t.posteriors.assign(n_cp, std::nullopt);
      t.agreements.assign(n_cp, std::nullopt);
    }
    t.posteriors[idx - 1] = BeliefVector::from_normalized(*e.posterior);
    t.agreements[idx - 1] = e.agreement;
  }
  std::vector<BeliefTrace> out;
  for (auto &[id, t] : traces)
  {
    out.push_back(std::move(t));
  }
  return out;
}

/// Probe labels that occur in elicitation events, sorted.
inline std::vector<std::string> probes_in_log(EventLog const &log)
{
  std::set<std::string> labels;
  for (auto const &e : log.events())
  {
    if (e.kind == EventKind::CheckpointElicitation && e.probe)
    {
      labels.insert(*e.probe);
    }
  }
  return {labels.begin(), labels.end()};
}

struct CheckpointSummary
{
  int checkpoint{0};
  std::size_t n_agents{0};
  double mean_jsd{std::numeric_limits<double>::quiet_NaN()};
  double mean_agreement{std::numeric_limits<double>::quiet_NaN()};
  // Distribution of JSD(P, Q_t): min, lower quartile, median, upper quartile, max.
  std::array<double, 5> jsd_quantiles{};
};

struct BeliefCurve
{
  std::vector<CheckpointSummary> checkpoints;
  std::optional<double> final_score;  // mean JSD(P, Q_last)
};

namespace detail {

// Linear-interpolation quantiles of a sorted sample.
inline double quantile(std::vector<double> const &sorted, double q)
{
  if (sorted.empty())
  {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double const pos = q * static_cast<double>(sorted.size() - 1);
  auto const lo    = static_cast<std::size_t>(std::floor(pos));
  auto const hi    = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

inline BeliefCurve belief_change_curve(std::vector<BeliefTrace> const &traces)
{
  if (traces.empty())
  {
    throw InputError("belief_change_curve: no traces");
  }
  std::size_t n_cp = 0;
  for (auto const &t : traces)
  {
    n_cp = std::max(n_cp, t.posteriors.size());
  }
  BeliefCurve curve;
  for (std::size_t c = 0; c < n_cp; ++c)
  {
    CheckpointSummary s;
    s.checkpoint = static_cast<int>(c + 1);
    std::vector<double> jsd;
    double agree_sum     = 0.0;
    std::size_t n_agree  = 0;
    for (auto const &t : traces)
    {
      if (c < t.posteriors.size() && t.posteriors[c])
      {
        jsd.push_back(jensen_shannon(t.prior, *t.posteriors[c]));
        if (t.agreements[c])
        {
          agree_sum += *t.agreements[c];
          ++n_agree;
        }
      }
    }
    s.n_agents = jsd.size();
    if (!jsd.empty())
    {
      double sum = 0.0;
      for (double x : jsd)
      {
        sum += x;
      }
      s.mean_jsd = sum / static_cast<double>(jsd.size());
      std::sort(jsd.begin(), jsd.end());
      for (std::size_t k = 0; k < 5; ++k)
      {
        s.jsd_quantiles[k] = detail::quantile(jsd, 0.25 * static_cast<double>(k));
      }
    }
    if (n_agree)
    {
      s.mean_agreement = agree_sum / static_cast<double>(n_agree);
    }
    curve.checkpoints.push_back(s);
  }
  if (!curve.checkpoints.empty() && curve.checkpoints.back().n_agents)
  {
    curve.final_score = curve.checkpoints.back().mean_jsd;
  }
  return curve;
}

// ---- tabular output ---------------------------------------------------------

/// One row of the metrics table. Checkpoint 0 is the prior (JSD 0).
struct MetricsRow
{
  std::string run_id;
  std::string workflow;
  double density{0.0};
  std::uint64_t seed{0};
  double reach{0.0};
  int checkpoint{0};
  double mean_jsd{std::numeric_limits<double>::quiet_NaN()};
  double mean_agreement{std::numeric_limits<double>::quiet_NaN()};
  std::size_t n_agents{0};
};

inline constexpr char const *kMetricsHeader =
    "run_id,workflow,density,seed,reach,checkpoint,mean_jsd,mean_agreement,n_agents";

/**
 * Rows for one run: for each probe, a prior row (checkpoint 0) and one row
 * per scheduled checkpoint. Probes without elicitations still get rows, with
 * n_agents = 0 and NaN means. The workflow column carries the probe label.
 */
inline std::vector<MetricsRow> metrics_rows(EventLog const &log, std::string const &run_id, double density,
                                            std::vector<std::string> probes = {})
{
  double const reach = compute_reach(log);
  if (probes.empty())
  {
    probes = probes_in_log(log);
    if (probes.empty())
    {
      probes.push_back(log.header().workflow);
    }
  }
  std::vector<MetricsRow> rows;
  auto const n_cp = log.header().checkpoints.size();
  for (auto const &probe : probes)
  {
    auto const traces = traces_from_log(log, probe);
    MetricsRow base{run_id, probe, density, log.header().seed, reach};
    MetricsRow prior = base;
    prior.checkpoint = 0;
    if (!traces.empty())
    {
      prior.mean_jsd = 0.0;
      prior.n_agents = traces.size();
      double sum     = 0.0;
      std::size_t n  = 0;
      for (auto const &t : traces)
      {
        if (t.prior_agreement)
        {
          sum += *t.prior_agreement;
          ++n;
        }
      }
      if (n)
      {
        prior.mean_agreement = sum / static_cast<double>(n);
      }
    }
    rows.push_back(prior);
    if (traces.empty())
    {
      for (std::size_t c = 0; c < n_cp; ++c)
      {
        MetricsRow r   = base;
        r.checkpoint   = static_cast<int>(c + 1);
        rows.push_back(r);
      }
      continue;
    }
    auto const curve = belief_change_curve(traces);
    for (auto const &s : curve.checkpoints)
    {
      MetricsRow r     = base;
      r.checkpoint     = s.checkpoint;
      r.mean_jsd       = s.mean_jsd;
      r.mean_agreement = s.mean_agreement;
      r.n_agents       = s.n_agents;
      rows.push_back(r);
    }
  }
  return rows;
}

namespace detail {

// Shortest decimal that round-trips; NaN as "nan".
inline std::string format_double(double x)
{
  if (std::isnan(x))
  {
    return "nan";
  }
  char buf[64];
  auto const r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string const &s, std::size_t line, char const *field)
{
  if (s == "nan")
  {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::size_t used = 0;
  double v         = 0.0;
  try
  {
    v = std::stod(s, &used);
  }
  catch (std::exception const &)
  {
    used = 0;
  }
  if (used == 0 || used != s.size())
  {
    throw ParseError(line, std::string("field '") + field + "': not a number");
  }
  return v;
}

}  // namespace detail

inline void write_metrics_csv(std::vector<MetricsRow> const &rows, std::ostream &os, bool header = true)
{
  if (header)
  {
    os << kMetricsHeader << '\n';
  }
  for (auto const &r : rows)
  {
    os << r.run_id << ',' << r.workflow << ',' << detail::format_double(r.density) << ',' << r.seed << ','
       << detail::format_double(r.reach) << ',' << r.checkpoint << ',' << detail::format_double(r.mean_jsd) << ','
       << detail::format_double(r.mean_agreement) << ',' << r.n_agents << '\n';
  }
}

inline std::vector<MetricsRow> read_metrics_csv(std::istream &is)
{
  std::string line;
  std::size_t lineno = 0;
  std::vector<MetricsRow> rows;
  bool header = false;
  while (std::getline(is, line))
  {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty())
    {
      continue;
    }
    if (!header)
    {
      if (line != kMetricsHeader)
      {
        throw ParseError(lineno, "unexpected metrics header");
      }
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');)
    {
      f.push_back(x);
    }
    if (f.size() != 9)
    {
      throw ParseError(lineno, "expected 9 fields");
    }
    MetricsRow r;
    r.run_id         = f[0];
    r.workflow       = f[1];
    r.density        = detail::parse_double(f[2], lineno, "density");
    r.seed           = static_cast<std::uint64_t>(detail::parse_double(f[3], lineno, "seed"));
    r.reach          = detail::parse_double(f[4], lineno, "reach");
    r.checkpoint     = static_cast<int>(detail::parse_double(f[5], lineno, "checkpoint"));
    r.mean_jsd       = detail::parse_double(f[6], lineno, "mean_jsd");
    r.mean_agreement = detail::parse_double(f[7], lineno, "mean_agreement");
    r.n_agents       = static_cast<std::size_t>(detail::parse_double(f[8], lineno, "n_agents"));
    rows.push_back(r);
  }
  if (!header)
  {
    throw ParseError(lineno, "missing metrics header");
  }
  return rows;
}

}  // namespace iosim
