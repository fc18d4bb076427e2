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

#include "iosim/engine.hpp"
#include "iosim/external_backend.hpp"
#include "iosim/metrics.hpp"
#include "iosim/serialize.hpp"

#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace iosim {

/// Sweep definition: workflow x density x seed over one base network and
/// simulation configuration. Density 0 is a single baseline run per seed.
struct ExperimentMatrix
{
  std::vector<Workflow> workflows{Workflow::Release, Workflow::Support, Workflow::Counter};
  std::vector<double> densities{0.0, 0.04, 0.06, 0.08, 0.15, 0.30, 0.45};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  GraphConfig network;
  DemographicsConfig demographics{DemographicsConfig::defaults()};
  SimulationConfig simulation;
  ActionModel action_model{ActionModel::defaults()};
  // Campaign template per workflow; red_density and seed are set per cell.
  std::map<Workflow, CampaignSpec> campaigns{default_campaigns()};

  static std::map<Workflow, CampaignSpec> default_campaigns()
  {
    std::map<Workflow, CampaignSpec> out;
    CampaignSpec release;
    release.workflow  = Workflow::Release;
    release.topic     = "immigration";
    release.narrative = Narrative::from_statement(
        "release-immigration", "Immigration quotas protect local jobs and wages for young workers", "immigration");
    release.target_audience.age_min   = 18;
    release.target_audience.age_max   = 34;
    release.target_audience.interests = {"immigration", "economy", "politics"};
    out[Workflow::Release]            = release;

    CampaignSpec support;
    support.workflow                  = Workflow::Support;
    support.topic                     = "trade";
    support.target_audience.interests = {"economy", "geopolitics", "technology"};
    out[Workflow::Support]            = support;

    CampaignSpec counter;
    counter.workflow                  = Workflow::Counter;
    counter.topic                     = "ukraine";
    counter.target_audience.interests = {"geopolitics", "politics"};
    out[Workflow::Counter]            = counter;
    return out;
  }

  /// Full-size sweep: n = 1000, T = 500.
  static ExperimentMatrix full()
  {
    ExperimentMatrix m;
    m.network.n               = 1000;
    m.simulation.total_ticks  = 500;
    return m;
  }

  /// Scaled sweep: n = 200, T = n / 2.
  static ExperimentMatrix scaled()
  {
    ExperimentMatrix m;
    m.network.n              = 200;
    m.simulation.total_ticks = 100;
    return m;
  }

  void validate() const
  {
    if (workflows.empty())
    {
      throw ConfigError("matrix needs at least one workflow");
    }
    std::set<Workflow> const wf(workflows.begin(), workflows.end());
    if (wf.size() != workflows.size())
    {
      throw ConfigError("matrix workflows must be distinct");
    }
    for (auto w : workflows)
    {
      if (!campaigns.count(w))
      {
        throw ConfigError(std::string("matrix has no campaign settings for ") + to_string(w));
      }
      if (campaigns.at(w).workflow != w)
      {
        throw ConfigError(std::string("campaign settings for ") + to_string(w) + " name another workflow");
      }
    }
    if (densities.empty())
    {
      throw ConfigError("matrix needs at least one density");
    }
    for (std::size_t i = 0; i < densities.size(); ++i)
    {
      if (!(densities[i] >= 0.0 && densities[i] <= 0.5))
      {
        throw ConfigError("matrix densities must lie in [0, 0.5]");
      }
      if (i && !(densities[i] > densities[i - 1]))
      {
        throw ConfigError("matrix densities must be strictly ascending");
      }
    }
    if (seeds.empty())
    {
      throw ConfigError("matrix needs at least one seed");
    }
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    {
      throw ConfigError("matrix seeds must be distinct");
    }
    network.validate();
    demographics.validate();
    simulation.validate();
  }
};

// ---- serialization ----------------------------------------------------------

inline json to_json(ExperimentMatrix const &m)
{
  json wf = json::array();
  for (auto w : m.workflows)
  {
    wf.push_back(to_string(w));
  }
  json campaigns = json::object();
  for (auto const &[w, c] : m.campaigns)
  {
    auto j = to_json(c);
    j.erase("red_density");
    j.erase("seed");
    campaigns[to_string(w)] = j;
  }
  std::ostringstream am;
  write_action_model(m.action_model, am);
  return json{{"workflows", wf},
              {"densities", m.densities},
              {"seeds", m.seeds},
              {"network", to_json(m.network)},
              {"demographics", to_json(m.demographics)},
              {"simulation", to_json(m.simulation)},
              {"action_model_digest", hash_bytes(am.str())},
              {"campaigns", campaigns}};
}

/**
 * Reads a matrix document. Absent fields keep the scaled defaults.
 * `action_model` names a CSV file, resolved against `base_dir`.
 */
inline ExperimentMatrix matrix_from_json(json const &j, std::filesystem::path const &base_dir = {})
{
  detail::require_object(j, "matrix");
  auto m = ExperimentMatrix::scaled();
  if (j.contains("workflows"))
  {
    m.workflows.clear();
    for (auto const &s : j.at("workflows"))
    {
      auto const w = workflow_from_string(s.get<std::string>());
      if (!w)
      {
        throw ConfigError("unknown workflow '" + s.get<std::string>() + "'");
      }
      m.workflows.push_back(*w);
    }
  }
  m.densities = detail::get_or(j, "densities", m.densities);
  m.seeds     = detail::get_or(j, "seeds", m.seeds);
  if (j.contains("network"))
  {
    m.network = graph_config_from_json(j.at("network"));
  }
  if (j.contains("demographics"))
  {
    m.demographics = demographics_from_json(j.at("demographics"));
  }
  if (j.contains("simulation"))
  {
    auto sim = j.at("simulation");
    if (!sim.contains("total_ticks"))
    {
      sim["total_ticks"] = std::max<std::int64_t>(1, static_cast<std::int64_t>(m.network.n / 2));
    }
    m.simulation = simulation_from_json(sim);
  }
  else
  {
    m.simulation.total_ticks = std::max<Tick>(1, static_cast<Tick>(m.network.n / 2));
  }
  if (j.contains("action_model"))
  {
    auto const path = base_dir / j.at("action_model").get<std::string>();
    std::ifstream in(path);
    if (!in)
    {
      throw ConfigError("cannot open action model '" + path.string() + "'");
    }
    m.action_model = parse_action_model(in);
  }
  if (j.contains("campaigns"))
  {
    detail::require_object(j.at("campaigns"), "campaigns");
    for (auto const &[name, c] : j.at("campaigns").items())
    {
      auto spec = c;
      if (!spec.contains("workflow"))
      {
        spec["workflow"] = name;
      }
      auto parsed = campaign_from_json(spec);
      if (!workflow_from_string(name) || *workflow_from_string(name) != parsed.workflow)
      {
        throw ConfigError("campaign key '" + name + "' does not match its workflow");
      }
      m.campaigns[parsed.workflow] = parsed;
    }
  }
  m.validate();
  return m;
}

// ---- cells ------------------------------------------------------------------

/// One run of the matrix. A baseline cell has no workflow.
struct Cell
{
  std::optional<Workflow> workflow;
  double density{0.0};
  std::uint64_t seed{0};

  std::string id() const;

  std::string workflow_label() const
  {
    return workflow ? to_string(*workflow) : "baseline";
  }
};

inline std::string Cell::id() const
{
  if (!workflow)
  {
    return "baseline-s" + std::to_string(seed);
  }
  std::string name = to_string(*workflow);
  name[0]          = static_cast<char>(std::tolower(static_cast<unsigned char>(name[0])));
  return name + "-d" + detail::format_double(density) + "-s" + std::to_string(seed);
}

/// Canonical order: baselines by seed, then workflow, density, seed.
inline std::vector<Cell> matrix_cells(ExperimentMatrix const &m)
{
  std::vector<Cell> out;
  bool const baseline = std::find(m.densities.begin(), m.densities.end(), 0.0) != m.densities.end();
  if (baseline)
  {
    for (auto s : m.seeds)
    {
      out.push_back({std::nullopt, 0.0, s});
    }
  }
  for (auto w : m.workflows)
  {
    for (double d : m.densities)
    {
      if (d == 0.0)
      {
        continue;
      }
      for (auto s : m.seeds)
      {
        out.push_back({w, d, s});
      }
    }
  }
  return out;
}

/// Everything a cell's run depends on.
struct CellInputs
{
  SimulationConfig config;
  std::optional<CampaignSpec> campaign;
  std::vector<std::string> probes;  // metrics row labels
};

inline CellInputs cell_inputs(ExperimentMatrix const &m, Cell const &cell)
{
  CellInputs in;
  in.config      = m.simulation;
  in.config.seed = cell.seed;
  if (cell.workflow)
  {
    auto spec        = m.campaigns.at(*cell.workflow);
    spec.red_density = cell.density;
    spec.seed        = cell.seed;
    spec.osn_ref     = "network-s" + std::to_string(cell.seed);
    in.campaign      = spec;
    in.probes        = {to_string(*cell.workflow)};
    in.config.baseline_probes.clear();
  }
  else
  {
    in.config.baseline_probes.clear();
    for (auto w : m.workflows)
    {
      auto const &c = m.campaigns.at(w);
      in.config.baseline_probes.push_back({to_string(w), c.topic, c.narrative});
      in.probes.push_back(to_string(w));
    }
  }
  return in;
}

inline std::string cell_digest(ExperimentMatrix const &m, Cell const &cell)
{
  auto const in = cell_inputs(m, cell);
  std::ostringstream am;
  write_action_model(m.action_model, am);
  json j{{"id", cell.id()},
         {"network", to_json(m.network)},
         {"demographics", to_json(m.demographics)},
         {"simulation", to_json(in.config)},
         {"campaign", in.campaign ? to_json(*in.campaign) : json(nullptr)},
         {"action_model", am.str()}};
  return digest(j);
}

struct CellResult
{
  EventLog log;
  std::vector<MetricsRow> rows;
};

/// Runs one cell from scratch: network, optional campaign, simulation, metrics.
inline CellResult run_cell(ExperimentMatrix const &m, Cell const &cell, GeneratorBackend const &backend)
{
  auto const in      = cell_inputs(m, cell);
  auto const personas = generate_personas(m.network.n, m.demographics, cell.seed);
  auto const graph    = generate_follower_graph(personas, m.network, cell.seed);
  Osn const osn{personas, graph};
  std::optional<PreparedCampaign> prepared;
  if (in.campaign)
  {
    auto const plan = validate_campaign(*in.campaign, personas);
    prepared        = prepare_campaign(plan, graph, personas, m.demographics, m.network);
  }
  auto run = run_simulation(in.config, osn, prepared, backend, m.action_model, m.demographics);
  CellResult out;
  out.rows = metrics_rows(run.log, cell.id(), cell.density, in.probes);
  out.log  = std::move(run.log);
  return out;
}

// ---- matrix runner ----------------------------------------------------------

struct ManifestEntry
{
  std::string id;
  std::string workflow;  // "baseline" for shared density-0 runs
  double density{0.0};
  std::uint64_t seed{0};
  std::string digest;
  std::string status;  // done | failed
  std::string error;
  double reach{0.0};
  std::string events;   // relative path
  std::string metrics;  // relative path
};

inline json to_json(ManifestEntry const &e)
{
  json j{{"id", e.id},          {"workflow", e.workflow}, {"density", e.density},
         {"seed", e.seed},      {"digest", e.digest},     {"status", e.status},
         {"events", e.events},  {"metrics", e.metrics}};
  if (e.status == "done")
  {
    j["reach"] = e.reach;
  }
  else
  {
    j["error"] = e.error;
  }
  return j;
}

inline ManifestEntry manifest_entry_from_json(json const &j)
{
  ManifestEntry e;
  e.id       = detail::require<std::string>(j, "id");
  e.workflow = detail::require<std::string>(j, "workflow");
  e.density  = detail::require<double>(j, "density");
  e.seed     = detail::require<std::uint64_t>(j, "seed");
  e.digest   = detail::require<std::string>(j, "digest");
  e.status   = detail::require<std::string>(j, "status");
  e.error    = detail::get_or<std::string>(j, "error", "");
  e.reach    = detail::get_or(j, "reach", 0.0);
  e.events   = detail::get_or<std::string>(j, "events", "");
  e.metrics  = detail::get_or<std::string>(j, "metrics", "");
  return e;
}

struct MatrixSummary
{
  std::size_t total{0};
  std::size_t executed{0};
  std::size_t skipped{0};
  std::size_t failed{0};
};

inline constexpr char const *kManifestFile  = "manifest.json";
inline constexpr char const *kAggregateFile = "aggregate.csv";

namespace detail {

inline void write_file_atomic(std::filesystem::path const &path, std::string const &content)
{
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out)
    {
      throw ConfigError("cannot write '" + tmp.string() + "'");
    }
    out << content;
    if (!out)
    {
      throw ConfigError("write failed for '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

inline std::map<std::string, ManifestEntry> read_manifest(std::filesystem::path const &path)
{
  std::map<std::string, ManifestEntry> out;
  if (!std::filesystem::exists(path))
  {
    return out;
  }
  auto const j = load_json_file(path.string());
  for (auto const &c : require<json>(j, "cells"))
  {
    auto e = manifest_entry_from_json(c);
    out.emplace(e.id, std::move(e));
  }
  return out;
}

}  // namespace detail

/**
 * Runs every cell not already completed with the same digest, up to
 * `parallelism` at a time. Each cell writes cells/<id>/events.jsonl and
 * cells/<id>/metrics.csv; the manifest is rewritten after every cell; the
 * aggregate table is written once all cells have finished. Failed cells are
 * recorded in the manifest and counted in the summary.
 */
inline MatrixSummary run_matrix(ExperimentMatrix const &m, std::size_t parallelism,
                                std::filesystem::path const &out_dir, GeneratorBackend const &backend,
                                std::ostream *progress = &std::clog)
{
  namespace fs = std::filesystem;
  m.validate();
  fs::create_directories(out_dir / "cells");
  detail::write_file_atomic(out_dir / "matrix.json", to_json(m).dump(2) + "\n");

  auto const cells    = matrix_cells(m);
  auto const previous = detail::read_manifest(out_dir / kManifestFile);

  std::vector<ManifestEntry> entries(cells.size());
  std::vector<std::vector<MetricsRow>> rows(cells.size());
  std::vector<std::size_t> pending;
  MatrixSummary summary;
  summary.total = cells.size();

  for (std::size_t i = 0; i < cells.size(); ++i)
  {
    auto const &c = cells[i];
    auto &e       = entries[i];
    e.id          = c.id();
    e.workflow    = c.workflow_label();
    e.density     = c.density;
    e.seed        = c.seed;
    e.digest      = cell_digest(m, c);
    e.events      = "cells/" + e.id + "/events.jsonl";
    e.metrics     = "cells/" + e.id + "/metrics.csv";
    e.status      = "pending";

    auto it = previous.find(e.id);
    if (it != previous.end() && it->second.status == "done" && it->second.digest == e.digest &&
        fs::exists(out_dir / e.events) && fs::exists(out_dir / e.metrics))
    {
      std::ifstream in(out_dir / e.metrics);
      try
      {
        rows[i]  = read_metrics_csv(in);
        e.status = "done";
        e.reach  = it->second.reach;
        ++summary.skipped;
        continue;
      }
      catch (ParseError const &)
      {
        // Damaged metrics file: run the cell again.
      }
    }
    pending.push_back(i);
  }

  std::mutex mu;
  auto write_manifest = [&] {
    json cellsj = json::array();
    for (auto const &e : entries)
    {
      if (e.status != "pending")
      {
        cellsj.push_back(to_json(e));
      }
    }
    json j{{"matrix_digest", digest(to_json(m))}, {"total_cells", cells.size()}, {"cells", cellsj}};
    detail::write_file_atomic(out_dir / kManifestFile, j.dump(2) + "\n");
  };

  std::atomic<std::size_t> next{0};
  std::size_t finished = 0;
  auto worker          = [&] {
    for (std::size_t k = next++; k < pending.size(); k = next++)
    {
      auto const i  = pending[k];
      auto const &c = cells[i];
      ManifestEntry e;
      {
        std::lock_guard lock(mu);
        e = entries[i];
      }
      std::vector<MetricsRow> cell_rows;
      try
      {
        auto result = run_cell(m, c, backend);
        fs::create_directories(out_dir / "cells" / e.id);
        std::ostringstream log_text;
        write_jsonl(result.log, log_text);
        detail::write_file_atomic(out_dir / e.events, log_text.str());
        std::ostringstream csv;
        write_metrics_csv(result.rows, csv);
        detail::write_file_atomic(out_dir / e.metrics, csv.str());
        if (result.log.aborted())
        {
          e.status = "failed";
          e.error  = "run aborted: " + result.log.abort_reason().value_or("");
        }
        else
        {
          e.status  = "done";
          e.reach   = compute_reach(result.log);
          cell_rows = std::move(result.rows);
        }
      }
      catch (std::exception const &ex)
      {
        e.status = "failed";
        e.error  = ex.what();
      }
      std::lock_guard lock(mu);
      entries[i] = e;
      rows[i]    = std::move(cell_rows);
      ++summary.executed;
      summary.failed += e.status == "failed" ? 1 : 0;
      ++finished;
      write_manifest();
      if (progress)
      {
        *progress << "iosim: [" << finished << "/" << pending.size() << "] " << e.id << " " << e.status;
        if (e.status == "done")
        {
          *progress << " reach=" << e.reach;
        }
        else
        {
          *progress << ": " << e.error;
        }
        *progress << '\n';
      }
    }
  };

  auto const n_threads = std::max<std::size_t>(1, std::min(parallelism, pending.size()));
  if (pending.empty())
  {
    write_manifest();
  }
  else if (n_threads == 1)
  {
    worker();
  }
  else
  {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t)
    {
      pool.emplace_back(worker);
    }
    for (auto &t : pool)
    {
      t.join();
    }
  }

  std::vector<MetricsRow> all;
  for (std::size_t i = 0; i < cells.size(); ++i)
  {
    if (entries[i].status == "done")
    {
      all.insert(all.end(), rows[i].begin(), rows[i].end());
    }
  }
  std::ostringstream agg;
  write_metrics_csv(all, agg);
  detail::write_file_atomic(out_dir / kAggregateFile, agg.str());
  return summary;
}

// ---- single runs ------------------------------------------------------------

/**
 * Document for one simulation: a network (snapshot file or generator
 * settings), simulation settings, an optional campaign and an optional
 * action-model CSV. Paths resolve against the document's directory.
 */
struct RunConfig
{
  std::optional<NetworkSnapshot> snapshot;
  GraphConfig network;
  DemographicsConfig demographics{DemographicsConfig::defaults()};
  SimulationConfig simulation;
  std::optional<CampaignSpec> campaign;
  ActionModel action_model{ActionModel::defaults()};
};

inline RunConfig run_config_from_json(json const &j, std::filesystem::path const &base_dir = {})
{
  detail::require_object(j, "run config");
  RunConfig rc;
  if (j.contains("network"))
  {
    auto const &n = j.at("network");
    detail::require_object(n, "network");
    if (n.contains("snapshot"))
    {
      rc.snapshot = snapshot_from_json(load_json_file((base_dir / n.at("snapshot").get<std::string>()).string()));
    }
    else
    {
      rc.network = graph_config_from_json(n);
    }
  }
  if (j.contains("demographics"))
  {
    rc.demographics = demographics_from_json(j.at("demographics"));
  }
  rc.simulation = simulation_from_json(j.value("simulation", json::object()));
  if (j.contains("campaign") && !j.at("campaign").is_null())
  {
    rc.campaign = campaign_from_json(j.at("campaign"));
  }
  if (j.contains("action_model"))
  {
    auto const path = base_dir / j.at("action_model").get<std::string>();
    std::ifstream in(path);
    if (!in)
    {
      throw ConfigError("cannot open action model '" + path.string() + "'");
    }
    rc.action_model = parse_action_model(in);
  }
  return rc;
}

/// The run's network: the snapshot if given, else generated from the seed.
inline Osn build_network(RunConfig const &rc)
{
  if (rc.snapshot)
  {
    return {rc.snapshot->personas, rc.snapshot->graph};
  }
  auto personas = generate_personas(rc.network.n, rc.demographics, rc.simulation.seed);
  auto graph    = generate_follower_graph(personas, rc.network, rc.simulation.seed);
  return {std::move(personas), std::move(graph)};
}

}  // namespace iosim
