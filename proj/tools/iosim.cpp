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

#include "iosim/experiment.hpp"
#include "iosim/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace iosim;

namespace {

enum Exit : int
{
  kOk         = 0,
  kRunFailure = 1,
  kBadInput   = 2,
};

void apply_backend_flag(BackendConfig &cfg, std::string const &flag)
{
  if (flag == "external")
  {
    cfg.kind = BackendKind::External;
  }
  else if (flag == "stub")
  {
    cfg.kind = BackendKind::Stub;
  }
}

fs::path base_dir_of(std::string const &path)
{
  auto const parent = fs::path(path).parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

int cmd_simulate(std::string const &config, std::string const &out, std::optional<std::uint64_t> seed,
                 std::string const &backend_flag)
{
  auto rc = run_config_from_json(load_json_file(config), base_dir_of(config));
  if (seed)
  {
    rc.simulation.seed = *seed;
    if (rc.campaign)
    {
      rc.campaign->seed = *seed;
    }
  }
  apply_backend_flag(rc.simulation.backend, backend_flag);
  auto const osn = build_network(rc);

  std::optional<PreparedCampaign> prepared;
  fs::create_directories(out);
  if (rc.campaign)
  {
    auto const plan = validate_campaign(*rc.campaign, osn.personas);
    std::cout << to_json(plan).dump(2) << '\n';
    save_json_file((fs::path(out) / "plan.json").string(), to_json(plan));
    prepared = prepare_campaign(plan, osn.graph, osn.personas, rc.demographics, rc.network);
  }
  auto const backend = make_backend(rc.simulation.backend);
  auto const result  = run_simulation(rc.simulation, osn, prepared, *backend, rc.action_model, rc.demographics);

  {
    std::ofstream log(fs::path(out) / "events.jsonl", std::ios::binary);
    write_jsonl(result.log, log);
  }
  Cell const cell{rc.campaign ? std::optional<Workflow>(rc.campaign->workflow) : std::nullopt,
                  rc.campaign ? rc.campaign->red_density : 0.0, rc.simulation.seed};
  std::vector<std::string> probes;
  for (auto const &p : rc.simulation.baseline_probes)
  {
    probes.push_back(p.label);
  }
  auto const rows = metrics_rows(result.log, cell.id(), cell.density, rc.campaign ? std::vector<std::string>{} : probes);
  {
    std::ofstream csv(fs::path(out) / "metrics.csv", std::ios::binary);
    write_metrics_csv(rows, csv);
  }
  std::cerr << "reach " << compute_reach(result.log) << ", " << result.log.events().size() << " events";
  if (result.missing_elicitations)
  {
    std::cerr << ", " << result.missing_elicitations << " elicitations missing";
  }
  std::cerr << '\n';
  if (result.log.aborted())
  {
    std::cerr << "run aborted: " << result.log.abort_reason().value_or("") << '\n';
    return kRunFailure;
  }
  return kOk;
}

int cmd_matrix(std::string const &config, std::string const &out, std::size_t parallel,
               std::optional<std::uint64_t> seed, std::string const &backend_flag)
{
  auto m = config.empty() ? ExperimentMatrix::scaled() : matrix_from_json(load_json_file(config), base_dir_of(config));
  if (seed)
  {
    m.seeds = {*seed};
  }
  apply_backend_flag(m.simulation.backend, backend_flag);
  auto const backend = make_backend(m.simulation.backend);
  auto const s       = run_matrix(m, parallel, out, *backend);
  std::cerr << s.total << " cells: " << s.executed << " run, " << s.skipped << " already done, " << s.failed
            << " failed\n";
  return s.failed ? kRunFailure : kOk;
}

int cmd_report(std::string const &out)
{
  auto const files = emit_reports(out);
  for (auto const &p : files.charts)
  {
    std::cout << p.string() << '\n';
  }
  for (auto const &p : files.tables)
  {
    std::cout << p.string() << '\n';
  }
  return kOk;
}

// Lints a campaign, run or matrix document and prints its normalized form.
int cmd_validate(std::string const &config, std::optional<std::uint64_t> seed)
{
  auto const j = load_json_file(config);
  if (j.contains("densities") || j.contains("workflows"))
  {
    auto const m = matrix_from_json(j, base_dir_of(config));
    std::cout << to_json(m).dump(2) << '\n'
              << "matrix OK: " << matrix_cells(m).size() << " cells\n";
    return kOk;
  }
  if (j.contains("workflow"))
  {
    // A bare campaign is checked against the default generated network.
    auto spec = campaign_from_json(j);
    if (seed)
    {
      spec.seed = *seed;
    }
    GraphConfig gc;
    gc.n                = 200;
    auto const personas = generate_personas(gc.n, DemographicsConfig::defaults(), spec.seed);
    auto const plan     = validate_campaign(spec, personas);
    std::cout << to_json(plan).dump(2) << "\ncampaign OK\n";
    return kOk;
  }
  auto rc = run_config_from_json(j, base_dir_of(config));
  if (seed)
  {
    rc.simulation.seed = *seed;
  }
  rc.simulation.validate();
  auto const osn = build_network(rc);
  if (rc.campaign)
  {
    std::cout << to_json(validate_campaign(*rc.campaign, osn.personas)).dump(2) << '\n';
  }
  std::cout << "run config OK: " << osn.personas.size() << " accounts, " << rc.simulation.total_ticks
            << " ticks\n";
  return kOk;
}

int cmd_network(std::string const &config, std::string const &out, std::optional<std::uint64_t> seed)
{
  GraphConfig gc;
  DemographicsConfig demo = DemographicsConfig::defaults();
  if (!config.empty())
  {
    auto const j = load_json_file(config);
    gc           = graph_config_from_json(j.value("network", j));
    if (j.contains("demographics"))
    {
      demo = demographics_from_json(j.at("demographics"));
    }
  }
  auto const s        = seed.value_or(1);
  auto const personas = generate_personas(gc.n, demo, s);
  auto const graph    = generate_follower_graph(personas, gc, s);
  save_json_file(out, to_json(NetworkSnapshot{personas, graph}));
  std::cerr << personas.size() << " personas, " << graph.edges().size() << " edges\n";
  return kOk;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"iosim: influence-operation simulator on synthetic social networks"};
  app.require_subcommand(1);

  std::string config, out;
  std::uint64_t seed_value = 0;
  std::size_t parallel     = 1;
  std::string backend      = "config";

  auto add_common = [&](CLI::App *sub, bool needs_config, bool needs_out) {
    auto *c = sub->add_option("--config", config, "input document");
    if (needs_config)
    {
      c->required()->check(CLI::ExistingFile);
    }
    else
    {
      c->check(CLI::ExistingFile);
    }
    auto *o = sub->add_option("--out", out, "output path");
    if (needs_out)
    {
      o->required();
    }
    sub->add_option("--seed", seed_value, "override the seed");
    sub->add_option("--backend", backend, "generator backend")->check(CLI::IsMember({"stub", "external"}));
  };

  auto *simulate = app.add_subcommand("simulate", "run one simulation; writes events.jsonl and metrics.csv");
  add_common(simulate, true, true);
  auto *matrix = app.add_subcommand("matrix", "run a workflow x density x seed sweep");
  add_common(matrix, false, true);
  matrix->add_option("--parallel", parallel, "concurrent runs")->check(CLI::PositiveNumber);
  auto *report = app.add_subcommand("report", "emit charts and tables from a results directory");
  report->add_option("--out", out, "results directory")->required()->check(CLI::ExistingDirectory);
  auto *validate = app.add_subcommand("validate", "lint a campaign, run or matrix document");
  add_common(validate, true, false);
  auto *network = app.add_subcommand("network", "generate a network snapshot");
  add_common(network, false, true);

  CLI11_PARSE(app, argc, argv);

  auto seed = [&](CLI::App *sub) -> std::optional<std::uint64_t> {
    return sub->count("--seed") ? std::optional<std::uint64_t>(seed_value) : std::nullopt;
  };

  try
  {
    if (*simulate)
    {
      return cmd_simulate(config, out, seed(simulate), backend);
    }
    if (*matrix)
    {
      return cmd_matrix(config, out, parallel, seed(matrix), backend);
    }
    if (*report)
    {
      return cmd_report(out);
    }
    if (*validate)
    {
      return cmd_validate(config, seed(validate));
    }
    if (*network)
    {
      return cmd_network(config, out, seed(network));
    }
  }
  catch (ValidationError const &ex)
  {
    std::cerr << "invalid campaign: " << ex.what() << '\n';
    return kBadInput;
  }
  catch (ConfigError const &ex)
  {
    std::cerr << "config error: " << ex.what() << '\n';
    return kBadInput;
  }
  catch (InputError const &ex)
  {
    std::cerr << "input error: " << ex.what() << '\n';
    return kBadInput;
  }
  catch (ParseError const &ex)
  {
    std::cerr << "parse error: " << ex.what() << '\n';
    return kBadInput;
  }
  catch (ReportError const &ex)
  {
    std::cerr << "report error: " << ex.what() << '\n';
    return kBadInput;
  }
  catch (std::exception const &ex)
  {
    std::cerr << "error: " << ex.what() << '\n';
    return kRunFailure;
  }
  return kOk;
}
