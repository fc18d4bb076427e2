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
#include "iosim/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace iosim {

/// Per-density reach sample of one workflow (one value per run).
struct ReachSeries
{
  double density{0.0};
  std::vector<std::pair<std::string, double>> runs;  // (run_id, reach), table order
};

/// Mean agreement per checkpoint, averaged over runs with a defined value.
struct BeliefSeries
{
  double density{0.0};
  std::map<int, double> mean_by_checkpoint;
};

/// Rows of one workflow, one per run, taken at the run's last checkpoint.
inline std::vector<MetricsRow> reach_table(std::vector<MetricsRow> const &rows, std::string const &workflow)
{
  std::map<std::string, std::size_t> last;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < rows.size(); ++i)
  {
    auto const &r = rows[i];
    if (r.workflow != workflow)
    {
      continue;
    }
    auto [it, fresh] = last.try_emplace(r.run_id, i);
    if (fresh)
    {
      order.push_back(r.run_id);
    }
    else if (r.checkpoint >= rows[it->second].checkpoint)
    {
      it->second = i;
    }
  }
  std::vector<MetricsRow> out;
  for (auto const &id : order)
  {
    out.push_back(rows[last.at(id)]);
  }
  return out;
}

inline std::vector<MetricsRow> belief_table(std::vector<MetricsRow> const &rows, std::string const &workflow)
{
  std::vector<MetricsRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [&](MetricsRow const &r) { return r.workflow == workflow; });
  return out;
}

inline std::vector<ReachSeries> reach_series(std::vector<MetricsRow> const &table)
{
  std::map<double, ReachSeries> by;
  for (auto const &r : table)
  {
    auto &s   = by[r.density];
    s.density = r.density;
    s.runs.emplace_back(r.run_id, r.reach);
  }
  std::vector<ReachSeries> out;
  for (auto &[d, s] : by)
  {
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<BeliefSeries> belief_series(std::vector<MetricsRow> const &table)
{
  std::map<double, std::map<int, std::pair<double, std::size_t>>> acc;
  for (auto const &r : table)
  {
    auto &cell = acc[r.density][r.checkpoint];
    if (!std::isnan(r.mean_agreement))
    {
      cell.first += r.mean_agreement;
      ++cell.second;
    }
  }
  std::vector<BeliefSeries> out;
  for (auto const &[d, cps] : acc)
  {
    BeliefSeries s;
    s.density = d;
    for (auto const &[cp, sum_n] : cps)
    {
      if (sum_n.second)
      {
        s.mean_by_checkpoint[cp] = sum_n.first / static_cast<double>(sum_n.second);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace detail {

inline std::string percent_label(double density)
{
  std::ostringstream os;
  os << std::round(density * 1000.0) / 10.0 << "%";
  return os.str();
}

inline std::string svg_escape(std::string const &s)
{
  std::string out;
  for (char c : s)
  {
    switch (c)
    {
    case '&':
      out += "&amp;";
      break;
    case '<':
      out += "&lt;";
      break;
    case '>':
      out += "&gt;";
      break;
    case '"':
      out += "&quot;";
      break;
    default:
      out += c;
    }
  }
  return out;
}

struct Plot
{
  double width{640}, height{400};
  double left{60}, right{20}, top{40}, bottom{50};

  double x0() const
  {
    return left;
  }
  double x1() const
  {
    return width - right;
  }
  double y_of(double v) const  // v in [0,1]
  {
    return top + (1.0 - v) * (height - top - bottom);
  }
};

inline void svg_open(std::ostream &os, Plot const &p, std::string const &title, std::string const &kind,
                     std::string const &workflow)
{
  os << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << p.width << R"(" height=")" << p.height
     << R"(" viewBox="0 0 )" << p.width << ' ' << p.height << R"(" data-chart=")" << kind << R"(" data-workflow=")"
     << svg_escape(workflow) << "\">\n";
  os << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
  os << R"(<text x=")" << p.width / 2 << R"(" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">)"
     << svg_escape(title) << "</text>\n";
  for (int k = 0; k <= 4; ++k)
  {
    double const v = 0.25 * k;
    double const y = p.y_of(v);
    os << R"(<line x1=")" << p.x0() << R"(" x2=")" << p.x1() << R"(" y1=")" << y << R"(" y2=")" << y
       << R"(" stroke="#dddddd"/>)" << '\n';
    os << R"(<text x=")" << p.x0() - 8 << R"(" y=")" << y + 4
       << R"(" text-anchor="end" font-family="sans-serif" font-size="11">)" << v << "</text>\n";
  }
  os << R"(<line x1=")" << p.x0() << R"(" x2=")" << p.x0() << R"(" y1=")" << p.top << R"(" y2=")"
     << p.y_of(0.0) << R"(" stroke="black"/>)" << '\n';
  os << R"(<line x1=")" << p.x0() << R"(" x2=")" << p.x1() << R"(" y1=")" << p.y_of(0.0) << R"(" y2=")"
     << p.y_of(0.0) << R"(" stroke="black"/>)" << '\n';
}

inline char const *series_colour(std::size_t i)
{
  static constexpr char const *kPalette[] = {"#444444", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                             "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22"};
  return kPalette[i % std::size(kPalette)];
}

}  // namespace detail

/**
 * Box-and-strip chart of reach per density. Every run is a circle carrying
 * data-run-id, data-density and data-reach; every box carries its quartiles.
 */
inline std::string reach_chart_svg(std::string const &workflow, std::vector<ReachSeries> const &series)
{
  using detail::format_double;
  detail::Plot const p;
  std::ostringstream os;
  detail::svg_open(os, p, workflow + ": reach per red-agent density", "reach", workflow);
  double const slot = series.empty() ? 1.0 : (p.x1() - p.x0()) / static_cast<double>(series.size());
  for (std::size_t i = 0; i < series.size(); ++i)
  {
    auto const &s = series[i];
    std::vector<double> v;
    for (auto const &[id, r] : s.runs)
    {
      v.push_back(r);
    }
    std::sort(v.begin(), v.end());
    double const cx = p.x0() + slot * (static_cast<double>(i) + 0.5);
    double const q1 = detail::quantile(v, 0.25), med = detail::quantile(v, 0.5), q3 = detail::quantile(v, 0.75);
    double const bw = std::min(40.0, slot * 0.5);
    os << R"(<g class="density" data-density=")" << format_double(s.density) << "\">\n";
    os << R"(<line x1=")" << cx << R"(" x2=")" << cx << R"(" y1=")" << p.y_of(v.front()) << R"(" y2=")"
       << p.y_of(v.back()) << R"(" stroke="black"/>)" << '\n';
    os << R"(<rect class="box" x=")" << cx - bw / 2 << R"(" y=")" << p.y_of(q3) << R"(" width=")" << bw
       << R"(" height=")" << std::max(0.5, p.y_of(q1) - p.y_of(q3)) << R"(" fill="#cfe2f3" stroke="black" data-min=")"
       << format_double(v.front()) << R"(" data-q1=")" << format_double(q1) << R"(" data-median=")"
       << format_double(med) << R"(" data-q3=")" << format_double(q3) << R"(" data-max=")"
       << format_double(v.back()) << "\"/>\n";
    os << R"(<line x1=")" << cx - bw / 2 << R"(" x2=")" << cx + bw / 2 << R"(" y1=")" << p.y_of(med)
       << R"(" y2=")" << p.y_of(med) << R"(" stroke="black" stroke-width="2"/>)" << '\n';
    for (std::size_t k = 0; k < s.runs.size(); ++k)
    {
      double const jitter = (static_cast<double>(k) - 0.5 * static_cast<double>(s.runs.size() - 1)) * 4.0;
      os << R"(<circle class="point" cx=")" << cx + jitter << R"(" cy=")" << p.y_of(s.runs[k].second)
         << R"(" r="3" fill="#1f77b4" fill-opacity="0.7" data-run-id=")" << detail::svg_escape(s.runs[k].first)
         << R"(" data-density=")" << format_double(s.density) << R"(" data-reach=")"
         << format_double(s.runs[k].second) << "\"/>\n";
    }
    os << R"(<text x=")" << cx << R"(" y=")" << p.y_of(0.0) + 18
       << R"(" text-anchor="middle" font-family="sans-serif" font-size="11">)" << detail::percent_label(s.density)
       << "</text>\n";
    os << "</g>\n";
  }
  os << R"(<text x=")" << (p.x0() + p.x1()) / 2 << R"(" y=")" << p.height - 8
     << R"(" text-anchor="middle" font-family="sans-serif" font-size="12">red-agent density</text>)" << '\n';
  os << R"(<text x="14" y=")" << p.height / 2 << R"(" transform="rotate(-90 14 )" << p.height / 2
     << R"x()" text-anchor="middle" font-family="sans-serif" font-size="12">IO reach</text>)x" << '\n';
  os << "</svg>\n";
  return os.str();
}

/**
 * Mean agreement over checkpoints, one polyline per density. Every plotted
 * point is a circle carrying data-density, data-checkpoint and data-value.
 */
inline std::string belief_chart_svg(std::string const &workflow, std::vector<BeliefSeries> const &series)
{
  using detail::format_double;
  detail::Plot const p;
  std::ostringstream os;
  detail::svg_open(os, p, workflow + ": mean agreement with the target narrative", "belief", workflow);
  int max_cp = 1;
  for (auto const &s : series)
  {
    if (!s.mean_by_checkpoint.empty())
    {
      max_cp = std::max(max_cp, s.mean_by_checkpoint.rbegin()->first);
    }
  }
  auto x_of = [&](int cp) { return p.x0() + (p.x1() - p.x0() - 90.0) * cp / static_cast<double>(max_cp); };
  for (int cp = 0; cp <= max_cp; ++cp)
  {
    os << R"(<text x=")" << x_of(cp) << R"(" y=")" << p.y_of(0.0) + 18
       << R"(" text-anchor="middle" font-family="sans-serif" font-size="11">)" << (cp == 0 ? "prior" : "t" + std::to_string(cp))
       << "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i)
  {
    auto const &s     = series[i];
    auto const colour = detail::series_colour(i);
    std::string const label = s.density == 0.0 ? "baseline" : detail::percent_label(s.density);
    os << R"(<g class="series" data-density=")" << format_double(s.density) << R"(" data-label=")" << label
       << "\">\n";
    os << R"(<polyline fill="none" stroke=")" << colour << R"(" stroke-width="2" points=")";
    for (auto const &[cp, v] : s.mean_by_checkpoint)
    {
      os << x_of(cp) << ',' << p.y_of(v) << ' ';
    }
    os << "\"/>\n";
    for (auto const &[cp, v] : s.mean_by_checkpoint)
    {
      os << R"(<circle class="point" cx=")" << x_of(cp) << R"(" cy=")" << p.y_of(v) << R"(" r="3" fill=")"
         << colour << R"(" data-density=")" << format_double(s.density) << R"(" data-checkpoint=")" << cp
         << R"(" data-value=")" << format_double(v) << "\"/>\n";
    }
    double const ly = p.top + 14.0 * static_cast<double>(i) + 6.0;
    os << R"(<line x1=")" << p.x1() - 80 << R"(" x2=")" << p.x1() - 64 << R"(" y1=")" << ly << R"(" y2=")" << ly
       << R"(" stroke=")" << colour << R"(" stroke-width="2"/>)" << '\n';
    os << R"(<text x=")" << p.x1() - 60 << R"(" y=")" << ly + 4 << R"(" font-family="sans-serif" font-size="11">)"
       << label << "</text>\n";
    os << "</g>\n";
  }
  os << R"(<text x=")" << (p.x0() + p.x1()) / 2 << R"(" y=")" << p.height - 8
     << R"(" text-anchor="middle" font-family="sans-serif" font-size="12">checkpoint</text>)" << '\n';
  os << R"(<text x="14" y=")" << p.height / 2 << R"(" transform="rotate(-90 14 )" << p.height / 2
     << R"x()" text-anchor="middle" font-family="sans-serif" font-size="12">mean agreement</text>)x" << '\n';
  os << "</svg>\n";
  return os.str();
}

struct ReportFiles
{
  std::vector<std::filesystem::path> charts;
  std::vector<std::filesystem::path> tables;
};

inline std::string workflow_file_stem(std::string workflow)
{
  std::transform(workflow.begin(), workflow.end(), workflow.begin(),
                 [](unsigned char c) { return std::isalnum(c) ? static_cast<char>(std::tolower(c)) : '_'; });
  return workflow;
}

/**
 * Reads <results>/aggregate.csv and writes, per workflow label, into
 * <results>/reports: <wf>_reach.svg, <wf>_belief.svg, <wf>_reach.csv and
 * <wf>_belief.csv. Charts are pure views of the tables.
 */
inline ReportFiles emit_reports(std::filesystem::path const &results_dir)
{
  namespace fs    = std::filesystem;
  auto const path = results_dir / "aggregate.csv";
  std::ifstream in(path);
  if (!in)
  {
    throw ReportError("aggregate table not found: '" + path.string() + "'");
  }
  std::vector<MetricsRow> rows;
  try
  {
    rows = read_metrics_csv(in);
  }
  catch (ParseError const &ex)
  {
    throw ReportError("'" + path.string() + "': " + ex.what());
  }
  std::vector<std::string> workflows;
  for (auto const &r : rows)
  {
    if (std::find(workflows.begin(), workflows.end(), r.workflow) == workflows.end())
    {
      workflows.push_back(r.workflow);
    }
  }
  auto const out_dir = results_dir / "reports";
  fs::create_directories(out_dir);
  ReportFiles files;
  auto write = [](fs::path const &p, std::string const &content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out)
    {
      throw ReportError("cannot write '" + p.string() + "'");
    }
  };
  for (auto const &wf : workflows)
  {
    auto const stem   = workflow_file_stem(wf);
    auto const reach  = reach_table(rows, wf);
    auto const belief = belief_table(rows, wf);

    std::ostringstream rcsv, bcsv;
    write_metrics_csv(reach, rcsv);
    write_metrics_csv(belief, bcsv);
    files.tables.push_back(out_dir / (stem + "_reach.csv"));
    write(files.tables.back(), rcsv.str());
    files.tables.push_back(out_dir / (stem + "_belief.csv"));
    write(files.tables.back(), bcsv.str());

    files.charts.push_back(out_dir / (stem + "_reach.svg"));
    write(files.charts.back(), reach_chart_svg(wf, reach_series(reach)));
    files.charts.push_back(out_dir / (stem + "_belief.svg"));
    write(files.charts.back(), belief_chart_svg(wf, belief_series(belief)));
  }
  return files;
}

}  // namespace iosim
