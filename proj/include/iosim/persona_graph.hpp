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
#include "iosim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace iosim {

using AccountId = std::uint32_t;

/// Demographic identity attached to one account.
struct Cyberpersona
{
  AccountId id{0};
  std::string name;
  int age{18};
  std::string gender;
  std::vector<std::string> traits;
  std::vector<std::string> interests;
  std::string occupation;
  bool is_red{false};

  bool operator==(Cyberpersona const &) const = default;
};

struct Category
{
  std::string name;
  double probability{0.0};
};

struct OccupationCategory
{
  std::string name;
  double probability{0.0};
  std::string occupation_class;  // student | professional | manual | retired | other
};

/**
 * Marginal distribution tables for persona sampling.
 *
 * Ages are uniform on [age_min, age_max]. Interests and traits are drawn
 * without replacement, weighted by their table probabilities. The default
 * tables are declared values, not calibrated to any census.
 */
struct DemographicsConfig
{
  int age_min{18};
  int age_max{75};
  std::vector<Category> genders;
  std::vector<OccupationCategory> occupations;
  std::vector<Category> interests;
  std::vector<Category> traits;
  int interests_min{1};
  int interests_max{3};
  int traits_per_persona{2};
  std::vector<std::string> first_names;
  std::vector<std::string> last_names;

  static DemographicsConfig defaults();

  /// Throws ConfigError on non-normalized or empty tables.
  void validate() const;

  std::string occupation_class(std::string const &occupation) const
  {
    for (auto const &o : occupations)
    {
      if (o.name == occupation)
      {
        return o.occupation_class;
      }
    }
    return "other";
  }
};

inline DemographicsConfig DemographicsConfig::defaults()
{
  DemographicsConfig c;
  c.genders     = {{"female", 0.49}, {"male", 0.49}, {"nonbinary", 0.02}};
  c.occupations = {
      {"student", 0.14, "student"},
      {"teacher", 0.08, "professional"},
      {"engineer", 0.08, "professional"},
      {"nurse", 0.07, "professional"},
      {"accountant", 0.06, "professional"},
      {"software developer", 0.07, "professional"},
      {"electrician", 0.06, "manual"},
      {"construction worker", 0.06, "manual"},
      {"driver", 0.05, "manual"},
      {"farmer", 0.03, "manual"},
      {"retired", 0.14, "retired"},
      {"unemployed", 0.05, "other"},
      {"artist", 0.04, "other"},
      {"shop owner", 0.07, "other"},
  };
  for (char const *tag : {"politics", "economy", "immigration", "technology", "sports", "music",
                          "health", "environment", "geopolitics", "religion", "entertainment",
                          "science"})
  {
    c.interests.push_back({tag, 1.0 / 12.0});
  }
  for (char const *tag : {"open", "conscientious", "extraverted", "agreeable", "anxious",
                          "skeptical", "curious", "partisan"})
  {
    c.traits.push_back({tag, 1.0 / 8.0});
  }
  c.first_names = {"Alex",  "Sam",   "Maria", "Jon",   "Lena",  "Omar",  "Ines",  "Tom",
                   "Aiko",  "Pablo", "Nora",  "Ravi",  "Elena", "Chris", "Fatima", "Leo",
                   "Sofia", "Marta", "Ivan",  "Grace", "Hugo",  "Zoe",   "Amir",  "Lucia"};
  c.last_names  = {"Garcia", "Smith",  "Novak",  "Rossi",   "Muller", "Khan",   "Lopez",
                   "Silva",  "Tanaka", "Dubois", "Jensen",  "Moreno", "Kowalski", "Costa",
                   "Okafor", "Nguyen", "Brown",  "Fischer", "Ruiz",   "Petrov"};
  return c;
}

namespace detail {

template <typename Table>
void check_table(Table const &table, char const *label)
{
  if (table.empty())
  {
    throw ConfigError(std::string("demographics table '") + label + "' is empty");
  }
  double sum = 0.0;
  for (auto const &entry : table)
  {
    if (entry.name.empty())
    {
      throw ConfigError(std::string("demographics table '") + label + "' has an unnamed category");
    }
    if (!(entry.probability >= 0.0 && entry.probability <= 1.0))
    {
      throw ConfigError(std::string("demographics table '") + label + "' has probability outside [0,1]");
    }
    sum += entry.probability;
  }
  if (std::abs(sum - 1.0) > 1e-9)
  {
    throw ConfigError(std::string("demographics table '") + label + "' sums to " +
                      std::to_string(sum) + ", expected 1");
  }
}

template <typename Table>
std::size_t draw_category(Table const &table, Rng &rng)
{
  std::vector<double> w;
  w.reserve(table.size());
  for (auto const &e : table)
  {
    w.push_back(e.probability);
  }
  return rng.weighted(w);
}

// Weighted draw of `count` distinct names.
inline std::vector<std::string> draw_distinct(std::vector<Category> const &table, int count, Rng &rng)
{
  std::vector<double> w;
  for (auto const &e : table)
  {
    w.push_back(e.probability);
  }
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i)
  {
    auto const k = rng.weighted(w);
    if (k >= w.size())
    {
      break;
    }
    out.push_back(table[k].name);
    w[k] = 0.0;
  }
  return out;
}

}  // namespace detail

inline void DemographicsConfig::validate() const
{
  if (age_min < 13)
  {
    throw ConfigError("age_min must be at least 13");
  }
  if (age_max < age_min)
  {
    throw ConfigError("age_max must not be below age_min");
  }
  detail::check_table(genders, "genders");
  detail::check_table(occupations, "occupations");
  detail::check_table(interests, "interests");
  detail::check_table(traits, "traits");
  if (interests_min < 1 || interests_max < interests_min ||
      static_cast<std::size_t>(interests_max) > interests.size())
  {
    throw ConfigError("interest counts must satisfy 1 <= interests_min <= interests_max <= |interests|");
  }
  if (traits_per_persona < 0 || static_cast<std::size_t>(traits_per_persona) > traits.size())
  {
    throw ConfigError("traits_per_persona out of range");
  }
  if (first_names.empty() || last_names.empty())
  {
    throw ConfigError("name lists must be nonempty");
  }
}

/// Draws one persona. Shared by benign generation and red-account creation.
inline Cyberpersona sample_persona(AccountId id, DemographicsConfig const &cfg, Rng &rng)
{
  Cyberpersona p;
  p.id   = id;
  p.name = cfg.first_names[rng.index(cfg.first_names.size())] + " " +
           cfg.last_names[rng.index(cfg.last_names.size())];
  p.age        = static_cast<int>(rng.uniform_int(cfg.age_min, cfg.age_max));
  p.gender     = cfg.genders[detail::draw_category(cfg.genders, rng)].name;
  p.occupation = cfg.occupations[detail::draw_category(cfg.occupations, rng)].name;
  auto const n_interests = static_cast<int>(rng.uniform_int(cfg.interests_min, cfg.interests_max));
  p.interests            = detail::draw_distinct(cfg.interests, n_interests, rng);
  p.traits               = detail::draw_distinct(cfg.traits, cfg.traits_per_persona, rng);
  return p;
}

/// Generates `n` personas with ids 0..n-1. Pure in (n, cfg, seed).
inline std::vector<Cyberpersona> generate_personas(std::size_t n, DemographicsConfig const &cfg,
                                                   std::uint64_t seed)
{
  cfg.validate();
  std::vector<Cyberpersona> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    auto rng = Rng::derive(seed, StreamKind::Personas, i);
    out.push_back(sample_persona(static_cast<AccountId>(i), cfg, rng));
  }
  return out;
}

struct GraphConfig
{
  std::size_t n{1000};
  double mean_out_degree{10.0};
  double attachment_exponent{1.0};
  double reciprocity_p{0.2};
  double homophily_weight{1.0};

  void validate() const
  {
    if (!(mean_out_degree > 0.0))
    {
      throw ConfigError("mean_out_degree must be positive");
    }
    if (!(attachment_exponent >= 0.0))
    {
      throw ConfigError("attachment_exponent must be >= 0");
    }
    if (!(reciprocity_p >= 0.0 && reciprocity_p <= 1.0))
    {
      throw ConfigError("reciprocity_p must be in [0,1]");
    }
    if (!(homophily_weight >= 0.0))
    {
      throw ConfigError("homophily_weight must be >= 0");
    }
  }
};

using Edge = std::pair<AccountId, AccountId>;  // follower -> followee

/**
 * Directed follower graph. Adjacency lists are kept sorted so iteration
 * order is a function of content alone.
 */
class FollowerGraph
{
public:
  FollowerGraph() = default;

  bool contains(AccountId id) const
  {
    return index_.count(id) != 0;
  }

  /// Inserts an isolated node. Returns false if already present.
  bool add_node(AccountId id)
  {
    if (contains(id))
    {
      return false;
    }
    auto const pos = std::lower_bound(nodes_.begin(), nodes_.end(), id);
    nodes_.insert(pos, id);
    index_.emplace(id, out_.size());
    out_.emplace_back();
    in_.emplace_back();
    return true;
  }

  /// Adds follower -> followee. Rejects self-loops, unknown endpoints and duplicates.
  bool add_edge(AccountId follower, AccountId followee)
  {
    if (follower == followee || !contains(follower) || !contains(followee))
    {
      return false;
    }
    auto &out      = out_[index_.at(follower)];
    auto const pos = std::lower_bound(out.begin(), out.end(), followee);
    if (pos != out.end() && *pos == followee)
    {
      return false;
    }
    out.insert(pos, followee);
    auto &in = in_[index_.at(followee)];
    in.insert(std::lower_bound(in.begin(), in.end(), follower), follower);
    ++edge_count_;
    return true;
  }

  bool has_edge(AccountId follower, AccountId followee) const
  {
    auto it = index_.find(follower);
    if (it == index_.end())
    {
      return false;
    }
    auto const &out = out_[it->second];
    return std::binary_search(out.begin(), out.end(), followee);
  }

  std::vector<AccountId> const &nodes() const
  {
    return nodes_;
  }

  std::vector<AccountId> const &followees(AccountId id) const
  {
    return out_.at(index_.at(id));
  }

  std::vector<AccountId> const &followers(AccountId id) const
  {
    return in_.at(index_.at(id));
  }

  std::size_t node_count() const
  {
    return nodes_.size();
  }

  std::size_t edge_count() const
  {
    return edge_count_;
  }

  /// All edges sorted by (follower, followee).
  std::vector<Edge> edges() const
  {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (auto id : nodes_)
    {
      for (auto v : followees(id))
      {
        out.emplace_back(id, v);
      }
    }
    return out;
  }

  bool operator==(FollowerGraph const &other) const
  {
    return nodes_ == other.nodes_ && edges() == other.edges();
  }

private:
  std::vector<AccountId> nodes_;
  std::unordered_map<AccountId, std::size_t> index_;
  std::vector<std::vector<AccountId>> out_;
  std::vector<std::vector<AccountId>> in_;
  std::size_t edge_count_{0};
};

namespace detail {

// Interned interest sets for fast Jaccard evaluation.
class InterestIndex
{
public:
  std::vector<int> intern(std::vector<std::string> const &tags)
  {
    std::vector<int> out;
    for (auto const &t : tags)
    {
      auto [it, inserted] = ids_.emplace(t, static_cast<int>(ids_.size()));
      out.push_back(it->second);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

private:
  std::map<std::string, int> ids_;
};

inline double jaccard(std::vector<int> const &a, std::vector<int> const &b)
{
  if (a.empty() && b.empty())
  {
    return 0.0;
  }
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size())
  {
    if (a[i] == b[j])
    {
      ++common;
      ++i;
      ++j;
    }
    else if (a[i] < b[j])
    {
      ++i;
    }
    else
    {
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

// Number of links a node initiates: mean/(1+r) in expectation, since each
// initiated link is reciprocated with probability r.
inline std::size_t draw_degree(GraphConfig const &cfg, std::size_t available, Rng &rng)
{
  if (available == 0)
  {
    return 0;
  }
  if (cfg.mean_out_degree >= static_cast<double>(available))
  {
    return available;
  }
  double const base = cfg.mean_out_degree / (1.0 + cfg.reciprocity_p);
  auto k            = static_cast<std::size_t>(std::floor(base));
  if (rng.bernoulli(base - std::floor(base)))
  {
    ++k;
  }
  return std::min(k, available);
}

struct Wiring
{
  FollowerGraph &graph;
  GraphConfig const &cfg;
  std::unordered_map<AccountId, std::vector<int>> interests;
  Rng &rng;

  double homophily(AccountId a, AccountId b) const
  {
    if (cfg.homophily_weight == 0.0)
    {
      return 1.0;
    }
    auto ia = interests.find(a);
    auto ib = interests.find(b);
    if (ia == interests.end() || ib == interests.end())
    {
      return 1.0;
    }
    return 1.0 + cfg.homophily_weight * jaccard(ia->second, ib->second);
  }

  // Follow `k` distinct accounts chosen with weight (in+1)^alpha * homophily.
  // When `eligible` is given, only nodes flagged there (by position in
  // graph.nodes()) are candidates.
  void follow_preferential(AccountId u, std::size_t k, std::vector<char> const *eligible = nullptr)
  {
    auto const &nodes = graph.nodes();
    std::vector<double> w(nodes.size(), 0.0);
    for (std::size_t i = 0; i < nodes.size(); ++i)
    {
      auto const v = nodes[i];
      if (v == u || graph.has_edge(u, v) || (eligible && !(*eligible)[i]))
      {
        continue;
      }
      auto const in = static_cast<double>(graph.followers(v).size());
      w[i]          = std::pow(in + 1.0, cfg.attachment_exponent) * homophily(u, v);
    }
    for (std::size_t picked = 0; picked < k; ++picked)
    {
      auto const i = rng.weighted(w);
      if (i >= w.size())
      {
        break;
      }
      w[i] = 0.0;
      link(u, nodes[i]);
    }
  }

  // Gain `k` distinct followers, chosen with weight homophily.
  void gain_followers(AccountId u, std::size_t k)
  {
    auto const &nodes = graph.nodes();
    std::vector<double> w(nodes.size(), 0.0);
    for (std::size_t i = 0; i < nodes.size(); ++i)
    {
      auto const v = nodes[i];
      if (v == u || graph.has_edge(v, u))
      {
        continue;
      }
      w[i] = homophily(u, v);
    }
    for (std::size_t picked = 0; picked < k; ++picked)
    {
      auto const i = rng.weighted(w);
      if (i >= w.size())
      {
        break;
      }
      w[i] = 0.0;
      link(nodes[i], u);
    }
  }

  void link(AccountId follower, AccountId followee)
  {
    graph.add_edge(follower, followee);
    if (rng.bernoulli(cfg.reciprocity_p))
    {
      graph.add_edge(followee, follower);
    }
  }
};

inline void check_unique_ids(std::span<Cyberpersona const> personas, std::set<AccountId> &seen)
{
  for (auto const &p : personas)
  {
    if (!seen.insert(p.id).second)
    {
      throw InputError("duplicate persona id " + std::to_string(p.id));
    }
  }
}

}  // namespace detail

/**
 * Builds a follower graph over exactly the persona ids.
 *
 * Nodes arrive in a seeded random order; each initiates links to accounts
 * that arrived earlier with probability proportional to
 * (in-degree + 1)^attachment_exponent * (1 + homophily_weight * J), where J
 * is the Jaccard overlap of interests. Each link is reciprocated with
 * probability reciprocity_p.
 */
inline FollowerGraph generate_follower_graph(std::span<Cyberpersona const> personas,
                                             GraphConfig const &cfg, std::uint64_t seed)
{
  cfg.validate();
  std::set<AccountId> seen;
  detail::check_unique_ids(personas, seen);

  FollowerGraph graph;
  detail::InterestIndex tags;
  std::unordered_map<AccountId, std::vector<int>> interests;
  for (auto const &p : personas)
  {
    graph.add_node(p.id);
    interests.emplace(p.id, tags.intern(p.interests));
  }

  auto rng = Rng::derive(seed, StreamKind::Graph);
  std::vector<AccountId> order(graph.nodes());
  for (std::size_t i = order.size(); i > 1; --i)
  {
    std::swap(order[i - 1], order[rng.index(i)]);
  }

  std::unordered_map<AccountId, std::size_t> position;
  for (std::size_t i = 0; i < graph.nodes().size(); ++i)
  {
    position.emplace(graph.nodes()[i], i);
  }
  // Growth: each arriving node links to accounts that arrived before it, which
  // concentrates in-degree on early, popular accounts. Links the earlier
  // arrivals cannot absorb go to any account, so full density stays complete.
  std::vector<char> arrived(graph.nodes().size(), 0);
  detail::Wiring wiring{graph, cfg, std::move(interests), rng};
  for (auto u : order)
  {
    auto const before    = graph.followees(u).size();
    auto const available = graph.node_count() - 1 - before;
    auto const k         = detail::draw_degree(cfg, available, rng);
    wiring.follow_preferential(u, k, &arrived);
    auto const taken = graph.followees(u).size() - before;
    if (taken < k)
    {
      wiring.follow_preferential(u, k - taken);
    }
    arrived[position.at(u)] = 1;
  }
  return graph;
}

/**
 * Inserts new accounts into an existing graph without touching existing
 * edges between old nodes. Each new account follows others by the
 * preferential rule and gains a comparable number of followers, so content
 * it authors has an audience.
 */
inline FollowerGraph attach_accounts(FollowerGraph graph, std::span<Cyberpersona const> existing,
                                     std::span<Cyberpersona const> new_personas,
                                     GraphConfig const &cfg, std::uint64_t seed)
{
  cfg.validate();
  std::set<AccountId> seen;
  detail::check_unique_ids(new_personas, seen);
  for (auto const &p : new_personas)
  {
    if (graph.contains(p.id))
    {
      throw InputError("new persona id " + std::to_string(p.id) + " collides with an existing node");
    }
  }

  detail::InterestIndex tags;
  std::unordered_map<AccountId, std::vector<int>> interests;
  for (auto const &p : existing)
  {
    interests.emplace(p.id, tags.intern(p.interests));
  }
  for (auto const &p : new_personas)
  {
    interests.emplace(p.id, tags.intern(p.interests));
  }

  auto rng = Rng::derive(seed, StreamKind::Attach);
  detail::Wiring wiring{graph, cfg, std::move(interests), rng};
  for (auto const &p : new_personas)
  {
    graph.add_node(p.id);
    auto const available = graph.node_count() - 1;
    wiring.follow_preferential(p.id, detail::draw_degree(cfg, available, rng));
    auto const free_followers = graph.node_count() - 1 - graph.followers(p.id).size();
    wiring.gain_followers(p.id, detail::draw_degree(cfg, free_followers, rng));
  }
  return graph;
}

}  // namespace iosim
