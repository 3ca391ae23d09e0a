// Copyright 2026 The Nasor Engine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "oracles.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <tuple>

#include <json.hpp>

namespace nasor::testing {

namespace {

int randint(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

bool chance(std::mt19937_64& rng, double p) {
  return (rng() >> 11) * 0x1.0p-53 < p;
}

Micros min_crossing_latency(const Topology& t, DomainId a, DomainId b) {
  Micros best = std::numeric_limits<Micros>::max();
  for (const Link* l : t.crossings_between(a, b)) {
    best = std::min(best, l->latency_us);
  }
  return best;
}

}  // namespace

Topology random_topology(std::mt19937_64& rng, const TopoGenOptions& opt) {
  int domain_count = randint(rng, opt.min_domains, opt.max_domains);
  std::vector<int> routers(domain_count);
  for (int d = 0; d < domain_count; ++d) {
    routers[d] = randint(rng, opt.min_routers, opt.max_routers);
  }

  // Inter-domain adjacency: a random tree, optionally densified.
  std::set<std::pair<int, int>> domain_pairs;
  for (int d = 1; d < domain_count; ++d) {
    domain_pairs.insert({randint(rng, 0, d - 1), d});
  }
  if (!opt.tree_inter_domain) {
    for (int i = 0; i < domain_count; ++i) {
      for (int j = i + 1; j < domain_count; ++j) {
        if (chance(rng, opt.extra_domain_edge_prob)) {
          domain_pairs.insert({i, j});
        }
      }
    }
  }

  struct Crossing {
    int da, db, ra, rb;
    int latency_ms, capacity_mbps;
  };
  std::vector<Crossing> crossings;
  for (const auto& [i, j] : domain_pairs) {
    int count = opt.single_crossing
                    ? 1
                    : randint(rng, 1, opt.max_parallel_crossings);
    for (int k = 0; k < count; ++k) {
      crossings.push_back({i, j, randint(rng, 0, routers[i] - 1),
                           randint(rng, 0, routers[j] - 1),
                           randint(rng, 1, 10), 100 * randint(rng, 10, 100)});
    }
  }
  std::set<std::pair<int, int>> borders;
  for (const Crossing& c : crossings) {
    borders.insert({c.da, c.ra});
    borders.insert({c.db, c.rb});
  }

  auto node_name = [](int d, int r) {
    return "d" + std::to_string(d) + "r" + std::to_string(r);
  };

  nlohmann::json doc;
  doc["domains"] = nlohmann::json::array();
  int intra_counter = 0;
  for (int d = 0; d < domain_count; ++d) {
    nlohmann::json dj;
    dj["asn"] = 65001 + d;
    dj["routers"] = nlohmann::json::array();
    for (int r = 0; r < routers[d]; ++r) {
      dj["routers"].push_back(
          {{"id", node_name(d, r)},
           {"sid", 101 + r},
           {"role", borders.contains({d, r}) ? "border" : "interior"}});
    }
    dj["links"] = nlohmann::json::array();
    int local_adj = 500;
    auto add_intra = [&](int ra, int rb) {
      dj["links"].push_back({{"id", "i" + std::to_string(intra_counter++)},
                             {"a", node_name(d, ra)},
                             {"b", node_name(d, rb)},
                             {"capacity_mbps", 100 * randint(rng, 10, 100)},
                             {"latency_ms", randint(rng, 1, 10)},
                             {"adj_sid", local_adj++}});
    };
    for (int r = 1; r < routers[d]; ++r) add_intra(randint(rng, 0, r - 1), r);
    for (int ra = 0; ra < routers[d]; ++ra) {
      for (int rb = ra + 1; rb < routers[d]; ++rb) {
        if (chance(rng, opt.extra_intra_edge_prob)) add_intra(ra, rb);
      }
    }
    doc["domains"].push_back(std::move(dj));
  }

  doc["peerings"] = nlohmann::json::array();
  int cross_counter = 0;
  int cross_adj = 1000;
  for (const Crossing& c : crossings) {
    doc["peerings"].push_back({{"id", "x" + std::to_string(cross_counter++)},
                               {"a", node_name(c.da, c.ra)},
                               {"b", node_name(c.db, c.rb)},
                               {"capacity_mbps", c.capacity_mbps},
                               {"latency_ms", c.latency_ms},
                               {"adj_sid", cross_adj++},
                               {"domain_a", 65001 + c.da},
                               {"domain_b", 65001 + c.db}});
  }
  return Topology::from_json(doc);
}

std::optional<AsPath> oracle_as_path(const Topology& t, DomainId src,
                                     DomainId dst) {
  if (src == dst) return AsPath{{src}};

  using Rank = std::tuple<std::size_t, Micros, std::vector<std::uint32_t>>;
  std::optional<Rank> best;

  std::vector<std::uint32_t> path{src.asn};
  std::set<std::uint32_t> on_path{src.asn};

  // Depth-first enumeration of every simple domain path.
  auto dfs = [&](auto&& self, DomainId here, Micros latency) -> void {
    if (here == dst) {
      Rank candidate{path.size(), latency, path};
      if (!best || candidate < *best) best = std::move(candidate);
      return;
    }
    for (DomainId next : t.neighbor_domains(here)) {
      if (on_path.contains(next.asn)) continue;
      on_path.insert(next.asn);
      path.push_back(next.asn);
      self(self, next, latency + min_crossing_latency(t, here, next));
      path.pop_back();
      on_path.erase(next.asn);
    }
  };
  dfs(dfs, src, 0);

  if (!best) return std::nullopt;
  AsPath out;
  for (std::uint32_t asn : std::get<2>(*best)) out.domains.push_back({asn});
  return out;
}

std::optional<std::vector<std::string>> oracle_intra_path(
    const Topology& t, DomainId domain, const std::string& ingress,
    const std::string& egress) {
  if (ingress == egress) return std::vector<std::string>{ingress};

  using Rank = std::tuple<Micros, std::size_t, std::vector<std::string>>;
  std::optional<Rank> best;
  std::vector<std::string> path{ingress};
  std::set<std::string> on_path{ingress};

  auto dfs = [&](auto&& self, const std::string& here, Micros latency) -> void {
    if (here == egress) {
      Rank candidate{latency, path.size() - 1, path};
      if (!best || candidate < *best) best = std::move(candidate);
      return;
    }
    // Cheapest parallel intra link per neighbor.
    std::map<std::string, Micros> step;
    for (const Link* l : t.links_at(here)) {
      if (l->scope != LinkScope::intra_domain) continue;
      if (t.router(l->node_a).domain != domain) continue;
      const std::string& peer = t.other_end(*l, here);
      auto it = step.find(peer);
      if (it == step.end() || l->latency_us < it->second) {
        step[peer] = l->latency_us;
      }
    }
    for (const auto& [peer, lat] : step) {
      if (on_path.contains(peer)) continue;
      on_path.insert(peer);
      path.push_back(peer);
      self(self, peer, latency + lat);
      path.pop_back();
      on_path.erase(peer);
    }
  };
  dfs(dfs, ingress, 0);

  if (!best) return std::nullopt;
  return std::get<2>(*best);
}

std::optional<Micros> oracle_end_to_end_latency(const Topology& t,
                                                const std::string& src,
                                                const std::string& dst,
                                                const AsPath& as_path) {
  std::optional<Micros> best;
  std::set<std::string> visited{src};

  auto dfs = [&](auto&& self, const std::string& here, std::size_t di,
                 Micros latency) -> void {
    if (best && latency >= *best) return;
    if (here == dst && di + 1 == as_path.domains.size()) {
      best = latency;
      return;
    }
    DomainId current = as_path.domains[di];
    // Intra moves within the current domain (cheapest parallel link).
    std::map<std::string, Micros> step;
    for (const Link* l : t.links_at(here)) {
      if (l->scope == LinkScope::intra_domain &&
          t.router(l->node_a).domain == current) {
        const std::string& peer = t.other_end(*l, here);
        auto it = step.find(peer);
        if (it == step.end() || l->latency_us < it->second) {
          step[peer] = l->latency_us;
        }
      }
    }
    for (const auto& [peer, lat] : step) {
      if (visited.contains(peer)) continue;
      visited.insert(peer);
      self(self, peer, di, latency + lat);
      visited.erase(peer);
    }
    // Crossings into the next domain on the AS path.
    if (di + 1 < as_path.domains.size()) {
      for (const Link* l : t.links_at(here)) {
        if (l->scope != LinkScope::inter_domain) continue;
        const std::string& peer = t.other_end(*l, here);
        if (t.router(peer).domain != as_path.domains[di + 1]) continue;
        if (visited.contains(peer)) continue;
        visited.insert(peer);
        self(self, peer, di + 1, latency + l->latency_us);
        visited.erase(peer);
      }
    }
  };

  if (t.router(src).domain != as_path.domains.front()) return std::nullopt;
  dfs(dfs, src, 0, 0);
  return best;
}

namespace {

std::vector<const RouterNode*> domain_borders(const Topology& t, DomainId d) {
  std::vector<const RouterNode*> out;
  for (const RouterNode* r : t.routers_in_domain(d)) {
    if (r->role == RouterRole::border) out.push_back(r);
  }
  return out;
}

// Exhaustive simple-path widest bottleneck between two routers.
Kbps widest_between(const Topology& t, DomainId d, const std::string& a,
                    const std::string& b) {
  Kbps best = 0;
  std::set<std::string> visited{a};
  auto dfs = [&](auto&& self, const std::string& here, Kbps width) -> void {
    if (here == b) {
      best = std::max(best, width);
      return;
    }
    for (const Link* l : t.links_at(here)) {
      if (l->scope != LinkScope::intra_domain) continue;
      if (t.router(l->node_a).domain != d) continue;
      const std::string& peer = t.other_end(*l, here);
      if (visited.contains(peer)) continue;
      visited.insert(peer);
      self(self, peer,
           std::min(width, l->capacity_kbps - l->reserved_kbps));
      visited.erase(peer);
    }
  };
  dfs(dfs, a, std::numeric_limits<Kbps>::max());
  return best;
}

Micros fastest_between(const Topology& t, DomainId d, const std::string& a,
                       const std::string& b) {
  Micros best = std::numeric_limits<Micros>::max();
  std::set<std::string> visited{a};
  auto dfs = [&](auto&& self, const std::string& here, Micros latency) -> void {
    if (latency >= best) return;
    if (here == b) {
      best = latency;
      return;
    }
    for (const Link* l : t.links_at(here)) {
      if (l->scope != LinkScope::intra_domain) continue;
      if (t.router(l->node_a).domain != d) continue;
      const std::string& peer = t.other_end(*l, here);
      if (visited.contains(peer)) continue;
      visited.insert(peer);
      self(self, peer, latency + l->latency_us);
      visited.erase(peer);
    }
  };
  dfs(dfs, a, 0);
  return best;
}

}  // namespace

Kbps oracle_max_transit_kbps(const Topology& t, DomainId domain) {
  auto borders = domain_borders(t, domain);
  Kbps best = 0;
  for (std::size_t i = 0; i < borders.size(); ++i) {
    for (std::size_t j = i + 1; j < borders.size(); ++j) {
      best = std::max(best, widest_between(t, domain, borders[i]->node_id,
                                           borders[j]->node_id));
    }
  }
  return best;
}

Micros oracle_min_transit_latency_us(const Topology& t, DomainId domain) {
  auto borders = domain_borders(t, domain);
  Micros best = std::numeric_limits<Micros>::max();
  for (std::size_t i = 0; i < borders.size(); ++i) {
    for (std::size_t j = i + 1; j < borders.size(); ++j) {
      best = std::min(best, fastest_between(t, domain, borders[i]->node_id,
                                            borders[j]->node_id));
    }
  }
  return best == std::numeric_limits<Micros>::max() ? 0 : best;
}

std::vector<Kbps> oracle_proportional_shares(
    Kbps delivered, const std::vector<Kbps>& offered) {
  // Exact rational shares via __int128 to stay independent of the
  // engine's arithmetic. Floor first, then hand out the remainder to the
  // largest fractional parts (ties to the earliest flow).
  Kbps offered_sum = 0;
  for (Kbps o : offered) offered_sum += o;
  std::vector<Kbps> shares(offered.size(), 0);
  if (offered_sum == 0) return shares;

  std::vector<std::pair<__int128, std::size_t>> rem;
  Kbps assigned = 0;
  for (std::size_t i = 0; i < offered.size(); ++i) {
    __int128 numer = static_cast<__int128>(delivered) * offered[i];
    shares[i] = static_cast<Kbps>(numer / offered_sum);
    assigned += shares[i];
    rem.push_back({numer % offered_sum, i});
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  Kbps leftover = std::min(delivered, offered_sum) - assigned;
  for (std::size_t k = 0; k < rem.size() && leftover > 0; ++k, --leftover) {
    shares[rem[k].second] += 1;
  }
  return shares;
}

}  // namespace nasor::testing
