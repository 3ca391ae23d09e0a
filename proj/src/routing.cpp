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

#include "nasor/routing.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include "nasor/errors.hpp"
#include "nasor/json_util.hpp"

namespace nasor {

namespace {

// Label-setting search with a lexicographic cost. Both cost components
// are additive and non-negative, and sequence comparison is stable under
// common extension for equal-length sequences, so the first settled
// label per vertex is optimal.
struct AsLabel {
  std::size_t count;
  Micros latency;
  std::vector<std::uint32_t> seq;

  bool operator>(const AsLabel& o) const {
    if (count != o.count) return count > o.count;
    if (latency != o.latency) return latency > o.latency;
    return seq > o.seq;
  }
};

Micros min_crossing_latency(const Topology& t, DomainId a, DomainId b) {
  Micros best = std::numeric_limits<Micros>::max();
  for (const Link* l : t.crossings_between(a, b)) {
    best = std::min(best, l->latency_us);
  }
  return best;
}

struct NodeLabel {
  Micros latency;
  std::size_t hops;
  std::vector<std::string> seq;

  bool operator>(const NodeLabel& o) const {
    if (latency != o.latency) return latency > o.latency;
    if (hops != o.hops) return hops > o.hops;
    return seq > o.seq;
  }
};

// Intra-domain node path converted to hop records via the deterministic
// parallel-link chooser.
std::vector<HopRecord> nodes_to_hops(const Topology& t, DomainId domain,
                                     const std::vector<std::string>& nodes) {
  std::vector<HopRecord> hops;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const Link* l = pick_intra_link(t, domain, nodes[i], nodes[i + 1]);
    if (l == nullptr) {
      throw Error(Errc::internal, "intra path references non-adjacent nodes `" +
                                      nodes[i] + "` and `" + nodes[i + 1] +
                                      "`");
    }
    hops.push_back({l->link_id, nodes[i], nodes[i + 1], domain});
  }
  return hops;
}

Micros hops_latency(const Topology& t, const std::vector<HopRecord>& hops) {
  Micros total = 0;
  for (const auto& h : hops) total += t.link(h.link_id).latency_us;
  return total;
}

}  // namespace

const Link* pick_intra_link(const Topology& t, DomainId domain,
                            const std::string& u, const std::string& v) {
  const Link* best = nullptr;
  for (const Link* l : t.links_at(u)) {
    if (l->scope != LinkScope::intra_domain) continue;
    if (t.router(l->node_a).domain != domain) continue;
    if (t.other_end(*l, u) != v) continue;
    if (best == nullptr || l->latency_us < best->latency_us ||
        (l->latency_us == best->latency_us && l->link_id < best->link_id)) {
      best = l;
    }
  }
  return best;
}

AsPath compute_as_path(const Topology& t, DomainId src, DomainId dst) {
  if (!t.has_domain(src)) {
    throw Error(Errc::unknown_entity,
                "unknown domain " + std::to_string(src.asn));
  }
  if (!t.has_domain(dst)) {
    throw Error(Errc::unknown_entity,
                "unknown domain " + std::to_string(dst.asn));
  }
  if (src == dst) return AsPath{{src}};

  std::priority_queue<AsLabel, std::vector<AsLabel>, std::greater<AsLabel>>
      queue;
  std::set<std::uint32_t> settled;
  queue.push({1, 0, {src.asn}});
  while (!queue.empty()) {
    AsLabel cur = queue.top();
    queue.pop();
    std::uint32_t here = cur.seq.back();
    if (!settled.insert(here).second) continue;
    if (here == dst.asn) {
      AsPath path;
      for (std::uint32_t asn : cur.seq) path.domains.push_back({asn});
      return path;
    }
    for (DomainId next : t.neighbor_domains({here})) {
      if (settled.contains(next.asn)) continue;
      AsLabel label = cur;
      label.count += 1;
      label.latency += min_crossing_latency(t, {here}, next);
      label.seq.push_back(next.asn);
      queue.push(std::move(label));
    }
  }
  throw Error(Errc::no_path, "no AS path from " + std::to_string(src.asn) +
                                 " to " + std::to_string(dst.asn));
}

std::vector<std::string> compute_intra_path(const Topology& t, DomainId domain,
                                            const std::string& ingress,
                                            const std::string& egress) {
  const RouterNode& in = t.router(ingress);
  const RouterNode& out = t.router(egress);
  if (in.domain != domain || out.domain != domain) {
    throw Error(Errc::unknown_entity, "intra path endpoints must lie in domain " +
                                          std::to_string(domain.asn));
  }
  if (ingress == egress) return {ingress};

  std::priority_queue<NodeLabel, std::vector<NodeLabel>,
                      std::greater<NodeLabel>>
      queue;
  std::set<std::string> settled;
  queue.push({0, 0, {ingress}});
  while (!queue.empty()) {
    NodeLabel cur = queue.top();
    queue.pop();
    const std::string& here = cur.seq.back();
    if (!settled.insert(here).second) continue;
    if (here == egress) return cur.seq;

    // Cheapest parallel link per neighbor.
    std::map<std::string, Micros> next_latency;
    for (const Link* l : t.links_at(here)) {
      if (l->scope != LinkScope::intra_domain) continue;
      if (t.router(l->node_a).domain != domain) continue;
      const std::string& peer = t.other_end(*l, here);
      auto it = next_latency.find(peer);
      if (it == next_latency.end() || l->latency_us < it->second) {
        next_latency[peer] = l->latency_us;
      }
    }
    for (const auto& [peer, lat] : next_latency) {
      if (settled.contains(peer)) continue;
      NodeLabel label = cur;
      label.latency += lat;
      label.hops += 1;
      label.seq.push_back(peer);
      queue.push(std::move(label));
    }
  }
  // Validated topologies have connected intra-domain graphs.
  throw Error(Errc::internal, "domain " + std::to_string(domain.asn) +
                                  " has no path `" + ingress + "` -> `" +
                                  egress + "`");
}

RoutePlan assemble_route_plan(const Topology& t, const std::string& src_node,
                              const std::string& dst_node) {
  const RouterNode& src = t.router(src_node);
  const RouterNode& dst = t.router(dst_node);

  RoutePlan plan;
  plan.src_node = src_node;
  plan.dst_node = dst_node;

  if (src_node == dst_node) {
    plan.as_path = AsPath{{src.domain}};
    plan.total_latency_us = 0;
    plan.bottleneck_kbps = std::nullopt;
    return plan;
  }

  plan.as_path = compute_as_path(t, src.domain, dst.domain);
  std::string current = src_node;

  for (std::size_t i = 0; i + 1 < plan.as_path.domains.size(); ++i) {
    DomainId here = plan.as_path.domains[i];
    DomainId next = plan.as_path.domains[i + 1];

    struct Candidate {
      Micros cost;
      std::string up;
      std::string down;
      std::string link_id;
      std::vector<HopRecord> leg;
    };
    std::optional<Candidate> best;
    for (const Link* l : t.crossings_between(here, next)) {
      const std::string& up =
          t.router(l->node_a).domain == here ? l->node_a : l->node_b;
      const std::string& down = t.other_end(*l, up);
      std::vector<HopRecord> leg =
          nodes_to_hops(t, here, compute_intra_path(t, here, current, up));
      Micros cost = hops_latency(t, leg) + l->latency_us;
      Candidate c{cost, up, down, l->link_id, std::move(leg)};
      if (!best || std::tie(c.cost, c.up, c.down, c.link_id) <
                       std::tie(best->cost, best->up, best->down,
                                best->link_id)) {
        best = std::move(c);
      }
    }
    if (!best) {
      throw Error(Errc::no_path,
                  "no usable border pair between " + std::to_string(here.asn) +
                      " and " + std::to_string(next.asn));
    }
    for (auto& h : best->leg) plan.hops.push_back(std::move(h));
    plan.hops.push_back({best->link_id, best->up, best->down, std::nullopt});
    current = best->down;
  }

  std::vector<HopRecord> tail = nodes_to_hops(
      t, dst.domain, compute_intra_path(t, dst.domain, current, dst_node));
  for (auto& h : tail) plan.hops.push_back(std::move(h));

  plan.total_latency_us = hops_latency(t, plan.hops);
  if (plan.hops.empty()) {
    plan.bottleneck_kbps = std::nullopt;
  } else {
    Kbps bottleneck = std::numeric_limits<Kbps>::max();
    for (const auto& h : plan.hops) {
      bottleneck = std::min(bottleneck, t.residual_kbps(h.link_id));
    }
    plan.bottleneck_kbps = bottleneck;
  }
  return plan;
}

std::vector<std::string> RoutePlan::node_sequence() const {
  std::vector<std::string> nodes{src_node};
  for (const auto& h : hops) nodes.push_back(h.to_node);
  return nodes;
}

std::vector<SegmentList> encode_segment_list(const Topology& t,
                                             const RoutePlan& plan) {
  std::vector<SegmentList> lists;
  const RouterNode& src = t.router(plan.src_node);
  lists.push_back({src.domain, {src.node_sid}});
  for (const auto& hop : plan.hops) {
    const Link& l = t.link(hop.link_id);
    const RouterNode& to = t.router(hop.to_node);
    if (l.scope == LinkScope::intra_domain) {
      lists.back().sids.push_back(to.node_sid);
    } else {
      lists.back().sids.push_back(l.adjacency_sid);
      lists.push_back({to.domain, {to.node_sid}});
    }
  }
  return lists;
}

std::vector<HopRecord> decode_segment_lists(
    const Topology& t, const std::vector<SegmentList>& lists) {
  if (lists.empty() || lists.front().sids.empty()) {
    throw Error(Errc::sid_resolution, "empty segment list");
  }

  auto resolve_node = [&t](DomainId d, std::uint32_t sid) -> const RouterNode* {
    for (const RouterNode* r : t.routers_in_domain(d)) {
      if (r->node_sid == sid) return r;
    }
    return nullptr;
  };
  auto resolve_crossing = [&t](DomainId d, std::uint32_t sid) -> const Link* {
    for (DomainId peer : t.neighbor_domains(d)) {
      for (const Link* l : t.crossings_between(d, peer)) {
        if (l->adjacency_sid == sid) return l;
      }
    }
    return nullptr;
  };

  const RouterNode* start =
      resolve_node(lists.front().domain, lists.front().sids.front());
  if (start == nullptr) {
    throw Error(Errc::sid_resolution,
                "sid " + std::to_string(lists.front().sids.front()) +
                    " does not name a router in domain " +
                    std::to_string(lists.front().domain.asn));
  }

  std::vector<HopRecord> hops;
  std::string current = start->node_id;
  for (std::size_t li = 0; li < lists.size(); ++li) {
    const SegmentList& list = lists[li];
    std::size_t si = 0;
    if (li > 0) {
      // A downstream list starts with the landing router's node SID.
      const RouterNode* landing = resolve_node(list.domain, list.sids.at(0));
      if (landing == nullptr || landing->node_id != current) {
        throw Error(Errc::sid_resolution,
                    "segment list for domain " +
                        std::to_string(list.domain.asn) +
                        " does not start at the crossing landing router");
      }
      si = 1;
    } else {
      si = 1;  // first SID is the source router
    }
    for (; si < list.sids.size(); ++si) {
      std::uint32_t sid = list.sids[si];
      if (const RouterNode* next = resolve_node(list.domain, sid)) {
        const Link* l = pick_intra_link(t, list.domain, current, next->node_id);
        if (l == nullptr) {
          throw Error(Errc::sid_resolution,
                      "no intra-domain link `" + current + "` -> `" +
                          next->node_id + "`");
        }
        hops.push_back({l->link_id, current, next->node_id, list.domain});
        current = next->node_id;
        continue;
      }
      const Link* crossing = resolve_crossing(list.domain, sid);
      if (crossing == nullptr) {
        throw Error(Errc::sid_resolution,
                    "sid " + std::to_string(sid) + " unresolved in domain " +
                        std::to_string(list.domain.asn));
      }
      if (crossing->node_a != current && crossing->node_b != current) {
        throw Error(Errc::sid_resolution,
                    "crossing `" + crossing->link_id +
                        "` is not incident to `" + current + "`");
      }
      if (si + 1 != list.sids.size()) {
        throw Error(Errc::sid_resolution,
                    "crossing sid must terminate the upstream list");
      }
      const std::string& next = t.other_end(*crossing, current);
      hops.push_back({crossing->link_id, current, next, std::nullopt});
      current = next;
    }
  }
  return hops;
}

std::pair<Micros, std::optional<Kbps>> route_metrics(const Topology& t,
                                                     const RoutePlan& plan) {
  if (plan.hops.empty()) return {0, std::nullopt};
  Micros latency = 0;
  Kbps bottleneck = std::numeric_limits<Kbps>::max();
  for (const auto& h : plan.hops) {
    if (!t.has_link(h.link_id)) {
      throw Error(Errc::stale_plan,
                  "plan references missing link `" + h.link_id + "`");
    }
    latency += t.link(h.link_id).latency_us;
    bottleneck = std::min(bottleneck, t.residual_kbps(h.link_id));
  }
  return {latency, bottleneck};
}

nlohmann::json RoutePlan::to_json() const {
  nlohmann::json j;
  j["src_node"] = src_node;
  j["dst_node"] = dst_node;
  j["as_path"] = nlohmann::json::array();
  for (DomainId d : as_path.domains) j["as_path"].push_back(d.asn);
  j["hops"] = nlohmann::json::array();
  for (const auto& h : hops) {
    nlohmann::json hj;
    hj["link_id"] = h.link_id;
    hj["from_node"] = h.from_node;
    hj["to_node"] = h.to_node;
    if (h.domain) {
      hj["domain"] = h.domain->asn;
    } else {
      hj["domain"] = nullptr;
    }
    j["hops"].push_back(std::move(hj));
  }
  j["total_latency_ms"] = micros_to_ms(total_latency_us);
  if (bottleneck_kbps) {
    j["bottleneck_mbps"] = kbps_to_mbps(*bottleneck_kbps);
  } else {
    j["bottleneck_mbps"] = nullptr;
  }
  return j;
}

RoutePlan RoutePlan::from_json(const nlohmann::json& j) {
  RoutePlan plan;
  plan.src_node = jsonutil::require_string(j, "src_node");
  plan.dst_node = jsonutil::require_string(j, "dst_node");
  for (const auto& a : jsonutil::require_array(j, "as_path")) {
    plan.as_path.domains.push_back({a.get<std::uint32_t>()});
  }
  for (const auto& hj : jsonutil::require_array(j, "hops")) {
    HopRecord h;
    h.link_id = jsonutil::require_string(hj, "link_id");
    h.from_node = jsonutil::require_string(hj, "from_node");
    h.to_node = jsonutil::require_string(hj, "to_node");
    const auto& d = jsonutil::require(hj, "domain");
    if (!d.is_null()) h.domain = DomainId{d.get<std::uint32_t>()};
    plan.hops.push_back(std::move(h));
  }
  plan.total_latency_us =
      ms_to_micros(jsonutil::require_number(j, "total_latency_ms"));
  const auto& b = jsonutil::require(j, "bottleneck_mbps");
  if (!b.is_null()) plan.bottleneck_kbps = mbps_to_kbps(b.get<double>());
  return plan;
}

nlohmann::json segment_lists_to_json(const std::vector<SegmentList>& lists) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& l : lists) {
    j.push_back({{"domain", l.domain.asn}, {"sids", l.sids}});
  }
  return j;
}

std::vector<SegmentList> segment_lists_from_json(const nlohmann::json& j) {
  std::vector<SegmentList> lists;
  for (const auto& lj : j) {
    SegmentList l;
    l.domain = DomainId{jsonutil::require_uint(lj, "domain")};
    for (const auto& s : jsonutil::require_array(lj, "sids")) {
      l.sids.push_back(s.get<std::uint32_t>());
    }
    lists.push_back(std::move(l));
  }
  return lists;
}

}  // namespace nasor
