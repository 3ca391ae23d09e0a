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

#include "nasor/topology.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "nasor/errors.hpp"
#include "nasor/json_util.hpp"

namespace nasor {

namespace {

using jsonutil::require;
using jsonutil::require_array;
using jsonutil::require_number;
using jsonutil::require_string;
using jsonutil::require_uint;

RouterRole parse_role(const std::string& s) {
  if (s == "border") return RouterRole::border;
  if (s == "interior") return RouterRole::interior;
  throw Error(Errc::parse, "field `role` must be \"border\" or \"interior\"");
}

const char* role_name(RouterRole r) {
  return r == RouterRole::border ? "border" : "interior";
}

Link parse_link(const nlohmann::json& j) {
  Link l;
  l.link_id = require_string(j, "id");
  l.node_a = require_string(j, "a");
  l.node_b = require_string(j, "b");
  l.capacity_kbps = mbps_to_kbps(require_number(j, "capacity_mbps"));
  l.latency_us = ms_to_micros(require_number(j, "latency_ms"));
  l.adjacency_sid = require_uint(j, "adj_sid");
  return l;
}

}  // namespace

Topology Topology::from_string(std::string_view text) {
  return from_json(jsonutil::parse_text(text));
}

Topology Topology::from_json(const nlohmann::json& doc) {
  Topology t;
  std::vector<std::string> violations;

  const auto& domains = require_array(doc, "domains");
  for (const auto& dj : domains) {
    DomainId d{require_uint(dj, "asn")};
    if (d.asn == 0) {
      throw Error(Errc::parse, "field `asn` must be a positive integer");
    }
    if (t.has_domain(d)) {
      violations.push_back("duplicate domain asn " + std::to_string(d.asn));
      continue;
    }
    t.domains_.push_back(d);

    for (const auto& rj : require_array(dj, "routers")) {
      RouterNode r;
      r.node_id = require_string(rj, "id");
      r.domain = d;
      r.node_sid = require_uint(rj, "sid");
      r.role = parse_role(require_string(rj, "role"));
      if (r.node_sid == 0) {
        throw Error(Errc::parse, "field `sid` must be a positive integer");
      }
      if (t.routers_.contains(r.node_id)) {
        violations.push_back("duplicate router id `" + r.node_id + "`");
        continue;
      }
      t.routers_.emplace(r.node_id, std::move(r));
    }
    for (const auto& lj : require_array(dj, "links")) {
      Link l = parse_link(lj);
      l.scope = LinkScope::intra_domain;
      if (t.links_.contains(l.link_id)) {
        violations.push_back("duplicate link id `" + l.link_id + "`");
        continue;
      }
      t.links_.emplace(l.link_id, std::move(l));
    }
  }

  if (doc.contains("peerings")) {
    for (const auto& pj : require_array(doc, "peerings")) {
      Link l = parse_link(pj);
      l.scope = LinkScope::inter_domain;
      DomainId da{require_uint(pj, "domain_a")};
      DomainId db{require_uint(pj, "domain_b")};
      if (t.links_.contains(l.link_id)) {
        violations.push_back("duplicate link id `" + l.link_id + "`");
        continue;
      }
      if (t.has_router(l.node_a) && t.router(l.node_a).domain != da) {
        violations.push_back("peering `" + l.link_id + "`: endpoint `" +
                             l.node_a + "` is not in domain " +
                             std::to_string(da.asn));
      }
      if (t.has_router(l.node_b) && t.router(l.node_b).domain != db) {
        violations.push_back("peering `" + l.link_id + "`: endpoint `" +
                             l.node_b + "` is not in domain " +
                             std::to_string(db.asn));
      }
      t.links_.emplace(l.link_id, std::move(l));
    }
  }

  std::sort(t.domains_.begin(), t.domains_.end());
  t.build_indexes();
  auto structural = t.validate();
  violations.insert(violations.end(), structural.begin(), structural.end());
  if (!violations.empty()) {
    std::string msg = "topology validation failed:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw Error(Errc::validation, msg, violations);
  }
  return t;
}

void Topology::build_indexes() {
  adjacency_.clear();
  for (const auto& [id, l] : links_) {
    adjacency_[l.node_a].push_back(id);
    adjacency_[l.node_b].push_back(id);
  }
  for (auto& [node, ids] : adjacency_) std::sort(ids.begin(), ids.end());
}

std::vector<std::string> Topology::validate() const {
  std::vector<std::string> out;
  if (domains_.empty()) {
    out.push_back("no domains");
    return out;
  }

  // node SID uniqueness per domain, naming every clashing router.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::string>>
      sid_owners;  // (asn, sid) -> router ids
  for (const auto& [id, r] : routers_) {
    if (!has_domain(r.domain)) {
      out.push_back("router `" + id + "` references unknown domain " +
                    std::to_string(r.domain.asn));
      continue;
    }
    sid_owners[{r.domain.asn, r.node_sid}].push_back(id);
  }
  for (const auto& [key, owners] : sid_owners) {
    if (owners.size() > 1) {
      std::string names;
      for (const auto& o : owners) {
        if (!names.empty()) names += ", ";
        names += "`" + o + "`";
      }
      out.push_back("duplicate node_sid " + std::to_string(key.second) +
                    " in domain " + std::to_string(key.first) +
                    " on routers " + names);
    }
  }

  // Link endpoint and scope checks; adjacency SID uniqueness. A crossing's
  // adjacency SID lives in both endpoint domains' SID spaces, since either
  // side may reference it in a segment list.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::string>>
      adj_owners;
  for (const auto& [id, l] : links_) {
    bool ok = true;
    for (const std::string* ep : {&l.node_a, &l.node_b}) {
      if (!has_router(*ep)) {
        out.push_back("link `" + id + "` references unknown router `" + *ep +
                      "`");
        ok = false;
      }
    }
    if (!ok) continue;
    if (l.adjacency_sid == 0) {
      out.push_back("link `" + id + "` has non-positive adjacency sid");
      continue;
    }
    DomainId da = router(l.node_a).domain;
    DomainId db = router(l.node_b).domain;
    if (l.scope == LinkScope::intra_domain && da != db) {
      out.push_back("link `" + id + "` is declared intra-domain but spans " +
                    std::to_string(da.asn) + " and " + std::to_string(db.asn));
    }
    if (l.scope == LinkScope::inter_domain && da == db) {
      out.push_back("peering `" + id + "` has both endpoints in domain " +
                    std::to_string(da.asn));
    }
    adj_owners[{da.asn, l.adjacency_sid}].push_back(id);
    if (db != da) adj_owners[{db.asn, l.adjacency_sid}].push_back(id);
  }
  for (const auto& [key, owners] : adj_owners) {
    if (owners.size() > 1) {
      std::string names;
      for (const auto& o : owners) {
        if (!names.empty()) names += ", ";
        names += "`" + o + "`";
      }
      out.push_back("duplicate adjacency_sid " + std::to_string(key.second) +
                    " in domain " + std::to_string(key.first) + " on links " +
                    names);
    }
    if (sid_owners.contains(key)) {
      out.push_back("adjacency_sid " + std::to_string(key.second) +
                    " collides with node_sid of router `" +
                    sid_owners.at(key).front() + "` in domain " +
                    std::to_string(key.first));
    }
  }

  // Intra-domain connectivity and border presence.
  for (DomainId d : domains_) {
    std::vector<const RouterNode*> members = routers_in_domain(d);
    if (members.empty()) continue;
    std::set<std::string> seen{members.front()->node_id};
    std::deque<std::string> frontier{members.front()->node_id};
    while (!frontier.empty()) {
      std::string cur = frontier.front();
      frontier.pop_front();
      auto it = adjacency_.find(cur);
      if (it == adjacency_.end()) continue;
      for (const auto& lid : it->second) {
        const Link& l = links_.at(lid);
        if (l.scope != LinkScope::intra_domain) continue;
        if (!has_router(l.node_a) || !has_router(l.node_b)) continue;
        if (router(l.node_a).domain != d) continue;
        const std::string& next = other_end(l, cur);
        if (seen.insert(next).second) frontier.push_back(next);
      }
    }
    if (seen.size() != members.size()) {
      out.push_back("domain " + std::to_string(d.asn) +
                    " intra-domain graph is not connected");
    }

    bool has_crossing = false;
    bool has_border = false;
    for (const RouterNode* r : members) {
      if (r->role == RouterRole::border) has_border = true;
      auto it = adjacency_.find(r->node_id);
      if (it == adjacency_.end()) continue;
      for (const auto& lid : it->second) {
        if (links_.at(lid).scope == LinkScope::inter_domain) {
          has_crossing = true;
        }
      }
    }
    if (has_crossing && !has_border) {
      out.push_back("domain " + std::to_string(d.asn) +
                    " has inter-domain links but no border router");
    }
  }
  return out;
}

bool Topology::has_domain(DomainId d) const {
  return std::binary_search(domains_.begin(), domains_.end(), d);
}

bool Topology::has_router(const std::string& node_id) const {
  return routers_.contains(node_id);
}

bool Topology::has_link(const std::string& link_id) const {
  return links_.contains(link_id);
}

const RouterNode& Topology::router(const std::string& node_id) const {
  auto it = routers_.find(node_id);
  if (it == routers_.end()) {
    throw Error(Errc::unknown_entity, "unknown router `" + node_id + "`");
  }
  return it->second;
}

const Link& Topology::link(const std::string& link_id) const {
  auto it = links_.find(link_id);
  if (it == links_.end()) {
    throw Error(Errc::unknown_entity, "unknown link `" + link_id + "`");
  }
  return it->second;
}

std::vector<const RouterNode*> Topology::routers_in_domain(DomainId d) const {
  std::vector<const RouterNode*> out;
  for (const auto& [id, r] : routers_) {
    if (r.domain == d) out.push_back(&r);
  }
  return out;
}

std::vector<const Link*> Topology::links_in_domain(DomainId d) const {
  std::vector<const Link*> out;
  for (const auto& [id, l] : links_) {
    if (l.scope == LinkScope::intra_domain &&
        router(l.node_a).domain == d) {
      out.push_back(&l);
    }
  }
  return out;
}

std::vector<const Link*> Topology::crossings_between(DomainId a,
                                                     DomainId b) const {
  std::vector<const Link*> out;
  for (const auto& [id, l] : links_) {
    if (l.scope != LinkScope::inter_domain) continue;
    DomainId da = router(l.node_a).domain;
    DomainId db = router(l.node_b).domain;
    if ((da == a && db == b) || (da == b && db == a)) out.push_back(&l);
  }
  return out;
}

std::vector<DomainId> Topology::neighbor_domains(DomainId d) const {
  std::set<DomainId> out;
  for (const auto& [id, l] : links_) {
    if (l.scope != LinkScope::inter_domain) continue;
    DomainId da = router(l.node_a).domain;
    DomainId db = router(l.node_b).domain;
    if (da == d) out.insert(db);
    if (db == d) out.insert(da);
  }
  return {out.begin(), out.end()};
}

std::vector<const Link*> Topology::links_at(const std::string& node_id) const {
  std::vector<const Link*> out;
  auto it = adjacency_.find(node_id);
  if (it == adjacency_.end()) return out;
  for (const auto& lid : it->second) out.push_back(&links_.at(lid));
  return out;
}

std::optional<DomainId> Topology::link_domain(
    const std::string& link_id) const {
  const Link& l = link(link_id);
  if (l.scope == LinkScope::inter_domain) return std::nullopt;
  return router(l.node_a).domain;
}

const std::string& Topology::other_end(const Link& l,
                                       const std::string& node_id) const {
  if (l.node_a == node_id) return l.node_b;
  if (l.node_b == node_id) return l.node_a;
  throw Error(Errc::internal,
              "node `" + node_id + "` is not an endpoint of `" + l.link_id +
                  "`");
}

Kbps Topology::residual_kbps(const std::string& link_id) const {
  const Link& l = link(link_id);
  return l.capacity_kbps - l.reserved_kbps;
}

void Topology::reserve(const std::string& link_id, Kbps amount_kbps) {
  auto it = links_.find(link_id);
  if (it == links_.end()) {
    throw Error(Errc::unknown_entity, "unknown link `" + link_id + "`");
  }
  Link& l = it->second;
  if (amount_kbps <= 0) {
    throw Error(Errc::parse, "reserve amount must be positive");
  }
  if (l.reserved_kbps + amount_kbps > l.capacity_kbps) {
    throw Error(Errc::insufficient_capacity,
                "insufficient capacity on link `" + link_id + "`: residual " +
                    format_mbps(l.capacity_kbps - l.reserved_kbps) +
                    " Mbps, requested " + format_mbps(amount_kbps) + " Mbps");
  }
  l.reserved_kbps += amount_kbps;
}

void Topology::release(const std::string& link_id, Kbps amount_kbps) {
  auto it = links_.find(link_id);
  if (it == links_.end()) {
    throw Error(Errc::unknown_entity, "unknown link `" + link_id + "`");
  }
  Link& l = it->second;
  if (amount_kbps < 0 || amount_kbps > l.reserved_kbps) {
    throw Error(Errc::over_release,
                "over-release on link `" + link_id + "`: reserved " +
                    format_mbps(l.reserved_kbps) + " Mbps, releasing " +
                    format_mbps(amount_kbps) + " Mbps");
  }
  l.reserved_kbps -= amount_kbps;
}

nlohmann::json Topology::to_snapshot() const {
  nlohmann::json doc;
  doc["domains"] = nlohmann::json::array();
  for (DomainId d : domains_) {
    nlohmann::json dj;
    dj["asn"] = d.asn;
    dj["routers"] = nlohmann::json::array();
    for (const RouterNode* r : routers_in_domain(d)) {
      dj["routers"].push_back({{"id", r->node_id},
                               {"sid", r->node_sid},
                               {"role", role_name(r->role)}});
    }
    dj["links"] = nlohmann::json::array();
    doc["domains"].push_back(std::move(dj));
  }
  doc["links"] = nlohmann::json::array();
  for (const auto& [id, l] : links_) {
    nlohmann::json lj;
    lj["id"] = l.link_id;
    lj["a"] = l.node_a;
    lj["b"] = l.node_b;
    lj["capacity_kbps"] = l.capacity_kbps;
    lj["latency_us"] = l.latency_us;
    lj["adj_sid"] = l.adjacency_sid;
    lj["scope"] =
        l.scope == LinkScope::intra_domain ? "intra_domain" : "inter_domain";
    lj["reserved_kbps"] = l.reserved_kbps;
    doc["links"].push_back(std::move(lj));
  }
  return doc;
}

Topology Topology::from_snapshot(const nlohmann::json& doc) {
  Topology t;
  for (const auto& dj : require_array(doc, "domains")) {
    DomainId d{require_uint(dj, "asn")};
    t.domains_.push_back(d);
    for (const auto& rj : require_array(dj, "routers")) {
      RouterNode r;
      r.node_id = require_string(rj, "id");
      r.domain = d;
      r.node_sid = require_uint(rj, "sid");
      r.role = parse_role(require_string(rj, "role"));
      t.routers_.emplace(r.node_id, std::move(r));
    }
  }
  for (const auto& lj : require_array(doc, "links")) {
    Link l;
    l.link_id = require_string(lj, "id");
    l.node_a = require_string(lj, "a");
    l.node_b = require_string(lj, "b");
    l.capacity_kbps = jsonutil::require_int64(lj, "capacity_kbps");
    l.latency_us = jsonutil::require_int64(lj, "latency_us");
    l.adjacency_sid = require_uint(lj, "adj_sid");
    l.scope = require_string(lj, "scope") == "intra_domain"
                  ? LinkScope::intra_domain
                  : LinkScope::inter_domain;
    l.reserved_kbps = jsonutil::require_int64(lj, "reserved_kbps");
    t.links_.emplace(l.link_id, std::move(l));
  }
  std::sort(t.domains_.begin(), t.domains_.end());
  t.build_indexes();
  auto violations = t.validate();
  if (!violations.empty()) {
    std::string msg = "snapshot topology invalid:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw Error(Errc::snapshot_format, msg, violations);
  }
  return t;
}

bool Topology::operator==(const Topology& other) const {
  auto link_eq = [](const Link& a, const Link& b) {
    return a.link_id == b.link_id && a.node_a == b.node_a &&
           a.node_b == b.node_b && a.capacity_kbps == b.capacity_kbps &&
           a.latency_us == b.latency_us &&
           a.adjacency_sid == b.adjacency_sid && a.scope == b.scope &&
           a.reserved_kbps == b.reserved_kbps;
  };
  auto router_eq = [](const RouterNode& a, const RouterNode& b) {
    return a.node_id == b.node_id && a.domain == b.domain &&
           a.node_sid == b.node_sid && a.role == b.role;
  };
  if (domains_ != other.domains_) return false;
  if (routers_.size() != other.routers_.size()) return false;
  if (links_.size() != other.links_.size()) return false;
  for (const auto& [id, r] : routers_) {
    auto it = other.routers_.find(id);
    if (it == other.routers_.end() || !router_eq(r, it->second)) return false;
  }
  for (const auto& [id, l] : links_) {
    auto it = other.links_.find(id);
    if (it == other.links_.end() || !link_eq(l, it->second)) return false;
  }
  return true;
}

}  // namespace nasor
