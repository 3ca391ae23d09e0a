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

#ifndef NASOR_TOPOLOGY_HPP_
#define NASOR_TOPOLOGY_HPP_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nasor/units.hpp"

namespace nasor {

struct DomainId {
  std::uint32_t asn = 0;
  auto operator<=>(const DomainId&) const = default;
};

enum class RouterRole { border, interior };

struct RouterNode {
  std::string node_id;
  DomainId domain;
  std::uint32_t node_sid = 0;
  RouterRole role = RouterRole::interior;
};

enum class LinkScope { intra_domain, inter_domain };

struct Link {
  std::string link_id;
  std::string node_a;
  std::string node_b;
  Kbps capacity_kbps = 0;
  Micros latency_us = 0;
  std::uint32_t adjacency_sid = 0;
  LinkScope scope = LinkScope::intra_domain;
  Kbps reserved_kbps = 0;
};

// Multi-AS substrate: domains, routers, links, and the per-link
// reservation ledger. Construction validates every structural invariant
// and reports all violations at once. Bandwidth mutations keep
// 0 <= reserved <= capacity at every point, exactly, in integer kbps.
class Topology {
 public:
  // Parses the topology document format: top-level `domains` (each with
  // `asn`, `routers`, `links`) and `peerings`. All reservations start at
  // zero. Throws Errc::parse on malformed input and Errc::validation
  // with the full violation list otherwise.
  static Topology from_json(const nlohmann::json& doc);
  static Topology from_string(std::string_view text);

  // Snapshot form: integer units plus current reservations.
  nlohmann::json to_snapshot() const;
  static Topology from_snapshot(const nlohmann::json& doc);

  const std::vector<DomainId>& domains() const { return domains_; }
  bool has_domain(DomainId d) const;
  bool has_router(const std::string& node_id) const;
  bool has_link(const std::string& link_id) const;
  const RouterNode& router(const std::string& node_id) const;
  const Link& link(const std::string& link_id) const;
  std::size_t router_count() const { return routers_.size(); }
  std::size_t link_count() const { return links_.size(); }

  std::vector<const RouterNode*> routers_in_domain(DomainId d) const;
  // Intra-domain links of one domain, sorted by link id.
  std::vector<const Link*> links_in_domain(DomainId d) const;
  // Inter-domain links with one endpoint in each domain, sorted by link id.
  std::vector<const Link*> crossings_between(DomainId a, DomainId b) const;
  // Domains reachable from `d` over at least one inter-domain link.
  std::vector<DomainId> neighbor_domains(DomainId d) const;
  // All links incident to a node, sorted by link id.
  std::vector<const Link*> links_at(const std::string& node_id) const;

  // Domain of an intra-domain link; nullopt for crossings.
  std::optional<DomainId> link_domain(const std::string& link_id) const;
  const std::string& other_end(const Link& l, const std::string& node_id) const;

  Kbps residual_kbps(const std::string& link_id) const;
  void reserve(const std::string& link_id, Kbps amount_kbps);
  void release(const std::string& link_id, Kbps amount_kbps);

  bool operator==(const Topology& other) const;

 private:
  void build_indexes();
  std::vector<std::string> validate() const;
  void finish_construction();

  std::vector<DomainId> domains_;                 // sorted by asn
  std::map<std::string, RouterNode> routers_;     // node_id ->
  std::map<std::string, Link> links_;             // link_id ->
  std::map<std::string, std::vector<std::string>> adjacency_;  // node -> links
};

}  // namespace nasor

#endif  // NASOR_TOPOLOGY_HPP_
