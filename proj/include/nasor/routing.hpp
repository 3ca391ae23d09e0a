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

#ifndef NASOR_ROUTING_HPP_
#define NASOR_ROUTING_HPP_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nasor/topology.hpp"
#include "nasor/units.hpp"

namespace nasor {

struct AsPath {
  std::vector<DomainId> domains;  // loop-free, source first
  bool operator==(const AsPath&) const = default;
};

// Ordered segment identifiers scoped to one domain. A crossing's
// adjacency SID is appended to the upstream domain's list.
struct SegmentList {
  DomainId domain;
  std::vector<std::uint32_t> sids;
  bool operator==(const SegmentList&) const = default;
};

struct HopRecord {
  std::string link_id;
  std::string from_node;
  std::string to_node;
  std::optional<DomainId> domain;  // nullopt marks an inter-domain crossing
  bool operator==(const HopRecord&) const = default;
};

// An end-to-end data plane for one slice. `bottleneck_kbps` is nullopt
// for an empty plan: an explicit "unconstrained" state, not a sentinel
// value.
struct RoutePlan {
  std::string src_node;
  std::string dst_node;
  AsPath as_path;
  std::vector<HopRecord> hops;
  Micros total_latency_us = 0;
  std::optional<Kbps> bottleneck_kbps;

  // src_node followed by every hop's to_node.
  std::vector<std::string> node_sequence() const;

  nlohmann::json to_json() const;
  static RoutePlan from_json(const nlohmann::json& j);
  bool operator==(const RoutePlan&) const = default;
};

// Minimal-length AS path. Ties: fewest domains, then lowest sum of
// inter-domain latencies (per adjacent pair, the cheapest crossing
// counts), then lexicographically smallest ASN sequence.
AsPath compute_as_path(const Topology& t, DomainId src, DomainId dst);

// Minimum-latency intra-domain path; ties by fewer hops, then smallest
// node-id sequence. Returns the ordered node list including endpoints.
std::vector<std::string> compute_intra_path(const Topology& t, DomainId domain,
                                            const std::string& ingress,
                                            const std::string& egress);

// Concatenates intra-domain legs and crossings along the computed AS
// path. Border selection is greedy per crossing: it minimizes
// (upstream intra-leg latency + crossing latency), ties broken by the
// border pair's node ids and then the crossing link id.
RoutePlan assemble_route_plan(const Topology& t, const std::string& src_node,
                              const std::string& dst_node);

// One SegmentList per traversed domain: node SIDs of the traversed
// routers in order, plus each crossing's adjacency SID appended to the
// upstream list.
std::vector<SegmentList> encode_segment_list(const Topology& t,
                                             const RoutePlan& plan);

// Inverse of encode_segment_list. Intra-domain node pairs resolve to the
// deterministic link choice used by plan assembly (lowest latency, then
// lowest link id); crossings resolve by adjacency SID.
std::vector<HopRecord> decode_segment_lists(
    const Topology& t, const std::vector<SegmentList>& lists);

// Recomputes (total latency, bottleneck residual) from current topology
// state.

std::pair<Micros, std::optional<Kbps>> route_metrics(const Topology& t,
                                                     const RoutePlan& plan);

// The deterministic intra-domain link between two adjacent routers:
// lowest latency, then lowest link id. Parallel links are permitted, so
// plan assembly and segment-list decoding share this chooser.
const Link* pick_intra_link(const Topology& t, DomainId domain,
                            const std::string& u, const std::string& v);

nlohmann::json segment_lists_to_json(const std::vector<SegmentList>& lists);
std::vector<SegmentList> segment_lists_from_json(const nlohmann::json& j);

}  // namespace nasor

#endif  // NASOR_ROUTING_HPP_
