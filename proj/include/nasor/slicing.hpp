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

#ifndef NASOR_SLICING_HPP_
#define NASOR_SLICING_HPP_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nasor/routing.hpp"
#include "nasor/topology.hpp"
#include "nasor/units.hpp"

namespace nasor {

// Hierarchical slice identifier, rendered dotted ("1", "1.2", "1.2.1").
// The parent id is the child id minus its last element, so parentage is
// verifiable from the id alone.
struct SliceId {
  std::vector<std::uint32_t> path;

  std::string str() const;
  static SliceId parse(std::string_view text);
  bool is_root() const { return path.size() == 1; }
  std::size_t depth() const { return path.size(); }
  SliceId parent() const;

  auto operator<=>(const SliceId&) const = default;
};

struct SliceSpec {
  std::string src_node;
  std::string dst_node;
  Kbps bandwidth_kbps = 0;
  Micros latency_bound_us = 0;
  std::string owner;

  nlohmann::json to_json() const;
  static SliceSpec from_json(const nlohmann::json& j);
  bool operator==(const SliceSpec&) const = default;
};

enum class SliceState { Pending, Reserved, Active, Deleting, Failed };

const char* slice_state_name(SliceState s);
SliceState slice_state_from_name(const std::string& name);

// Declared lifecycle edges: Pending->Reserved->Active->Deleting plus
// any-state->Failed.
bool slice_transition_allowed(SliceState from, SliceState to);

struct Slice {
  SliceId id;
  SliceSpec spec;
  RoutePlan plan;
  SliceState state = SliceState::Pending;
  std::optional<SliceId> parent;
  std::vector<SliceId> children;
  Kbps allocated_kbps = 0;
  Kbps child_committed_kbps = 0;

  // Child ordinals are a monotonic counter: released children never free
  // their ordinal.
  std::uint32_t next_child_ordinal = 1;

  // Headroom claimed by in-flight deployment transactions, keyed by
  // txid. Counts against headroom but not yet against child_committed.
  std::map<std::string, Kbps> pending_child_holds;

  Kbps headroom_kbps() const;
};

// Admission outcome. Rejection is a value, not an error; `reason` is a
// short machine-checkable string ("latency", "bandwidth", "off-path",
// "parent capacity", "depth", "no path").
struct AdmissionDecision {
  bool accepted = false;
  std::string reason;
  RoutePlan plan;
};

// The recursive slice forest with its resource ledgers. Children draw
// bandwidth from their parent's allocation only; root slices draw from
// substrate links. Mutations are single-writer (the engine's transaction
// executor).
class SliceTree {
 public:
  AdmissionDecision admit_root(const Topology& t, const SliceSpec& spec) const;
  AdmissionDecision admit_child(const Topology& t, const SliceId& parent_id,
                                const SliceSpec& spec, int depth_cap) const;

  // Direct pipeline: reserves substrate bandwidth (root) or parent
  // headroom (child) and inserts the slice in state Reserved. Throws
  // Errc::stale_decision if ledgers moved since admission.
  Slice& allocate_root(Topology& t, const SliceSpec& spec,
                       const AdmissionDecision& decision);
  Slice& allocate_child(const SliceId& parent_id, const SliceSpec& spec,
                        const AdmissionDecision& decision);
  // admit_child + allocate_child. Parent must be Active.
  Slice& create_subslice(const Topology& t, const SliceId& parent_id,
                         const SliceSpec& spec, int depth_cap);

  // Orchestrated pipeline. Link reservations are held by the domain
  // orchestrators, so attach_* record the allocation without touching
  // substrate links; attach_child converts the named headroom hold.
  std::uint32_t reserve_root_ordinal();
  void unreserve_root_ordinal(std::uint32_t ordinal);
  SliceId next_child_id(const SliceId& parent_id);
  bool hold_child_headroom(const SliceId& parent_id, const std::string& txid,
                           Kbps amount);
  void drop_child_hold(const SliceId& parent_id, const std::string& txid);
  Slice& attach_root(const SliceId& id, const SliceSpec& spec,
                     const RoutePlan& plan);
  Slice& attach_child(const SliceId& id, const SliceSpec& spec,
                      const RoutePlan& plan, const std::string& txid);

  void activate(const SliceId& id);  // Reserved -> Active

  // Grow requires residual (root) or parent headroom (child); shrink is
  // bounded below by the slice's own committed children.
  void resize(Topology& t, const SliceId& id, Kbps new_bandwidth_kbps);

  struct ReleaseResult {
    bool existed = false;
    std::vector<SliceId> released;  // depth-first order, descendants first
  };
  // Depth-first release. Refuses while any slice in the subtree carries
  // an in-flight transaction hold. Unknown ids are a no-op.
  ReleaseResult release(Topology& t, const SliceId& id);

  void set_latency_bound(const SliceId& id, Micros bound_us);

  const Slice* find(const SliceId& id) const;
  const Slice& at(const SliceId& id) const;
  const std::map<SliceId, Slice>& slices() const { return slices_; }
  std::vector<SliceId> roots() const;
  bool empty() const { return slices_.empty(); }

  // Forest ledger, sub-path containment, and link conservation checks.
  // `external_holds_kbps` carries per-link amounts held by in-flight
  // transactions.
  std::vector<std::string> check_invariants(
      const Topology& t,
      const std::map<std::string, Kbps>& external_holds_kbps) const;

  nlohmann::json to_snapshot() const;
  static SliceTree from_snapshot(const nlohmann::json& j);

 private:
  Slice& insert_reserved(const SliceId& id, const SliceSpec& spec,
                         const RoutePlan& plan,
                         std::optional<SliceId> parent);
  Slice& at_mut(const SliceId& id);

  std::map<SliceId, Slice> slices_;
  std::set<std::uint32_t> reserved_root_ordinals_;
};

// Contiguous sub-path of `parent_plan` between two on-path nodes, in
// path direction. nullopt when either endpoint is off the path or the
// direction is reversed.
std::optional<RoutePlan> extract_subpath(const Topology& t,
                                         const RoutePlan& parent_plan,
                                         const std::string& src_node,
                                         const std::string& dst_node);

struct SftEntry {
  SliceId slice_id;
  std::vector<SegmentList> remaining_segments;
  std::optional<std::string> out_link;  // nullopt marks the terminal router

  bool operator==(const SftEntry&) const = default;
};

// Per-router Slice Forwarding Tables, keyed by slice identifier.
class SftStore {
 public:
  void install(const std::string& router, SftEntry entry);
  bool remove(const std::string& router, const SliceId& id);
  void remove_slice(const SliceId& id);
  const SftEntry* find(const std::string& router, const SliceId& id) const;
  std::map<std::string, SftEntry> entries_for_slice(const SliceId& id) const;
  const std::map<std::string, std::map<SliceId, SftEntry>>& tables() const {
    return tables_;
  }
  bool empty() const { return tables_.empty(); }

  nlohmann::json to_snapshot() const;
  static SftStore from_snapshot(const nlohmann::json& j);

 private:
  std::map<std::string, std::map<SliceId, SftEntry>> tables_;
};

// Installs one entry per on-path router: the segment-list suffix from
// that router onward and the outgoing link of the next hop. The terminal
// router gets empty remaining segments and no out_link. `only_domain`
// restricts programming to one domain's routers.
void program_sft(const Topology& t, SftStore& sfts, const SliceId& id,
                 const RoutePlan& plan,
                 std::optional<DomainId> only_domain = std::nullopt);

// Spec pipeline step: program every on-path router, then move the slice
// Reserved -> Active.
void program_sft_and_activate(const Topology& t, SftStore& sfts,
                              SliceTree& tree, const SliceId& id);

// Reconstructs the hop list by following SFT entries from the slice's
// source router. Must equal the plan's hops for every Active slice.
std::vector<HopRecord> walk_sft(const Topology& t, const SftStore& sfts,
                                const SliceTree& tree, const SliceId& id);

}  // namespace nasor

#endif  // NASOR_SLICING_HPP_
