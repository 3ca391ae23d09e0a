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

#include "nasor/slicing.hpp"

#include <algorithm>
#include <limits>

#include "nasor/errors.hpp"
#include "nasor/json_util.hpp"

namespace nasor {

std::string SliceId::str() const {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i > 0) out += '.';
    out += std::to_string(path[i]);
  }
  return out;
}

SliceId SliceId::parse(std::string_view text) {
  SliceId id;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t dot = text.find('.', pos);
    std::string_view part =
        text.substr(pos, dot == std::string_view::npos ? dot : dot - pos);
    if (part.empty()) {
      throw Error(Errc::parse, "malformed slice id `" + std::string(text) + "`");
    }
    std::uint64_t value = 0;
    for (char c : part) {
      if (c < '0' || c > '9') {
        throw Error(Errc::parse,
                    "malformed slice id `" + std::string(text) + "`");
      }
      value = value * 10 + static_cast<std::uint64_t>(c - '0');
      if (value > 0xffffffffULL) {
        throw Error(Errc::parse, "slice id component out of range");
      }
    }
    if (value == 0) {
      throw Error(Errc::parse, "slice id components must be positive");
    }
    id.path.push_back(static_cast<std::uint32_t>(value));
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  if (id.path.empty()) {
    throw Error(Errc::parse, "empty slice id");
  }
  return id;
}

SliceId SliceId::parent() const {
  if (is_root()) {
    throw Error(Errc::internal, "root slice has no parent");
  }
  SliceId p{path};
  p.path.pop_back();
  return p;
}

Kbps Slice::headroom_kbps() const {
  Kbps held = 0;
  for (const auto& [txid, amount] : pending_child_holds) held += amount;
  return allocated_kbps - child_committed_kbps - held;
}

nlohmann::json SliceSpec::to_json() const {
  nlohmann::json j;
  j["src_node"] = src_node;
  j["dst_node"] = dst_node;
  j["bandwidth_mbps"] = kbps_to_mbps(bandwidth_kbps);
  j["latency_bound_ms"] = micros_to_ms(latency_bound_us);
  j["owner"] = owner;
  return j;
}

SliceSpec SliceSpec::from_json(const nlohmann::json& j) {
  SliceSpec spec;
  spec.src_node = jsonutil::require_string(j, "src_node");
  spec.dst_node = jsonutil::require_string(j, "dst_node");
  spec.bandwidth_kbps = mbps_to_kbps(jsonutil::require_number(j, "bandwidth_mbps"));
  spec.latency_bound_us =
      ms_to_micros(jsonutil::require_number(j, "latency_bound_ms"));
  spec.owner = jsonutil::require_string(j, "owner");
  if (spec.bandwidth_kbps <= 0) {
    throw Error(Errc::parse, "field `bandwidth_mbps` must be positive");
  }
  if (spec.latency_bound_us <= 0) {
    throw Error(Errc::parse, "field `latency_bound_ms` must be positive");
  }
  return spec;
}

const char* slice_state_name(SliceState s) {
  switch (s) {
    case SliceState::Pending: return "Pending";
    case SliceState::Reserved: return "Reserved";
    case SliceState::Active: return "Active";
    case SliceState::Deleting: return "Deleting";
    case SliceState::Failed: return "Failed";
  }
  return "?";
}

SliceState slice_state_from_name(const std::string& name) {
  if (name == "Pending") return SliceState::Pending;
  if (name == "Reserved") return SliceState::Reserved;
  if (name == "Active") return SliceState::Active;
  if (name == "Deleting") return SliceState::Deleting;
  if (name == "Failed") return SliceState::Failed;
  throw Error(Errc::parse, "unknown slice state `" + name + "`");
}

bool slice_transition_allowed(SliceState from, SliceState to) {
  if (to == SliceState::Failed) return from != SliceState::Failed;
  switch (from) {
    case SliceState::Pending: return to == SliceState::Reserved;
    case SliceState::Reserved: return to == SliceState::Active;
    case SliceState::Active: return to == SliceState::Deleting;
    default: return false;
  }
}

namespace {

void apply_transition(Slice& s, SliceState to) {
  if (!slice_transition_allowed(s.state, to)) {
    throw Error(Errc::state_machine,
                std::string("illegal slice transition ") +
                    slice_state_name(s.state) + " -> " + slice_state_name(to) +
                    " on `" + s.id.str() + "`");
  }
  s.state = to;
}

}  // namespace

std::optional<RoutePlan> extract_subpath(const Topology& t,
                                         const RoutePlan& parent_plan,
                                         const std::string& src_node,
                                         const std::string& dst_node) {
  std::vector<std::string> nodes = parent_plan.node_sequence();
  auto src_it = std::find(nodes.begin(), nodes.end(), src_node);
  auto dst_it = std::find(nodes.begin(), nodes.end(), dst_node);
  if (src_it == nodes.end() || dst_it == nodes.end() || dst_it < src_it) {
    return std::nullopt;
  }
  std::size_t i = static_cast<std::size_t>(src_it - nodes.begin());
  std::size_t j = static_cast<std::size_t>(dst_it - nodes.begin());

  RoutePlan sub;
  sub.src_node = src_node;
  sub.dst_node = dst_node;
  sub.hops.assign(parent_plan.hops.begin() + static_cast<std::ptrdiff_t>(i),
                  parent_plan.hops.begin() + static_cast<std::ptrdiff_t>(j));
  for (std::size_t k = i; k <= j; ++k) {
    DomainId d = t.router(nodes[k]).domain;
    if (sub.as_path.domains.empty() || sub.as_path.domains.back() != d) {
      sub.as_path.domains.push_back(d);
    }
  }
  auto [latency, bottleneck] = route_metrics(t, sub);
  sub.total_latency_us = latency;
  sub.bottleneck_kbps = bottleneck;
  return sub;
}

AdmissionDecision SliceTree::admit_root(const Topology& t,
                                        const SliceSpec& spec) const {
  RoutePlan plan;
  try {
    plan = assemble_route_plan(t, spec.src_node, spec.dst_node);
  } catch (const Error& e) {
    if (e.code() == Errc::no_path) {
      return {false, "no path", {}};
    }
    throw;
  }
  if (plan.total_latency_us > spec.latency_bound_us) {
    return {false, "latency", {}};
  }
  for (const auto& h : plan.hops) {
    if (t.residual_kbps(h.link_id) < spec.bandwidth_kbps) {
      return {false, "bandwidth", {}};
    }
  }
  return {true, "", std::move(plan)};
}

AdmissionDecision SliceTree::admit_child(const Topology& t,
                                         const SliceId& parent_id,
                                         const SliceSpec& spec,
                                         int depth_cap) const {
  const Slice& parent = at(parent_id);
  if (static_cast<int>(parent_id.depth()) + 1 > depth_cap) {
    return {false, "depth", {}};
  }
  // (a) the child path must be the parent plan's contiguous sub-path.
  std::optional<RoutePlan> sub =
      extract_subpath(t, parent.plan, spec.src_node, spec.dst_node);
  if (!sub) {
    return {false, "off-path", {}};
  }
  // (b) parent headroom covers the request.
  if (parent.headroom_kbps() < spec.bandwidth_kbps) {
    return {false, "parent capacity", {}};
  }
  // (c) the sub-path satisfies the child's latency bound.
  if (sub->total_latency_us > spec.latency_bound_us) {
    return {false, "latency", {}};
  }
  return {true, "", std::move(*sub)};
}

Slice& SliceTree::insert_reserved(const SliceId& id, const SliceSpec& spec,
                                  const RoutePlan& plan,
                                  std::optional<SliceId> parent) {
  Slice s;
  s.id = id;
  s.spec = spec;
  s.plan = plan;
  s.parent = parent;
  s.allocated_kbps = spec.bandwidth_kbps;
  apply_transition(s, SliceState::Reserved);
  auto [it, inserted] = slices_.emplace(id, std::move(s));
  if (!inserted) {
    throw Error(Errc::duplicate, "slice `" + id.str() + "` already exists");
  }
  if (parent) at_mut(*parent).children.push_back(id);
  return it->second;
}

Slice& SliceTree::allocate_root(Topology& t, const SliceSpec& spec,
                                const AdmissionDecision& decision) {
  if (!decision.accepted) {
    throw Error(Errc::rejected, decision.reason);
  }
  // Freshness: residuals may have moved since admission.
  for (const auto& h : decision.plan.hops) {
    if (t.residual_kbps(h.link_id) < spec.bandwidth_kbps) {
      throw Error(Errc::stale_decision, "stale decision",
                  {"link `" + h.link_id + "` residual below request"});
    }
  }
  for (const auto& h : decision.plan.hops) {
    t.reserve(h.link_id, spec.bandwidth_kbps);
  }
  std::uint32_t ordinal = reserve_root_ordinal();
  SliceId id{{ordinal}};
  reserved_root_ordinals_.erase(ordinal);
  return insert_reserved(id, spec, decision.plan, std::nullopt);
}

Slice& SliceTree::allocate_child(const SliceId& parent_id,
                                 const SliceSpec& spec,
                                 const AdmissionDecision& decision) {
  if (!decision.accepted) {
    throw Error(Errc::rejected, decision.reason);
  }
  Slice& parent = at_mut(parent_id);
  if (parent.headroom_kbps() < spec.bandwidth_kbps) {
    throw Error(Errc::stale_decision, "stale decision",
                {"parent headroom below request"});
  }
  parent.child_committed_kbps += spec.bandwidth_kbps;
  SliceId id = next_child_id(parent_id);
  return insert_reserved(id, spec, decision.plan, parent_id);
}

Slice& SliceTree::create_subslice(const Topology& t, const SliceId& parent_id,
                                  const SliceSpec& spec, int depth_cap) {
  const Slice* parent = find(parent_id);
  if (parent == nullptr) {
    throw Error(Errc::unknown_entity,
                "unknown parent slice `" + parent_id.str() + "`");
  }
  if (parent->state != SliceState::Active) {
    throw Error(Errc::state_machine,
                "parent slice `" + parent_id.str() + "` is not Active");
  }
  AdmissionDecision decision = admit_child(t, parent_id, spec, depth_cap);
  if (!decision.accepted) {
    throw Error(Errc::rejected, decision.reason);
  }
  return allocate_child(parent_id, spec, decision);
}

std::uint32_t SliceTree::reserve_root_ordinal() {
  std::uint32_t candidate = 1;
  while (slices_.contains(SliceId{{candidate}}) ||
         reserved_root_ordinals_.contains(candidate)) {
    ++candidate;
  }
  reserved_root_ordinals_.insert(candidate);
  return candidate;
}

void SliceTree::unreserve_root_ordinal(std::uint32_t ordinal) {
  reserved_root_ordinals_.erase(ordinal);
}

SliceId SliceTree::next_child_id(const SliceId& parent_id) {
  Slice& parent = at_mut(parent_id);
  SliceId id{parent_id.path};
  id.path.push_back(parent.next_child_ordinal++);
  return id;
}

bool SliceTree::hold_child_headroom(const SliceId& parent_id,
                                    const std::string& txid, Kbps amount) {
  Slice& parent = at_mut(parent_id);
  if (parent.headroom_kbps() < amount) return false;
  parent.pending_child_holds[txid] = amount;
  return true;
}

void SliceTree::drop_child_hold(const SliceId& parent_id,
                                const std::string& txid) {
  if (Slice* parent = const_cast<Slice*>(find(parent_id))) {
    parent->pending_child_holds.erase(txid);
  }
}

Slice& SliceTree::attach_root(const SliceId& id, const SliceSpec& spec,
                              const RoutePlan& plan) {
  reserved_root_ordinals_.erase(id.path.front());
  return insert_reserved(id, spec, plan, std::nullopt);
}

Slice& SliceTree::attach_child(const SliceId& id, const SliceSpec& spec,
                               const RoutePlan& plan, const std::string& txid) {
  Slice& parent = at_mut(id.parent());
  auto hold = parent.pending_child_holds.find(txid);
  if (hold == parent.pending_child_holds.end() ||
      hold->second != spec.bandwidth_kbps) {
    throw Error(Errc::protocol,
                "missing headroom hold for transaction `" + txid + "`");
  }
  parent.pending_child_holds.erase(hold);
  parent.child_committed_kbps += spec.bandwidth_kbps;
  return insert_reserved(id, spec, plan, id.parent());
}

void SliceTree::activate(const SliceId& id) {
  apply_transition(at_mut(id), SliceState::Active);
}

void SliceTree::resize(Topology& t, const SliceId& id,
                       Kbps new_bandwidth_kbps) {
  Slice& s = at_mut(id);
  if (s.state != SliceState::Active) {
    throw Error(Errc::state_machine,
                "slice `" + id.str() + "` is not Active");
  }
  if (new_bandwidth_kbps <= 0) {
    throw Error(Errc::rejected, "bandwidth must be positive");
  }
  Kbps delta = new_bandwidth_kbps - s.allocated_kbps;
  if (delta == 0) return;

  if (delta > 0) {
    if (s.parent) {
      Slice& parent = at_mut(*s.parent);
      if (parent.headroom_kbps() < delta) {
        throw Error(Errc::rejected, "parent capacity",
                    {"parent `" + s.parent->str() + "` headroom " +
                     format_mbps(parent.headroom_kbps()) + " Mbps, need " +
                     format_mbps(delta) + " Mbps"});
      }
      parent.child_committed_kbps += delta;
    } else {
      for (const auto& h : s.plan.hops) {
        if (t.residual_kbps(h.link_id) < delta) {
          throw Error(Errc::rejected, "bandwidth",
                      {"link `" + h.link_id + "` residual " +
                       format_mbps(t.residual_kbps(h.link_id)) +
                       " Mbps, need " + format_mbps(delta) + " Mbps"});
        }
      }
      for (const auto& h : s.plan.hops) t.reserve(h.link_id, delta);
    }
  } else {
    Kbps shrink = -delta;
    Kbps held = 0;
    for (const auto& [txid, amount] : s.pending_child_holds) held += amount;
    Kbps floor = s.child_committed_kbps + held;
    if (new_bandwidth_kbps < floor) {
      throw Error(Errc::rejected, "children hold " + format_mbps(floor));
    }
    if (s.parent) {
      at_mut(*s.parent).child_committed_kbps -= shrink;
    } else {
      for (const auto& h : s.plan.hops) t.release(h.link_id, shrink);
    }
  }
  s.allocated_kbps = new_bandwidth_kbps;
}

SliceTree::ReleaseResult SliceTree::release(Topology& t, const SliceId& id) {
  ReleaseResult result;
  if (find(id) == nullptr) return result;
  result.existed = true;

  // Refuse while any in-flight transaction still holds headroom in the
  // subtree; dropping it here would strand the transaction's ledger.
  std::vector<SliceId> order;
  std::vector<SliceId> stack{id};
  while (!stack.empty()) {
    SliceId cur = stack.back();
    stack.pop_back();
    const Slice& s = at(cur);
    if (!s.pending_child_holds.empty()) {
      throw Error(Errc::rejected, "slice has in-flight transactions",
                  {"slice `" + cur.str() + "` holds " +
                   std::to_string(s.pending_child_holds.size()) +
                   " transaction hold(s)"});
    }
    order.push_back(cur);
    for (const SliceId& c : s.children) stack.push_back(c);
  }
  // Descendants first.
  std::reverse(order.begin(), order.end());

  for (const SliceId& cur : order) {
    Slice& s = at_mut(cur);
    if (s.state == SliceState::Active) {
      apply_transition(s, SliceState::Deleting);
    }
    if (s.parent) {
      Slice& parent = at_mut(*s.parent);
      parent.child_committed_kbps -= s.allocated_kbps;
      parent.children.erase(
          std::find(parent.children.begin(), parent.children.end(), cur));
    } else {
      for (const auto& h : s.plan.hops) t.release(h.link_id, s.allocated_kbps);
    }
    slices_.erase(cur);
    result.released.push_back(cur);
  }
  return result;
}

void SliceTree::set_latency_bound(const SliceId& id, Micros bound_us) {
  at_mut(id).spec.latency_bound_us = bound_us;
}

const Slice* SliceTree::find(const SliceId& id) const {
  auto it = slices_.find(id);
  return it == slices_.end() ? nullptr : &it->second;
}

const Slice& SliceTree::at(const SliceId& id) const {
  const Slice* s = find(id);
  if (s == nullptr) {
    throw Error(Errc::unknown_entity, "unknown slice `" + id.str() + "`");
  }
  return *s;
}

Slice& SliceTree::at_mut(const SliceId& id) {
  auto it = slices_.find(id);
  if (it == slices_.end()) {
    throw Error(Errc::unknown_entity, "unknown slice `" + id.str() + "`");
  }
  return it->second;
}

std::vector<SliceId> SliceTree::roots() const {
  std::vector<SliceId> out;
  for (const auto& [id, s] : slices_) {
    if (id.is_root()) out.push_back(id);
  }
  return out;
}

std::vector<std::string> SliceTree::check_invariants(
    const Topology& t,
    const std::map<std::string, Kbps>& external_holds_kbps) const {
  std::vector<std::string> out;

  for (const auto& [id, s] : slices_) {
    Kbps children_sum = 0;
    for (const SliceId& c : s.children) {
      const Slice* child = find(c);
      if (child == nullptr) {
        out.push_back("slice `" + id.str() + "` lists missing child `" +
                      c.str() + "`");
        continue;
      }
      children_sum += child->allocated_kbps;
      if (!child->parent || *child->parent != id) {
        out.push_back("slice `" + c.str() + "` parent pointer mismatch");
      }
    }
    if (children_sum != s.child_committed_kbps) {
      out.push_back("slice `" + id.str() + "`: children allocate " +
                    format_mbps(children_sum) + " Mbps but ledger commits " +
                    format_mbps(s.child_committed_kbps) + " Mbps");
    }
    Kbps held = 0;
    for (const auto& [txid, amount] : s.pending_child_holds) held += amount;
    if (s.child_committed_kbps + held > s.allocated_kbps) {
      out.push_back("slice `" + id.str() + "`: committed+held " +
                    format_mbps(s.child_committed_kbps + held) +
                    " Mbps exceeds allocation " +
                    format_mbps(s.allocated_kbps) + " Mbps");
    }
    if (!id.is_root()) {
      if (find(id.parent()) == nullptr) {
        out.push_back("slice `" + id.str() + "` has no parent in the forest");
        continue;
      }
      const Slice& parent = at(id.parent());
      // Sub-path containment: the child's hops must be a contiguous run
      // of the parent's hops.
      if (!s.plan.hops.empty()) {
        auto found =
            std::search(parent.plan.hops.begin(), parent.plan.hops.end(),
                        s.plan.hops.begin(), s.plan.hops.end());
        if (found == parent.plan.hops.end()) {
          out.push_back("slice `" + id.str() +
                        "` hops are not a contiguous sub-path of `" +
                        id.parent().str() + "`");
        }
      } else {
        auto nodes = parent.plan.node_sequence();
        if (std::find(nodes.begin(), nodes.end(), s.plan.src_node) ==
            nodes.end()) {
          out.push_back("slice `" + id.str() + "` endpoint off parent path");
        }
      }
    }
  }

  // Link conservation: reserved equals root allocations plus external
  // transaction holds, exactly.
  std::map<std::string, Kbps> expected = external_holds_kbps;
  for (const auto& [id, s] : slices_) {
    if (!id.is_root()) continue;
    for (const auto& h : s.plan.hops) expected[h.link_id] += s.allocated_kbps;
  }
  for (DomainId d : t.domains()) {
    for (const Link* l : t.links_in_domain(d)) {
      Kbps want = expected.contains(l->link_id) ? expected[l->link_id] : 0;
      if (l->reserved_kbps != want) {
        out.push_back("link `" + l->link_id + "` reserved " +
                      format_mbps(l->reserved_kbps) + " Mbps, ledger implies " +
                      format_mbps(want) + " Mbps");
      }
    }
  }
  for (DomainId a : t.domains()) {
    for (DomainId b : t.neighbor_domains(a)) {
      if (b.asn < a.asn) continue;
      for (const Link* l : t.crossings_between(a, b)) {
        Kbps want = expected.contains(l->link_id) ? expected[l->link_id] : 0;
        if (l->reserved_kbps != want) {
          out.push_back("link `" + l->link_id + "` reserved " +
                        format_mbps(l->reserved_kbps) +
                        " Mbps, ledger implies " + format_mbps(want) + " Mbps");
        }
      }
    }
  }
  return out;
}

nlohmann::json SliceTree::to_snapshot() const {
  nlohmann::json j;
  j["slices"] = nlohmann::json::object();
  for (const auto& [id, s] : slices_) {
    nlohmann::json sj;
    sj["spec"] = s.spec.to_json();
    sj["plan"] = s.plan.to_json();
    sj["state"] = slice_state_name(s.state);
    sj["parent"] = s.parent ? nlohmann::json(s.parent->str())
                            : nlohmann::json(nullptr);
    sj["children"] = nlohmann::json::array();
    for (const SliceId& c : s.children) sj["children"].push_back(c.str());
    sj["allocated_kbps"] = s.allocated_kbps;
    sj["child_committed_kbps"] = s.child_committed_kbps;
    sj["next_child_ordinal"] = s.next_child_ordinal;
    sj["pending_child_holds"] = nlohmann::json::object();
    for (const auto& [txid, amount] : s.pending_child_holds) {
      sj["pending_child_holds"][txid] = amount;
    }
    j["slices"][id.str()] = std::move(sj);
  }
  j["reserved_root_ordinals"] = nlohmann::json::array();
  for (std::uint32_t o : reserved_root_ordinals_) {
    j["reserved_root_ordinals"].push_back(o);
  }
  return j;
}

SliceTree SliceTree::from_snapshot(const nlohmann::json& j) {
  SliceTree tree;
  const auto& slices = jsonutil::require(j, "slices");
  for (auto it = slices.begin(); it != slices.end(); ++it) {
    Slice s;
    s.id = SliceId::parse(it.key());
    const auto& sj = it.value();
    s.spec = SliceSpec::from_json(jsonutil::require(sj, "spec"));
    s.plan = RoutePlan::from_json(jsonutil::require(sj, "plan"));
    s.state = slice_state_from_name(jsonutil::require_string(sj, "state"));
    const auto& pj = jsonutil::require(sj, "parent");
    if (!pj.is_null()) s.parent = SliceId::parse(pj.get<std::string>());
    for (const auto& cj : jsonutil::require_array(sj, "children")) {
      s.children.push_back(SliceId::parse(cj.get<std::string>()));
    }
    s.allocated_kbps = jsonutil::require_int64(sj, "allocated_kbps");
    s.child_committed_kbps =
        jsonutil::require_int64(sj, "child_committed_kbps");
    s.next_child_ordinal = jsonutil::require_uint(sj, "next_child_ordinal");
    const auto& holds = jsonutil::require(sj, "pending_child_holds");
    for (auto hit = holds.begin(); hit != holds.end(); ++hit) {
      s.pending_child_holds[hit.key()] = hit.value().get<Kbps>();
    }
    tree.slices_.emplace(s.id, std::move(s));
  }
  for (const auto& oj : jsonutil::require_array(j, "reserved_root_ordinals")) {
    tree.reserved_root_ordinals_.insert(oj.get<std::uint32_t>());
  }
  return tree;
}

void SftStore::install(const std::string& router, SftEntry entry) {
  auto& table = tables_[router];
  SliceId id = entry.slice_id;
  auto [it, inserted] = table.emplace(id, std::move(entry));
  if (!inserted) {
    throw Error(Errc::duplicate, "router `" + router +
                                     "` already has an entry for slice `" +
                                     id.str() + "`");
  }
}

bool SftStore::remove(const std::string& router, const SliceId& id) {
  auto it = tables_.find(router);
  if (it == tables_.end()) return false;
  bool erased = it->second.erase(id) > 0;
  if (it->second.empty()) tables_.erase(it);
  return erased;
}

void SftStore::remove_slice(const SliceId& id) {
  for (auto it = tables_.begin(); it != tables_.end();) {
    it->second.erase(id);
    if (it->second.empty()) {
      it = tables_.erase(it);
    } else {
      ++it;
    }
  }
}

const SftEntry* SftStore::find(const std::string& router,
                               const SliceId& id) const {
  auto it = tables_.find(router);
  if (it == tables_.end()) return nullptr;
  auto eit = it->second.find(id);
  return eit == it->second.end() ? nullptr : &eit->second;
}

std::map<std::string, SftEntry> SftStore::entries_for_slice(
    const SliceId& id) const {
  std::map<std::string, SftEntry> out;
  for (const auto& [router, table] : tables_) {
    auto it = table.find(id);
    if (it != table.end()) out.emplace(router, it->second);
  }
  return out;
}

nlohmann::json SftStore::to_snapshot() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [router, table] : tables_) {
    nlohmann::json tj = nlohmann::json::object();
    for (const auto& [id, entry] : table) {
      nlohmann::json ej;
      ej["remaining_segments"] = segment_lists_to_json(entry.remaining_segments);
      ej["out_link"] = entry.out_link ? nlohmann::json(*entry.out_link)
                                      : nlohmann::json(nullptr);
      tj[id.str()] = std::move(ej);
    }
    j[router] = std::move(tj);
  }
  return j;
}

SftStore SftStore::from_snapshot(const nlohmann::json& j) {
  SftStore sfts;
  for (auto it = j.begin(); it != j.end(); ++it) {
    for (auto eit = it.value().begin(); eit != it.value().end(); ++eit) {
      SftEntry entry;
      entry.slice_id = SliceId::parse(eit.key());
      entry.remaining_segments = segment_lists_from_json(
          jsonutil::require(eit.value(), "remaining_segments"));
      const auto& ol = jsonutil::require(eit.value(), "out_link");
      if (!ol.is_null()) entry.out_link = ol.get<std::string>();
      sfts.tables_[it.key()].emplace(entry.slice_id, std::move(entry));
    }
  }
  return sfts;
}

void program_sft(const Topology& t, SftStore& sfts, const SliceId& id,
                 const RoutePlan& plan, std::optional<DomainId> only_domain) {
  // Flattened SID stream aligned with the traversal: every traversed
  // router's node SID, with crossing adjacency SIDs in between. The
  // suffix after router k, regrouped per domain, is its entry payload.
  struct Tagged {
    DomainId domain;
    std::uint32_t sid;
  };
  std::vector<Tagged> stream;
  std::vector<std::size_t> router_pos;  // index into `stream` per router

  const RouterNode& src = t.router(plan.src_node);
  stream.push_back({src.domain, src.node_sid});
  router_pos.push_back(0);
  for (const auto& hop : plan.hops) {
    const Link& l = t.link(hop.link_id);
    const RouterNode& to = t.router(hop.to_node);
    if (l.scope == LinkScope::inter_domain) {
      stream.push_back({t.router(hop.from_node).domain, l.adjacency_sid});
    }
    stream.push_back({to.domain, to.node_sid});
    router_pos.push_back(stream.size() - 1);
  }

  std::vector<std::string> nodes = plan.node_sequence();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const RouterNode& r = t.router(nodes[k]);
    if (only_domain && r.domain != *only_domain) continue;

    SftEntry entry;
    entry.slice_id = id;
    for (std::size_t p = router_pos[k] + 1; p < stream.size(); ++p) {
      if (entry.remaining_segments.empty() ||
          entry.remaining_segments.back().domain != stream[p].domain) {
        entry.remaining_segments.push_back({stream[p].domain, {}});
      }
      entry.remaining_segments.back().sids.push_back(stream[p].sid);
    }
    if (k < plan.hops.size()) {
      entry.out_link = plan.hops[k].link_id;
    }
    sfts.install(nodes[k], std::move(entry));
  }
}

void program_sft_and_activate(const Topology& t, SftStore& sfts,
                              SliceTree& tree, const SliceId& id) {
  const Slice& s = tree.at(id);
  if (s.state != SliceState::Reserved) {
    throw Error(Errc::state_machine,
                "slice `" + id.str() + "` is not Reserved");
  }
  program_sft(t, sfts, id, s.plan);
  tree.activate(id);
}

std::vector<HopRecord> walk_sft(const Topology& t, const SftStore& sfts,
                                const SliceTree& tree, const SliceId& id) {
  const Slice& s = tree.at(id);
  std::vector<HopRecord> hops;
  std::string current = s.plan.src_node;
  while (true) {
    const SftEntry* entry = sfts.find(current, id);
    if (entry == nullptr) {
      throw Error(Errc::missing_entry, "no entry for slice `" + id.str() +
                                           "` at router `" + current + "`",
                  {current});
    }
    if (!entry->out_link) break;
    const Link& l = t.link(*entry->out_link);
    const std::string& next = t.other_end(l, current);
    std::optional<DomainId> domain;
    if (l.scope == LinkScope::intra_domain) {
      domain = t.router(l.node_a).domain;
    }
    hops.push_back({l.link_id, current, next, domain});
    current = next;
    if (hops.size() > t.router_count()) {
      throw Error(Errc::loop_detected,
                  "forwarding walk for slice `" + id.str() +
                      "` exceeded the router count");
    }
  }
  return hops;
}

}  // namespace nasor
