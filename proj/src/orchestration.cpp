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

#include "nasor/orchestration.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "nasor/errors.hpp"
#include "nasor/json_util.hpp"
#include "nasor/stable_hash.hpp"

namespace nasor {

namespace {

std::string tx_key(const std::string& txid, const std::string& suffix) {
  return "tx/" + txid + "/" + suffix;
}

std::string domain_key(const std::string& txid, std::uint32_t asn) {
  return tx_key(txid, "domain/" + std::to_string(asn));
}

// Best (max-min residual) bottleneck from src to every router of the
// domain over intra-domain links.
std::map<std::string, Kbps> widest_from(const Topology& t, DomainId domain,
                                        const std::string& src) {
  std::map<std::string, Kbps> best;
  best[src] = std::numeric_limits<Kbps>::max();
  std::priority_queue<std::pair<Kbps, std::string>> queue;
  queue.push({best[src], src});
  while (!queue.empty()) {
    auto [width, here] = queue.top();
    queue.pop();
    if (width < best[here]) continue;
    for (const Link* l : t.links_at(here)) {
      if (l->scope != LinkScope::intra_domain) continue;
      if (t.router(l->node_a).domain != domain) continue;
      const std::string& peer = t.other_end(*l, here);
      Kbps through = std::min(width, l->capacity_kbps - l->reserved_kbps);
      auto it = best.find(peer);
      if (it == best.end() || through > it->second) {
        best[peer] = through;
        queue.push({through, peer});
      }
    }
  }
  return best;
}

std::map<std::string, Micros> fastest_from(const Topology& t, DomainId domain,
                                           const std::string& src) {
  std::map<std::string, Micros> best;
  best[src] = 0;
  using Item = std::pair<Micros, std::string>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> queue;
  queue.push({0, src});
  while (!queue.empty()) {
    auto [lat, here] = queue.top();
    queue.pop();
    if (lat > best[here]) continue;
    for (const Link* l : t.links_at(here)) {
      if (l->scope != LinkScope::intra_domain) continue;
      if (t.router(l->node_a).domain != domain) continue;
      const std::string& peer = t.other_end(*l, here);
      Micros through = lat + l->latency_us;
      auto it = best.find(peer);
      if (it == best.end() || through < it->second) {
        best[peer] = through;
        queue.push({through, peer});
      }
    }
  }
  return best;
}

}  // namespace

CapacityAdvertisement compute_capacity(const Topology& t, DomainId domain) {
  CapacityAdvertisement ad;
  ad.domain = domain;
  std::vector<const RouterNode*> borders;
  for (const RouterNode* r : t.routers_in_domain(domain)) {
    if (r->role == RouterRole::border) borders.push_back(r);
  }
  ad.border_count = static_cast<std::uint32_t>(borders.size());
  if (borders.size() < 2) return ad;

  Kbps best_width = 0;
  Micros best_latency = std::numeric_limits<Micros>::max();
  for (std::size_t i = 0; i < borders.size(); ++i) {
    auto widths = widest_from(t, domain, borders[i]->node_id);
    auto latencies = fastest_from(t, domain, borders[i]->node_id);
    for (std::size_t j = i + 1; j < borders.size(); ++j) {
      auto w = widths.find(borders[j]->node_id);
      if (w != widths.end()) best_width = std::max(best_width, w->second);
      auto l = latencies.find(borders[j]->node_id);
      if (l != latencies.end()) best_latency = std::min(best_latency, l->second);
    }
  }
  ad.max_transit_bandwidth_kbps = best_width;
  ad.min_transit_latency_us =
      best_latency == std::numeric_limits<Micros>::max() ? 0 : best_latency;
  return ad;
}

nlohmann::json CapacityAdvertisement::to_json() const {
  nlohmann::json j;
  j["domain"] = domain.asn;
  j["max_transit_bandwidth_mbps"] = kbps_to_mbps(max_transit_bandwidth_kbps);
  j["min_transit_latency_ms"] = micros_to_ms(min_transit_latency_us);
  j["border_count"] = border_count;
  j["epoch"] = epoch;
  return j;
}

CapacityAdvertisement CapacityAdvertisement::from_json(
    const nlohmann::json& j) {
  CapacityAdvertisement ad;
  ad.domain = DomainId{jsonutil::require_uint(j, "domain")};
  ad.max_transit_bandwidth_kbps =
      mbps_to_kbps(jsonutil::require_number(j, "max_transit_bandwidth_mbps"));
  ad.min_transit_latency_us =
      ms_to_micros(jsonutil::require_number(j, "min_transit_latency_ms"));
  ad.border_count = jsonutil::require_uint(j, "border_count");
  ad.epoch = jsonutil::require_int64(j, "epoch");
  return ad;
}

const char* tx_phase_name(TxPhase p) {
  switch (p) {
    case TxPhase::Reserving: return "Reserving";
    case TxPhase::Committing: return "Committing";
    case TxPhase::Aborting: return "Aborting";
    case TxPhase::Done: return "Done";
    case TxPhase::Failed: return "Failed";
  }
  return "?";
}

TxPhase tx_phase_from_name(const std::string& s) {
  if (s == "Reserving") return TxPhase::Reserving;
  if (s == "Committing") return TxPhase::Committing;
  if (s == "Aborting") return TxPhase::Aborting;
  if (s == "Done") return TxPhase::Done;
  if (s == "Failed") return TxPhase::Failed;
  throw Error(Errc::parse, "unknown transaction phase `" + s + "`");
}

const char* domain_tx_state_name(DomainTxState s) {
  switch (s) {
    case DomainTxState::Waiting: return "Waiting";
    case DomainTxState::Reserved: return "Reserved";
    case DomainTxState::Committed: return "Committed";
    case DomainTxState::Aborted: return "Aborted";
    case DomainTxState::Refused: return "Refused";
  }
  return "?";
}

DomainTxState domain_tx_state_from_name(const std::string& s) {
  if (s == "Waiting") return DomainTxState::Waiting;
  if (s == "Reserved") return DomainTxState::Reserved;
  if (s == "Committed") return DomainTxState::Committed;
  if (s == "Aborted") return DomainTxState::Aborted;
  if (s == "Refused") return DomainTxState::Refused;
  throw Error(Errc::parse, "unknown per-domain state `" + s + "`");
}

bool tx_phase_terminal(TxPhase p) {
  return p == TxPhase::Done || p == TxPhase::Failed;
}

std::string submit_deployment(KvRepository& repo, std::uint64_t ordinal,
                              const SliceSpec& spec,
                              const std::optional<SliceId>& parent,
                              std::int64_t submit_tick) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "tx-%06llu",
                static_cast<unsigned long long>(ordinal));
  std::string txid(buf);
  nlohmann::json req;
  req["spec"] = spec.to_json();
  req["parent_slice"] =
      parent ? nlohmann::json(parent->str()) : nlohmann::json(nullptr);
  req["submit_tick"] = submit_tick;
  if (!repo.put_cas(tx_key(txid, "request"), req.dump(), 0)) {
    throw Error(Errc::duplicate, "transaction `" + txid + "` already exists");
  }
  return txid;
}

DeploymentTransaction transaction_status(const KvRepository& repo,
                                         const std::string& txid) {
  auto req_rec = repo.get(tx_key(txid, "request"));
  if (!req_rec) {
    throw Error(Errc::unknown_entity, "unknown transaction `" + txid + "`");
  }
  DeploymentTransaction tx;
  tx.txid = txid;
  nlohmann::json req = jsonutil::parse_text(req_rec->value);
  tx.spec = SliceSpec::from_json(jsonutil::require(req, "spec"));
  const auto& pj = jsonutil::require(req, "parent_slice");
  if (!pj.is_null()) tx.parent = SliceId::parse(pj.get<std::string>());
  tx.submit_tick = jsonutil::require_int64(req, "submit_tick");

  if (auto phase_rec = repo.get(tx_key(txid, "phase"))) {
    nlohmann::json doc = jsonutil::parse_text(phase_rec->value);
    tx.phase = tx_phase_from_name(jsonutil::require_string(doc, "phase"));
    const auto& plan = jsonutil::require(doc, "plan");
    if (!plan.is_null()) tx.plan = RoutePlan::from_json(plan);
    const auto& sid = jsonutil::require(doc, "slice_id");
    if (!sid.is_null()) tx.slice_id = SliceId::parse(sid.get<std::string>());
    const auto& reason = jsonutil::require(doc, "reason");
    if (!reason.is_null()) tx.reason = reason.get<std::string>();
    tx.deadline_tick = jsonutil::require_int64(doc, "deadline_tick");
  }

  for (const KvRecord& rec : repo.scan(tx_key(txid, "domain/"))) {
    std::uint32_t asn = static_cast<std::uint32_t>(
        std::stoul(rec.key.substr(rec.key.rfind('/') + 1)));
    nlohmann::json doc = jsonutil::parse_text(rec.value);
    tx.per_domain[asn] =
        domain_tx_state_from_name(jsonutil::require_string(doc, "state"));
  }
  return tx;
}

nlohmann::json EngineConfig::to_json() const {
  return {{"seed", seed},
          {"depth_cap", depth_cap},
          {"deadline_ticks", deadline_ticks}};
}

EngineConfig EngineConfig::from_json(const nlohmann::json& j) {
  EngineConfig cfg;
  cfg.seed = jsonutil::require_int64(j, "seed");
  cfg.depth_cap = static_cast<int>(jsonutil::require_int64(j, "depth_cap"));
  cfg.deadline_ticks = jsonutil::require_int64(j, "deadline_ticks");
  return cfg;
}

bool FaultState::draw_refusal(std::uint64_t seed, const std::string& txid,
                              std::uint32_t asn) {
  auto it = forced_refusals.find(asn);
  if (it != forced_refusals.end() && it->second > 0) {
    --it->second;
    return true;
  }
  if (refusal_probability <= 0.0) return false;
  std::uint64_t h = mix(seed, fnv1a64("refuse") ^ fnv1a64(txid) ^
                                  splitmix64(asn));
  return hash_to_unit(h) < refusal_probability;
}

bool FaultState::draw_stall(std::uint64_t seed, const std::string& txid,
                            std::uint32_t asn) const {
  if (stall_probability <= 0.0) return false;
  std::uint64_t h =
      mix(seed, fnv1a64("stall") ^ fnv1a64(txid) ^ splitmix64(asn));
  return hash_to_unit(h) < stall_probability;
}

nlohmann::json FaultState::to_json() const {
  nlohmann::json j;
  j["refusal_probability"] = refusal_probability;
  j["stall_probability"] = stall_probability;
  j["forced_refusals"] = nlohmann::json::object();
  for (const auto& [asn, count] : forced_refusals) {
    j["forced_refusals"][std::to_string(asn)] = count;
  }
  return j;
}

FaultState FaultState::from_json(const nlohmann::json& j) {
  FaultState f;
  f.refusal_probability = jsonutil::require_number(j, "refusal_probability");
  f.stall_probability = jsonutil::require_number(j, "stall_probability");
  const auto& forced = jsonutil::require(j, "forced_refusals");
  for (auto it = forced.begin(); it != forced.end(); ++it) {
    f.forced_refusals[static_cast<std::uint32_t>(std::stoul(it.key()))] =
        it.value().get<int>();
  }
  return f;
}

DomainOrchestrator::DomainOrchestrator(DomainId domain, KvRepository& repo)
    : domain_(domain), tx_watch_(repo.subscribe("tx/")) {}

CapacityAdvertisement DomainOrchestrator::publish_capacity(KvRepository& repo,
                                                           const Topology& t) {
  CapacityAdvertisement ad = compute_capacity(t, domain_);
  ad.epoch = ++capacity_epoch_;
  repo.put_retry("capacity/" + std::to_string(domain_.asn),
                 ad.to_json().dump());
  capacity_dirty_ = false;
  return ad;
}

std::vector<std::string> DomainOrchestrator::owned_links(
    const EngineCtx& ctx, const RoutePlan& plan) const {
  std::vector<std::string> out;
  for (const auto& h : plan.hops) {
    if (h.domain) {
      if (*h.domain == domain_) out.push_back(h.link_id);
    } else if (ctx.topology.router(h.from_node).domain == domain_) {
      out.push_back(h.link_id);
    }
  }
  return out;
}

bool DomainOrchestrator::is_coordinator(const EngineCtx& ctx,
                                        const TxContext& tx) const {
  if (ctx.topology.has_router(tx.spec.src_node)) {
    return ctx.topology.router(tx.spec.src_node).domain == domain_;
  }
  // Requests naming an unknown source node are adopted by the lowest-ASN
  // orchestrator so they fail cleanly instead of hanging.
  return !ctx.topology.domains().empty() &&
         ctx.topology.domains().front() == domain_;
}

void DomainOrchestrator::write_my_state(EngineCtx& ctx,
                                        const std::string& txid,
                                        DomainTxState state,
                                        const std::string& reason) {
  nlohmann::json doc;
  doc["state"] = domain_tx_state_name(state);
  doc["reason"] = reason.empty() ? nlohmann::json(nullptr)
                                 : nlohmann::json(reason);
  ctx.repo.put_retry(domain_key(txid, domain_.asn), doc.dump());
  if (ctx.emit) {
    ctx.emit("orch/" + std::to_string(domain_.asn), "domain_state",
             {{"txid", txid},
              {"state", domain_tx_state_name(state)},
              {"reason", doc["reason"]}});
  }
}

void DomainOrchestrator::write_phase(EngineCtx& ctx, const std::string& txid,
                                     nlohmann::json phase_doc) {
  std::string phase = phase_doc.at("phase").get<std::string>();
  ctx.repo.put_retry(tx_key(txid, "phase"), phase_doc.dump());
  if (ctx.emit) {
    ctx.emit("orch/" + std::to_string(domain_.asn), "tx_phase",
             {{"txid", txid},
              {"phase", phase},
              {"reason", phase_doc.at("reason")}});
  }
}

void DomainOrchestrator::coordinator_begin(
    EngineCtx& ctx, const TxContext& tx,
    std::vector<OrchestratorAction>& actions) {
  auto fail = [&](const std::string& reason) {
    nlohmann::json doc;
    doc["phase"] = "Failed";
    doc["reason"] = reason;
    doc["plan"] = nullptr;
    doc["slice_id"] = nullptr;
    doc["domains"] = nlohmann::json::array();
    doc["deadline_tick"] = tx.submit_tick + ctx.config.deadline_ticks;
    write_phase(ctx, tx.txid, std::move(doc));
    actions.push_back({tx.txid, "begin_failed", reason});
  };

  for (const std::string* node : {&tx.spec.src_node, &tx.spec.dst_node}) {
    if (!ctx.topology.has_router(*node)) {
      fail("unknown node `" + *node + "`");
      return;
    }
  }

  RoutePlan plan;
  SliceId id;
  if (tx.parent) {
    const Slice* parent = ctx.tree.find(*tx.parent);
    if (parent == nullptr) {
      fail("unknown parent");
      return;
    }
    if (parent->state != SliceState::Active) {
      fail("parent not active");
      return;
    }
    AdmissionDecision decision =
        ctx.tree.admit_child(ctx.topology, *tx.parent, tx.spec,
                             ctx.config.depth_cap);
    if (!decision.accepted) {
      fail(decision.reason);
      return;
    }
    if (!ctx.tree.hold_child_headroom(*tx.parent, tx.txid,
                                      tx.spec.bandwidth_kbps)) {
      fail("parent capacity");
      return;
    }
    id = ctx.tree.next_child_id(*tx.parent);
    plan = std::move(decision.plan);
  } else {
    AdmissionDecision decision = ctx.tree.admit_root(ctx.topology, tx.spec);
    if (!decision.accepted) {
      fail(decision.reason);
      return;
    }
    id = SliceId{{ctx.tree.reserve_root_ordinal()}};
    plan = std::move(decision.plan);
  }

  nlohmann::json doc;
  doc["phase"] = "Reserving";
  doc["reason"] = nullptr;
  doc["plan"] = plan.to_json();
  doc["slice_id"] = id.str();
  doc["domains"] = nlohmann::json::array();
  for (DomainId d : plan.as_path.domains) doc["domains"].push_back(d.asn);
  doc["deadline_tick"] = tx.submit_tick + ctx.config.deadline_ticks;

  for (DomainId d : plan.as_path.domains) {
    nlohmann::json state;
    state["state"] = "Waiting";
    state["reason"] = nullptr;
    ctx.repo.put_retry(domain_key(tx.txid, d.asn), state.dump());
  }
  write_phase(ctx, tx.txid, std::move(doc));
  actions.push_back({tx.txid, "coordinator_begin", id.str()});
}

DomainTxState DomainOrchestrator::reserve_local(EngineCtx& ctx,
                                                const TxContext& tx,
                                                const RoutePlan& plan,
                                                std::string& reason) {
  if (ctx.faults.draw_refusal(ctx.config.seed ^ ctx.draw_seed, tx.txid,
                              domain_.asn)) {
    reason = "injected";
    return DomainTxState::Refused;
  }
  if (tx.parent) {
    // Children consume parent headroom, which the coordinator holds under
    // this txid; nothing to debit locally.
    const Slice* parent = ctx.tree.find(*tx.parent);
    if (parent == nullptr ||
        !parent->pending_child_holds.contains(tx.txid)) {
      reason = "parent capacity";
      return DomainTxState::Refused;
    }
    return DomainTxState::Reserved;
  }

  std::vector<std::string> links = owned_links(ctx, plan);
  for (const auto& link : links) {
    if (ctx.topology.residual_kbps(link) < tx.spec.bandwidth_kbps) {
      reason = "link `" + link + "`";
      return DomainTxState::Refused;
    }
  }
  if (!links.empty()) {
    Hold hold;
    for (const auto& link : links) {
      ctx.topology.reserve(link, tx.spec.bandwidth_kbps);
      hold.links.emplace_back(link, tx.spec.bandwidth_kbps);
    }
    holds_.emplace(tx.txid, std::move(hold));
    capacity_dirty_ = true;
  }
  return DomainTxState::Reserved;
}

void DomainOrchestrator::commit_local(EngineCtx& ctx, const TxContext& tx,
                                      const SliceId& id,
                                      const RoutePlan& plan) {
  auto it = holds_.find(tx.txid);
  if (!tx.parent && !owned_links(ctx, plan).empty() && it == holds_.end()) {
    throw Error(Errc::protocol, "commit without a matching reservation hold");
  }
  program_sft(ctx.topology, ctx.sfts, id, plan, domain_);
  if (it != holds_.end()) it->second.committed = true;
}

void DomainOrchestrator::abort_local(EngineCtx& ctx, const TxContext& tx,
                                     const SliceId& id) {
  auto it = holds_.find(tx.txid);
  if (it != holds_.end()) {
    for (const auto& [link, amount] : it->second.links) {
      ctx.topology.release(link, amount);
    }
    holds_.erase(it);
    capacity_dirty_ = true;
  }
  if (!id.path.empty()) {
    for (const RouterNode* r : ctx.topology.routers_in_domain(domain_)) {
      ctx.sfts.remove(r->node_id, id);
    }
  }
}

bool DomainOrchestrator::local_action(
    EngineCtx& ctx, const TxContext& tx, const nlohmann::json& phase_doc,
    std::vector<OrchestratorAction>& actions) {
  TxPhase phase =
      tx_phase_from_name(phase_doc.at("phase").get<std::string>());
  bool involved = false;
  for (const auto& d : phase_doc.at("domains")) {
    if (d.get<std::uint32_t>() == domain_.asn) involved = true;
  }
  if (!involved) return false;

  auto my_rec = ctx.repo.get(domain_key(tx.txid, domain_.asn));
  if (!my_rec) return false;
  DomainTxState mine = domain_tx_state_from_name(
      jsonutil::parse_text(my_rec->value).at("state").get<std::string>());

  SliceId id;
  if (!phase_doc.at("slice_id").is_null()) {
    id = SliceId::parse(phase_doc.at("slice_id").get<std::string>());
  }

  switch (phase) {
    case TxPhase::Reserving: {
      if (mine != DomainTxState::Waiting) return false;
      if (ctx.faults.draw_stall(ctx.config.seed ^ ctx.draw_seed, tx.txid,
                                domain_.asn)) {
        return false;
      }
      RoutePlan plan = RoutePlan::from_json(phase_doc.at("plan"));
      std::string reason;
      DomainTxState state = reserve_local(ctx, tx, plan, reason);
      write_my_state(ctx, tx.txid, state, reason);
      actions.push_back({tx.txid, "reserve_local",
                         domain_tx_state_name(state)});
      return true;
    }
    case TxPhase::Committing: {
      if (mine != DomainTxState::Reserved) return false;
      RoutePlan plan = RoutePlan::from_json(phase_doc.at("plan"));
      commit_local(ctx, tx, id, plan);
      write_my_state(ctx, tx.txid, DomainTxState::Committed, "");
      actions.push_back({tx.txid, "commit_local", ""});
      return true;
    }
    case TxPhase::Aborting: {
      if (mine == DomainTxState::Waiting) {
        write_my_state(ctx, tx.txid, DomainTxState::Aborted, "");
        actions.push_back({tx.txid, "abort_local", "nothing held"});
        return true;
      }
      if (mine == DomainTxState::Reserved ||
          mine == DomainTxState::Committed) {
        abort_local(ctx, tx, id);
        write_my_state(ctx, tx.txid, DomainTxState::Aborted, "");
        actions.push_back({tx.txid, "abort_local", ""});
        return true;
      }
      return false;
    }
    default:
      return false;
  }
}

bool DomainOrchestrator::coordinator_action(
    EngineCtx& ctx, const TxContext& tx, const nlohmann::json& phase_doc,
    std::vector<OrchestratorAction>& actions) {
  TxPhase phase =
      tx_phase_from_name(phase_doc.at("phase").get<std::string>());
  if (tx_phase_terminal(phase)) return false;

  std::map<std::uint32_t, DomainTxState> states;
  std::map<std::uint32_t, std::string> reasons;
  for (const auto& d : phase_doc.at("domains")) {
    std::uint32_t asn = d.get<std::uint32_t>();
    auto rec = ctx.repo.get(domain_key(tx.txid, asn));
    if (!rec) return false;
    nlohmann::json doc = jsonutil::parse_text(rec->value);
    states[asn] = domain_tx_state_from_name(doc.at("state").get<std::string>());
    if (!doc.at("reason").is_null()) {
      reasons[asn] = doc.at("reason").get<std::string>();
    }
  }

  auto advance = [&](TxPhase next, const std::string& reason) {
    nlohmann::json doc = phase_doc;
    doc["phase"] = tx_phase_name(next);
    doc["reason"] =
        reason.empty() ? nlohmann::json(nullptr) : nlohmann::json(reason);
    write_phase(ctx, tx.txid, std::move(doc));
    actions.push_back({tx.txid, "phase", tx_phase_name(next)});
  };

  switch (phase) {
    case TxPhase::Reserving: {
      bool all_reserved = !states.empty();
      std::string refusal;
      for (const auto& [asn, state] : states) {
        if (state != DomainTxState::Reserved) all_reserved = false;
        if ((state == DomainTxState::Refused ||
             state == DomainTxState::Aborted) &&
            refusal.empty()) {
          refusal = "refused by " + std::to_string(asn);
          if (reasons.contains(asn)) refusal += ": " + reasons.at(asn);
        }
      }
      if (all_reserved) {
        advance(TxPhase::Committing, "");
        return true;
      }
      if (!refusal.empty()) {
        advance(TxPhase::Aborting, refusal);
        return true;
      }
      if (ctx.tick >= phase_doc.at("deadline_tick").get<std::int64_t>()) {
        advance(TxPhase::Aborting, "deadline");
        return true;
      }
      return false;
    }
    case TxPhase::Committing: {
      for (const auto& [asn, state] : states) {
        if (state != DomainTxState::Committed) return false;
      }
      // All committed: attach the slice, convert holds to allocations,
      // and hand it a nano.
      SliceId id = SliceId::parse(phase_doc.at("slice_id").get<std::string>());
      RoutePlan plan = RoutePlan::from_json(phase_doc.at("plan"));
      if (tx.parent) {
        ctx.tree.attach_child(id, tx.spec, plan, tx.txid);
      } else {
        ctx.tree.attach_root(id, tx.spec, plan);
      }
      ctx.tree.activate(id);
      ctx.nanos.instantiate(id, tx.spec.owner);
      if (ctx.emit) {
        ctx.emit("orch/" + std::to_string(domain_.asn), "slice_active",
                 {{"txid", tx.txid}, {"slice", id.str()}});
      }
      advance(TxPhase::Done, "");
      return true;
    }
    case TxPhase::Aborting: {
      for (const auto& [asn, state] : states) {
        if (state != DomainTxState::Aborted &&
            state != DomainTxState::Refused) {
          return false;
        }
      }
      std::string reason = phase_doc.at("reason").is_null()
                               ? std::string("aborted")
                               : phase_doc.at("reason").get<std::string>();
      if (!phase_doc.at("slice_id").is_null()) {
        SliceId id =
            SliceId::parse(phase_doc.at("slice_id").get<std::string>());
        if (tx.parent) {
          ctx.tree.drop_child_hold(*tx.parent, tx.txid);
        } else {
          ctx.tree.unreserve_root_ordinal(id.path.front());
        }
      }
      advance(TxPhase::Failed, reason);
      return true;
    }
    default:
      return false;
  }
}

bool DomainOrchestrator::process_tx(EngineCtx& ctx, const TxContext& tx,
                                    std::vector<OrchestratorAction>& actions) {
  auto phase_rec = ctx.repo.get(tx_key(tx.txid, "phase"));
  if (!phase_rec) {
    if (is_coordinator(ctx, tx)) {
      coordinator_begin(ctx, tx, actions);
      phase_rec = ctx.repo.get(tx_key(tx.txid, "phase"));
    }
    if (!phase_rec) return false;
  }

  bool local_done = false;
  for (int guard = 0; guard < 8; ++guard) {
    nlohmann::json doc = jsonutil::parse_text(phase_rec->value);
    TxPhase phase = tx_phase_from_name(doc.at("phase").get<std::string>());
    if (tx_phase_terminal(phase)) {
      auto it = holds_.find(tx.txid);
      if (it != holds_.end()) {
        if (phase == TxPhase::Done) {
          // Ownership of the reservation moved to the tree slice.
          holds_.erase(it);
        } else {
          // Defensive: a Failed transaction must leave no residue.
          SliceId id;
          if (!doc.at("slice_id").is_null()) {
            id = SliceId::parse(doc.at("slice_id").get<std::string>());
          }
          abort_local(ctx, tx, id);
        }
      }
      settled_tx_.insert(tx.txid);
      return true;
    }

    bool progressed = false;
    if (!local_done && local_action(ctx, tx, doc, actions)) {
      local_done = true;
      progressed = true;
    }
    if (is_coordinator(ctx, tx) &&
        coordinator_action(ctx, tx, doc, actions)) {
      progressed = true;
    }
    if (!progressed) return false;
    phase_rec = ctx.repo.get(tx_key(tx.txid, "phase"));
  }
  return false;
}

std::vector<OrchestratorAction> DomainOrchestrator::step(EngineCtx& ctx) {
  std::vector<OrchestratorAction> actions;

  for (const WatchEvent& ev : ctx.repo.drain(tx_watch_)) {
    // "tx/<txid>/request" announces a new transaction.
    if (!ev.key.ends_with("/request")) continue;
    std::string rest = ev.key.substr(3);  // past "tx/"
    known_tx_.insert(rest.substr(0, rest.find('/')));
  }

  if (capacity_dirty_) {
    CapacityAdvertisement ad = publish_capacity(ctx.repo, ctx.topology);
    if (ctx.emit) {
      ctx.emit("orch/" + std::to_string(domain_.asn), "capacity_published",
               ad.to_json());
    }
    actions.push_back({"", "publish_capacity", std::to_string(ad.epoch)});
  }

  for (const std::string& txid : known_tx_) {
    if (settled_tx_.contains(txid)) continue;
    auto req_rec = ctx.repo.get(tx_key(txid, "request"));
    if (!req_rec) continue;
    nlohmann::json req = jsonutil::parse_text(req_rec->value);
    TxContext tx;
    tx.txid = txid;
    tx.spec = SliceSpec::from_json(req.at("spec"));
    if (!req.at("parent_slice").is_null()) {
      tx.parent = SliceId::parse(req.at("parent_slice").get<std::string>());
    }
    tx.submit_tick = req.at("submit_tick").get<std::int64_t>();
    process_tx(ctx, tx, actions);
  }
  return actions;
}

nlohmann::json DomainOrchestrator::to_snapshot() const {
  nlohmann::json j;
  j["asn"] = domain_.asn;
  j["tx_watch"] = tx_watch_;
  j["known_tx"] = nlohmann::json::array();
  for (const auto& t : known_tx_) j["known_tx"].push_back(t);
  j["settled_tx"] = nlohmann::json::array();
  for (const auto& t : settled_tx_) j["settled_tx"].push_back(t);
  j["holds"] = nlohmann::json::object();
  for (const auto& [txid, hold] : holds_) {
    nlohmann::json hj;
    hj["committed"] = hold.committed;
    hj["links"] = nlohmann::json::array();
    for (const auto& [link, amount] : hold.links) {
      hj["links"].push_back({{"link", link}, {"kbps", amount}});
    }
    j["holds"][txid] = std::move(hj);
  }
  j["capacity_epoch"] = capacity_epoch_;
  j["capacity_dirty"] = capacity_dirty_;
  return j;
}

void DomainOrchestrator::restore(const nlohmann::json& j) {
  tx_watch_ = jsonutil::require_uint(j, "tx_watch");
  known_tx_.clear();
  for (const auto& t : jsonutil::require_array(j, "known_tx")) {
    known_tx_.insert(t.get<std::string>());
  }
  settled_tx_.clear();
  for (const auto& t : jsonutil::require_array(j, "settled_tx")) {
    settled_tx_.insert(t.get<std::string>());
  }
  holds_.clear();
  const auto& holds = jsonutil::require(j, "holds");
  for (auto it = holds.begin(); it != holds.end(); ++it) {
    Hold hold;
    hold.committed = it.value().at("committed").get<bool>();
    for (const auto& lj : it.value().at("links")) {
      hold.links.emplace_back(lj.at("link").get<std::string>(),
                              lj.at("kbps").get<Kbps>());
    }
    holds_.emplace(it.key(), std::move(hold));
  }
  capacity_epoch_ = jsonutil::require_int64(j, "capacity_epoch");
  capacity_dirty_ = j.at("capacity_dirty").get<bool>();
}

}  // namespace nasor
