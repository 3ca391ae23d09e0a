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

#include "nasor/engine.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "nasor/errors.hpp"
#include "nasor/json_util.hpp"
#include "nasor/stable_hash.hpp"

namespace nasor {

namespace {
constexpr int kSnapshotFormatVersion = 1;
}

Engine::Engine(Topology topology, EngineConfig config)
    : topology_(std::move(topology)), config_(config) {
  for (DomainId d : topology_.domains()) {
    orchestrators_.push_back(std::make_unique<DomainOrchestrator>(d, repo_));
  }
  // Seed the repository with epoch-1 capacity advertisements so reads
  // work before any scheduler round runs.
  for (auto& orch : orchestrators_) {
    orch->publish_capacity(repo_, topology_);
  }
}

EngineCtx Engine::make_ctx() {
  return EngineCtx{
      topology_,
      repo_,
      tree_,
      sfts_,
      nanos_,
      config_,
      faults_,
      tick_,
      script_seed_,
      [this](std::string_view actor, std::string_view event,
             nlohmann::json payload) {
        emit(actor, event, std::move(payload));
      },
  };
}

void Engine::emit(std::string_view actor, std::string_view event,
                  nlohmann::json payload) {
  if (event_fn_) event_fn_(tick_, actor, event, std::move(payload));
}

std::string Engine::submit(const SliceSpec& spec,
                           const std::optional<SliceId>& parent) {
  if (spec.bandwidth_kbps <= 0) {
    throw Error(Errc::parse, "bandwidth must be positive");
  }
  if (spec.latency_bound_us <= 0) {
    throw Error(Errc::parse, "latency bound must be positive");
  }
  if (spec.src_node.empty() || spec.dst_node.empty()) {
    throw Error(Errc::parse, "src_node and dst_node are required");
  }
  std::string txid =
      submit_deployment(repo_, ++tx_counter_, spec, parent, tick_);
  live_tx_.insert(txid);
  nlohmann::json payload;
  payload["txid"] = txid;
  payload["spec"] = spec.to_json();
  payload["parent_slice"] =
      parent ? nlohmann::json(parent->str()) : nlohmann::json(nullptr);
  emit("engine", "tx_submitted", std::move(payload));
  return txid;
}

void Engine::run_round() {
  std::vector<std::size_t> order = keyed_permutation(
      orchestrators_.size(),
      mix(config_.seed ^ script_seed_, static_cast<std::uint64_t>(tick_)));
  EngineCtx ctx = make_ctx();
  for (std::size_t idx : order) {
    orchestrators_[idx]->step(ctx);
  }
  ++tick_;
  prune_live_tx();
}

void Engine::prune_live_tx() {
  for (auto it = live_tx_.begin(); it != live_tx_.end();) {
    bool terminal = false;
    if (auto rec = repo_.get("tx/" + *it + "/phase")) {
      nlohmann::json doc = jsonutil::parse_text(rec->value);
      terminal = tx_phase_terminal(
          tx_phase_from_name(doc.at("phase").get<std::string>()));
    }
    it = terminal ? live_tx_.erase(it) : std::next(it);
  }
}

DeploymentTransaction Engine::drive(const std::string& txid) {
  std::int64_t limit = config_.deadline_ticks + 64;
  for (std::int64_t i = 0; i < limit; ++i) {
    DeploymentTransaction tx = transaction_status(repo_, txid);
    if (tx_phase_terminal(tx.phase)) return tx;
    run_round();
  }
  throw Error(Errc::internal,
              "transaction `" + txid + "` did not terminate within " +
                  std::to_string(limit) + " rounds");
}

void Engine::quiesce() {
  std::int64_t limit = 16 * (config_.deadline_ticks + 8);
  for (std::int64_t i = 0; i < limit; ++i) {
    if (!has_live_tx()) return;
    run_round();
  }
  throw Error(Errc::internal, "engine did not quiesce");
}

bool Engine::has_live_tx() const { return !live_tx_.empty(); }

std::vector<std::string> Engine::live_tx() const {
  return {live_tx_.begin(), live_tx_.end()};
}

void Engine::resize_slice(const SliceId& id, Kbps new_bandwidth_kbps) {
  const Slice& before = tree_.at(id);
  Kbps old = before.allocated_kbps;
  tree_.resize(topology_, id, new_bandwidth_kbps);
  if (!id.is_root()) {
    // Substrate untouched; only the parent ledger moved.
  } else {
    std::set<std::uint32_t> touched;
    for (const auto& h : tree_.at(id).plan.hops) {
      if (h.domain) touched.insert(h.domain->asn);
    }
    for (auto& orch : orchestrators_) {
      if (touched.contains(orch->domain().asn)) orch->mark_capacity_dirty();
    }
  }
  emit("engine", "slice_resized",
       {{"slice", id.str()},
        {"old_mbps", kbps_to_mbps(old)},
        {"new_mbps", kbps_to_mbps(new_bandwidth_kbps)}});
}

bool Engine::release_slice(const SliceId& id) {
  SliceTree::ReleaseResult result = tree_.release(topology_, id);
  if (!result.existed) {
    emit("engine", "release_unknown", {{"slice", id.str()}});
    return false;
  }
  std::set<std::uint32_t> touched;
  for (const SliceId& released : result.released) {
    sfts_.remove_slice(released);
    nanos_.destroy(released);
    emit("engine", "slice_released", {{"slice", released.str()}});
  }
  if (id.is_root()) {
    for (auto& orch : orchestrators_) orch->mark_capacity_dirty();
  }
  return true;
}

const Nano& Engine::nano(const SliceId& id) const {
  const Nano* n = nanos_.find(id);
  if (n == nullptr) {
    throw Error(Errc::unknown_entity, "no nano for slice `" + id.str() + "`");
  }
  return *n;
}

SliceCapacity Engine::nano_capacity(const SliceId& id) const {
  const Slice& s = tree_.at(id);
  SliceCapacity cap;
  cap.allocated_kbps = s.allocated_kbps;
  cap.headroom_kbps = s.headroom_kbps();
  cap.path_latency_us = s.plan.total_latency_us;
  return cap;
}

SliceMetrics Engine::nano_metrics(const SliceId& id) const {
  return nano(id).metrics;
}

std::vector<SliceId> Engine::nano_children(const SliceId& id) const {
  return tree_.at(id).children;
}

SliceCapacity Engine::nano_resize(const SliceId& id, const std::string& caller,
                                  Kbps new_bandwidth_kbps) {
  if (nano(id).owner != caller) {
    throw Error(Errc::authorization,
                "caller `" + caller + "` does not own slice `" + id.str() +
                    "`");
  }
  resize_slice(id, new_bandwidth_kbps);
  return nano_capacity(id);
}

SliceId Engine::nano_create_subslice(const SliceId& parent,
                                     const std::string& caller,
                                     const SliceSpec& spec) {
  if (nano(parent).owner != caller) {
    throw Error(Errc::authorization,
                "caller `" + caller + "` does not own slice `" +
                    parent.str() + "`");
  }
  std::string txid = submit(spec, parent);
  DeploymentTransaction tx = drive(txid);
  if (tx.phase != TxPhase::Done) {
    throw Error(Errc::rejected, tx.reason);
  }
  return *tx.slice_id;
}

void Engine::nano_set_latency_bound(const SliceId& id,
                                    const std::string& caller,
                                    Micros bound_us) {
  if (nano(id).owner != caller) {
    throw Error(Errc::authorization,
                "caller `" + caller + "` does not own slice `" + id.str() +
                    "`");
  }
  const Slice& s = tree_.at(id);
  if (bound_us < s.spec.latency_bound_us &&
      s.plan.total_latency_us > bound_us) {
    throw Error(Errc::rejected, "latency",
                {"plan latency " + format_ms(s.plan.total_latency_us) +
                 " ms exceeds requested bound " + format_ms(bound_us) +
                 " ms"});
  }
  tree_.set_latency_bound(id, bound_us);
}

std::vector<Violation> Engine::audit() const {
  std::vector<Violation> out;

  // In-flight transaction holds still count against links until their
  // transaction reaches Done (ownership then moves to the tree slice).
  std::map<std::string, Kbps> external;
  for (const auto& orch : orchestrators_) {
    for (const auto& [txid, hold] : orch->holds()) {
      bool done = false;
      if (auto rec = repo_.get("tx/" + txid + "/phase")) {
        nlohmann::json doc = jsonutil::parse_text(rec->value);
        done = doc.at("phase").get<std::string>() == "Done";
      }
      if (done) continue;
      for (const auto& [link, amount] : hold.links) external[link] += amount;
    }
  }

  // Slice ids claimed by live transactions: their SFT entries may exist
  // before the slice lands in the tree.
  std::set<SliceId> pending_ids;
  for (const std::string& txid : live_tx_) {
    if (auto rec = repo_.get("tx/" + txid + "/phase")) {
      nlohmann::json doc = jsonutil::parse_text(rec->value);
      if (!tx_phase_terminal(
              tx_phase_from_name(doc.at("phase").get<std::string>())) &&
          !doc.at("slice_id").is_null()) {
        pending_ids.insert(
            SliceId::parse(doc.at("slice_id").get<std::string>()));
      }
    }
  }
  for (const std::string& v : tree_.check_invariants(topology_, external)) {
    out.push_back({"ledger", v});
  }

  // SFT/plan equivalence for every Active slice, and no stray entries.
  std::set<SliceId> active;
  for (const auto& [id, s] : tree_.slices()) {
    if (s.state != SliceState::Active) continue;
    active.insert(id);
    try {
      std::vector<HopRecord> walked = walk_sft(topology_, sfts_, tree_, id);
      if (walked != s.plan.hops) {
        out.push_back({"sft_mismatch",
                       "walk of slice `" + id.str() + "` differs from plan"});
      }
    } catch (const Error& e) {
      out.push_back({"sft_walk", e.what()});
    }
    std::map<std::string, SftEntry> entries = sfts_.entries_for_slice(id);
    std::vector<std::string> nodes = s.plan.node_sequence();
    std::set<std::string> expected(nodes.begin(), nodes.end());
    for (const auto& [router, entry] : entries) {
      if (!expected.contains(router)) {
        out.push_back({"sft_extra", "router `" + router +
                                        "` has an off-path entry for `" +
                                        id.str() + "`"});
      }
    }
    if (entries.size() != expected.size()) {
      out.push_back({"sft_incomplete",
                     "slice `" + id.str() + "` has " +
                         std::to_string(entries.size()) + " entries for " +
                         std::to_string(expected.size()) + " routers"});
    }
  }
  for (const auto& [router, table] : sfts_.tables()) {
    for (const auto& [id, entry] : table) {
      const Slice* s = tree_.find(id);
      if (s == nullptr) {
        out.push_back({"sft_orphan", "router `" + router +
                                         "` has an entry for missing slice `" +
                                         id.str() + "`"});
      }
    }
  }

  // Nano lifecycle is slaved to slice lifecycle.
  for (const SliceId& id : active) {
    if (nanos_.find(id) == nullptr) {
      out.push_back({"nano_missing",
                     "active slice `" + id.str() + "` has no nano"});
    }
  }
  for (const auto& [id, nano] : nanos_.all()) {
    const Slice* s = tree_.find(id);
    if (s == nullptr || s->state != SliceState::Active) {
      out.push_back({"nano_orphan", "nano `" + id.str() +
                                        "` outlives its slice"});
    }
  }
  return out;
}

std::vector<OrchestratorAction> Engine::step_domain(DomainId d) {
  for (auto& orch : orchestrators_) {
    if (orch->domain() == d) {
      EngineCtx ctx = make_ctx();
      return orch->step(ctx);
    }
  }
  throw Error(Errc::unknown_entity, "unknown domain " + std::to_string(d.asn));
}

nlohmann::json Engine::snapshot() const {
  nlohmann::json doc;
  doc["format_version"] = kSnapshotFormatVersion;
  doc["config"] = config_.to_json();
  doc["tick"] = tick_;
  doc["tx_counter"] = tx_counter_;
  doc["script_seed"] = script_seed_;
  doc["topology"] = topology_.to_snapshot();
  doc["tree"] = tree_.to_snapshot();
  doc["sfts"] = sfts_.to_snapshot();
  doc["nanos"] = nanos_.to_snapshot();
  doc["kv"] = repo_.to_snapshot();
  doc["faults"] = faults_.to_json();
  doc["live_tx"] = nlohmann::json::array();
  for (const auto& t : live_tx_) doc["live_tx"].push_back(t);
  doc["orchestrators"] = nlohmann::json::array();
  for (const auto& orch : orchestrators_) {
    doc["orchestrators"].push_back(orch->to_snapshot());
  }
  return doc;
}

Engine Engine::from_snapshot(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw Error(Errc::snapshot_format, "not a snapshot document");
  }
  if (doc.at("format_version").get<int>() != kSnapshotFormatVersion) {
    throw Error(Errc::snapshot_format,
                "unsupported snapshot format_version " +
                    doc.at("format_version").dump());
  }
  Engine engine;
  engine.config_ = EngineConfig::from_json(jsonutil::require(doc, "config"));
  engine.tick_ = jsonutil::require_int64(doc, "tick");
  engine.tx_counter_ = jsonutil::require_int64(doc, "tx_counter");
  engine.script_seed_ = jsonutil::require_int64(doc, "script_seed");
  engine.topology_ =
      Topology::from_snapshot(jsonutil::require(doc, "topology"));
  engine.tree_ = SliceTree::from_snapshot(jsonutil::require(doc, "tree"));
  engine.sfts_ = SftStore::from_snapshot(jsonutil::require(doc, "sfts"));
  engine.nanos_ = NanoRegistry::from_snapshot(jsonutil::require(doc, "nanos"));
  engine.repo_ = KvRepository::from_snapshot(jsonutil::require(doc, "kv"));
  engine.faults_ = FaultState::from_json(jsonutil::require(doc, "faults"));
  for (const auto& t : jsonutil::require_array(doc, "live_tx")) {
    engine.live_tx_.insert(t.get<std::string>());
  }
  for (const auto& oj : jsonutil::require_array(doc, "orchestrators")) {
    DomainId d{jsonutil::require_uint(oj, "asn")};
    auto orch = std::make_unique<DomainOrchestrator>(d);
    orch->restore(oj);
    engine.orchestrators_.push_back(std::move(orch));
  }
  if (engine.orchestrators_.size() != engine.topology_.domains().size()) {
    throw Error(Errc::snapshot_format,
                "snapshot orchestrator list does not match topology");
  }
  return engine;
}

void Engine::run_actors_until_quiescent() {
  std::vector<std::thread> threads;
  std::atomic<bool> done{false};
  for (std::size_t i = 0; i < orchestrators_.size(); ++i) {
    threads.emplace_back([this, i, &done] {
      for (int iter = 0; iter < 100000 && !done.load(); ++iter) {
        {
          std::lock_guard<std::mutex> lock(*actor_mutex_);
          EngineCtx ctx = make_ctx();
          orchestrators_[i]->step(ctx);
          ++tick_;
          prune_live_tx();
          if (!has_live_tx()) done.store(true);
        }
        std::this_thread::yield();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (has_live_tx()) {
    throw Error(Errc::internal, "actor mode did not quiesce");
  }
}

}  // namespace nasor
