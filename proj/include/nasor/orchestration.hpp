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

#ifndef NASOR_ORCHESTRATION_HPP_
#define NASOR_ORCHESTRATION_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nasor/kv.hpp"
#include "nasor/nano.hpp"
#include "nasor/slicing.hpp"
#include "nasor/topology.hpp"

namespace nasor {

// Domain capacity summary published under `capacity/<asn>`. Transit
// figures are recomputed from current intra-domain residuals: the best
// border-to-border widest-path bottleneck and the best border-to-border
// latency.
struct CapacityAdvertisement {
  DomainId domain;
  Kbps max_transit_bandwidth_kbps = 0;
  Micros min_transit_latency_us = 0;
  std::uint32_t border_count = 0;
  std::uint64_t epoch = 0;

  nlohmann::json to_json() const;
  static CapacityAdvertisement from_json(const nlohmann::json& j);
};

// Transit figures only; the epoch is assigned at publish time.
CapacityAdvertisement compute_capacity(const Topology& t, DomainId domain);

enum class TxPhase { Reserving, Committing, Aborting, Done, Failed };
enum class DomainTxState { Waiting, Reserved, Committed, Aborted, Refused };

const char* tx_phase_name(TxPhase p);
TxPhase tx_phase_from_name(const std::string& s);
const char* domain_tx_state_name(DomainTxState s);
DomainTxState domain_tx_state_from_name(const std::string& s);
bool tx_phase_terminal(TxPhase p);

// Read-only view assembled from the `tx/<txid>/*` keys.
struct DeploymentTransaction {
  std::string txid;
  SliceSpec spec;
  std::optional<SliceId> parent;
  std::optional<RoutePlan> plan;
  std::optional<SliceId> slice_id;
  TxPhase phase = TxPhase::Reserving;
  std::string reason;
  std::map<std::uint32_t, DomainTxState> per_domain;  // asn -> state
  std::int64_t submit_tick = 0;
  std::int64_t deadline_tick = 0;
};

DeploymentTransaction transaction_status(const KvRepository& repo,
                                         const std::string& txid);

// Writes `tx/<txid>/request`. The source domain's orchestrator adopts
// the transaction as coordinator when it observes the record.
std::string submit_deployment(KvRepository& repo, std::uint64_t ordinal,
                              const SliceSpec& spec,
                              const std::optional<SliceId>& parent,
                              std::int64_t submit_tick);

struct EngineConfig {
  std::uint64_t seed = 0;
  int depth_cap = 16;
  std::int64_t deadline_ticks = 50;

  nlohmann::json to_json() const;
  static EngineConfig from_json(const nlohmann::json& j);
};

// Scripted fault injection. Probabilistic draws are pure functions of
// (seed, txid, asn) so map iteration order cannot perturb outcomes.
struct FaultState {
  double refusal_probability = 0.0;
  double stall_probability = 0.0;
  std::map<std::uint32_t, int> forced_refusals;  // asn -> remaining count

  bool draw_refusal(std::uint64_t seed, const std::string& txid,
                    std::uint32_t asn);
  bool draw_stall(std::uint64_t seed, const std::string& txid,
                  std::uint32_t asn) const;

  nlohmann::json to_json() const;
  static FaultState from_json(const nlohmann::json& j);
};

struct OrchestratorAction {
  std::string txid;
  std::string action;
  std::string detail;
};

// Everything a step may observe or mutate. The orchestrator only touches
// its own domain's links and routers; tree mutations happen in
// coordinator actions, which the engine serializes.
struct EngineCtx {
  Topology& topology;
  KvRepository& repo;
  SliceTree& tree;
  SftStore& sfts;
  NanoRegistry& nanos;
  const EngineConfig& config;
  FaultState& faults;
  std::int64_t tick;
  std::uint64_t draw_seed;
  std::function<void(std::string_view actor, std::string_view event,
                     nlohmann::json payload)>
      emit;  // may be empty
};

// Per-domain NASOR orchestrator: publishes capacity, reserves and
// commits its domain's share of deployment transactions, and acts as
// coordinator for transactions sourced in its domain.
class DomainOrchestrator {
 public:
  DomainOrchestrator(DomainId domain, KvRepository& repo);
  // Restore path: the watch subscription comes from the snapshot.
  explicit DomainOrchestrator(DomainId domain) : domain_(domain) {}

  DomainId domain() const { return domain_; }

  CapacityAdvertisement publish_capacity(KvRepository& repo,
                                         const Topology& t);

  // Drains watch events, then advances every known transaction as far as
  // its observations allow: at most one local resource action per
  // transaction per step, plus any enabled coordinator transitions.
  std::vector<OrchestratorAction> step(EngineCtx& ctx);

  void mark_capacity_dirty() { capacity_dirty_ = true; }

  struct Hold {
    std::vector<std::pair<std::string, Kbps>> links;
    bool committed = false;
  };
  const std::map<std::string, Hold>& holds() const { return holds_; }

  struct TxContext {
    std::string txid;
    SliceSpec spec;
    std::optional<SliceId> parent;
    std::int64_t submit_tick = 0;
  };

  DomainTxState reserve_local(EngineCtx& ctx, const TxContext& tx,
                              const RoutePlan& plan, std::string& reason);
  void commit_local(EngineCtx& ctx, const TxContext& tx, const SliceId& id,
                    const RoutePlan& plan);
  void abort_local(EngineCtx& ctx, const TxContext& tx, const SliceId& id);

  nlohmann::json to_snapshot() const;
  void restore(const nlohmann::json& j);

 private:
  bool is_coordinator(const EngineCtx& ctx, const TxContext& tx) const;
  void coordinator_begin(EngineCtx& ctx, const TxContext& tx,
                         std::vector<OrchestratorAction>& actions);
  bool process_tx(EngineCtx& ctx, const TxContext& tx,
                  std::vector<OrchestratorAction>& actions);
  bool local_action(EngineCtx& ctx, const TxContext& tx,
                    const nlohmann::json& phase_doc,
                    std::vector<OrchestratorAction>& actions);
  bool coordinator_action(EngineCtx& ctx, const TxContext& tx,
                          const nlohmann::json& phase_doc,
                          std::vector<OrchestratorAction>& actions);

  void write_my_state(EngineCtx& ctx, const std::string& txid,
                      DomainTxState state, const std::string& reason);
  void write_phase(EngineCtx& ctx, const std::string& txid,
                   nlohmann::json phase_doc);

  // Hops of `plan` whose bandwidth this domain owns: intra-domain hops
  // inside it plus crossings leaving it.
  std::vector<std::string> owned_links(const EngineCtx& ctx,
                                       const RoutePlan& plan) const;

  DomainId domain_;
  KvRepository::SubscriberId tx_watch_ = 0;
  std::set<std::string> known_tx_;
  std::set<std::string> settled_tx_;
  std::map<std::string, Hold> holds_;
  std::uint64_t capacity_epoch_ = 0;
  bool capacity_dirty_ = true;
};

}  // namespace nasor

#endif  // NASOR_ORCHESTRATION_HPP_
