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

#ifndef NASOR_ENGINE_HPP_
#define NASOR_ENGINE_HPP_

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nasor/kv.hpp"
#include "nasor/nano.hpp"
#include "nasor/orchestration.hpp"
#include "nasor/slicing.hpp"
#include "nasor/topology.hpp"

namespace nasor {

struct Violation {
  std::string code;
  std::string detail;
};

// Receives every engine event in order. The harness builds the event
// log through this.
using EventFn = std::function<void(std::int64_t tick, std::string_view actor,
                                   std::string_view event,
                                   nlohmann::json payload)>;

// Composition root: one topology, one key-value repository, one slice
// forest, the per-domain orchestrators, and the deterministic scheduler.
// All mutations funnel through this executor, which serializes them; the
// free-running actor mode takes the same lock per step.
class Engine {
 public:
  Engine(Topology topology, EngineConfig config);

  // Northbound surface.
  std::string submit(const SliceSpec& spec,
                     const std::optional<SliceId>& parent);

  // One scheduler round: every orchestrator steps once, in an order
  // derived from (seed, script seed, tick). Advances the tick.
  void run_round();
  // Rounds until the transaction is terminal.
  DeploymentTransaction drive(const std::string& txid);
  // Rounds until no live transaction remains.
  void quiesce();
  bool has_live_tx() const;
  std::vector<std::string> live_tx() const;

  // Executor-serialized direct operations.
  void resize_slice(const SliceId& id, Kbps new_bandwidth_kbps);
  // False when the id is unknown (idempotent no-op).
  bool release_slice(const SliceId& id);

  // NANO surface: the per-slice private orchestrator. Mutations check
  // ownership and delegate to the ledgers.
  const Nano& nano(const SliceId& id) const;
  SliceCapacity nano_capacity(const SliceId& id) const;
  SliceMetrics nano_metrics(const SliceId& id) const;
  std::vector<SliceId> nano_children(const SliceId& id) const;
  SliceCapacity nano_resize(const SliceId& id, const std::string& caller,
                            Kbps new_bandwidth_kbps);
  SliceId nano_create_subslice(const SliceId& parent,
                               const std::string& caller,
                               const SliceSpec& spec);
  // Loosening the latency bound is always allowed; tightening only when
  // the existing plan already satisfies the new bound.
  void nano_set_latency_bound(const SliceId& id, const std::string& caller,
                              Micros bound_us);

  // Full consistency audit: forest ledgers, link conservation (including
  // in-flight transaction holds), SFT/plan equivalence, nano lifecycle.
  std::vector<Violation> audit() const;

  nlohmann::json snapshot() const;
  static Engine from_snapshot(const nlohmann::json& doc);

  // Free-running mode: one thread per orchestrator, stepping under the
  // engine lock until every transaction is terminal.
  void run_actors_until_quiescent();

  const Topology& topology() const { return topology_; }
  Topology& topology_mut() { return topology_; }
  const SliceTree& tree() const { return tree_; }
  const SftStore& sfts() const { return sfts_; }
  SftStore& sfts_mut() { return sfts_; }
  const KvRepository& repo() const { return repo_; }
  KvRepository& repo_mut() { return repo_; }
  const NanoRegistry& nanos() const { return nanos_; }
  NanoRegistry& nanos_mut() { return nanos_; }
  const EngineConfig& config() const { return config_; }
  FaultState& faults() { return faults_; }
  std::int64_t tick() const { return tick_; }
  std::uint64_t script_seed() const { return script_seed_; }
  void set_script_seed(std::uint64_t seed) { script_seed_ = seed; }
  void set_event_fn(EventFn fn) { event_fn_ = std::move(fn); }

  // Steps one orchestrator (tests drive exact interleavings this way).
  std::vector<OrchestratorAction> step_domain(DomainId d);

 private:
  Engine() = default;
  EngineCtx make_ctx();
  void emit(std::string_view actor, std::string_view event,
            nlohmann::json payload);
  void prune_live_tx();

  Topology topology_;
  EngineConfig config_;
  KvRepository repo_;
  SliceTree tree_;
  SftStore sfts_;
  NanoRegistry nanos_;
  std::vector<std::unique_ptr<DomainOrchestrator>> orchestrators_;
  FaultState faults_;
  std::set<std::string> live_tx_;
  std::int64_t tick_ = 0;
  std::uint64_t tx_counter_ = 0;
  std::uint64_t script_seed_ = 0;
  EventFn event_fn_;
  std::unique_ptr<std::mutex> actor_mutex_ = std::make_unique<std::mutex>();
};

}  // namespace nasor

#endif  // NASOR_ENGINE_HPP_
