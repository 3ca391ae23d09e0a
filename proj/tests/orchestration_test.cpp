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

#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "nasor/engine.hpp"
#include "nasor/errors.hpp"
#include "nasor/harness.hpp"
#include "nasor/orchestration.hpp"
#include "oracles.hpp"

using namespace nasor;
using namespace nasor::testing;

namespace {

// N-domain chain, two routers per domain, one crossing per adjacency.
// The end-to-end walk runs d0r0 -> d(N-1)r1.
Topology make_chain(int n_domains) {
  nlohmann::json doc;
  doc["domains"] = nlohmann::json::array();
  doc["peerings"] = nlohmann::json::array();
  for (int d = 0; d < n_domains; ++d) {
    nlohmann::json dj;
    dj["asn"] = 65001 + d;
    dj["routers"] = nlohmann::json::array();
    dj["routers"].push_back(
        {{"id", "d" + std::to_string(d) + "r0"}, {"sid", 101},
         {"role", "border"}});
    dj["routers"].push_back(
        {{"id", "d" + std::to_string(d) + "r1"}, {"sid", 102},
         {"role", "border"}});
    dj["links"] = nlohmann::json::array();
    dj["links"].push_back({{"id", "intra" + std::to_string(d)},
                           {"a", "d" + std::to_string(d) + "r0"},
                           {"b", "d" + std::to_string(d) + "r1"},
                           {"capacity_mbps", 10000},
                           {"latency_ms", 1},
                           {"adj_sid", 201}});
    doc["domains"].push_back(std::move(dj));
  }
  for (int d = 0; d + 1 < n_domains; ++d) {
    doc["peerings"].push_back({{"id", "x" + std::to_string(d)},
                               {"a", "d" + std::to_string(d) + "r1"},
                               {"b", "d" + std::to_string(d + 1) + "r0"},
                               {"capacity_mbps", 1000},
                               {"latency_ms", 5},
                               {"adj_sid", 1000 + d},
                               {"domain_a", 65001 + d},
                               {"domain_b", 65002 + d}});
  }
  return Topology::from_json(doc);
}

}  // namespace

TEST_CASE("capacity of t3 transit domain matches the border-pair oracle") {
  Topology t = t3();
  CapacityAdvertisement ad = compute_capacity(t, {65002});
  CHECK(ad.border_count == 2);
  CHECK(ad.max_transit_bandwidth_kbps == mbps_to_kbps(10000));
  CHECK(ad.min_transit_latency_us == ms_to_micros(1));
  CHECK(ad.max_transit_bandwidth_kbps == oracle_max_transit_kbps(t, {65002}));
  CHECK(ad.min_transit_latency_us ==
        oracle_min_transit_latency_us(t, {65002}));

  // Stub domains have one border router and no transit.
  CapacityAdvertisement edge = compute_capacity(t, {65001});
  CHECK(edge.border_count == 1);
  CHECK(edge.max_transit_bandwidth_kbps == 0);
}

TEST_CASE("capacity reflects reservations; republish bumps only the epoch") {
  Topology t = t3();
  KvRepository repo;
  DomainOrchestrator orch({65002}, repo);

  CapacityAdvertisement first = orch.publish_capacity(repo, t);
  CapacityAdvertisement second = orch.publish_capacity(repo, t);
  CHECK(second.epoch == first.epoch + 1);
  CHECK(second.max_transit_bandwidth_kbps ==
        first.max_transit_bandwidth_kbps);
  CHECK(second.min_transit_latency_us == first.min_transit_latency_us);

  t.reserve("b-intra", mbps_to_kbps(400));
  CapacityAdvertisement third = orch.publish_capacity(repo, t);
  CHECK(third.max_transit_bandwidth_kbps == mbps_to_kbps(9600));
  CHECK(third.max_transit_bandwidth_kbps ==
        oracle_max_transit_kbps(t, {65002}));

  auto rec = repo.get("capacity/65002");
  REQUIRE(rec.has_value());
  CHECK(CapacityAdvertisement::from_json(
            nlohmann::json::parse(rec->value)).epoch == 3);
}

TEST_CASE("random transit figures match exhaustive enumeration") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 30; ++i) {
    TopoGenOptions opt;
    opt.max_domains = 3;
    opt.max_routers = 6;
    Topology t = random_topology(rng, opt);
    for (DomainId d : t.domains()) {
      CapacityAdvertisement ad = compute_capacity(t, d);
      CHECK(ad.max_transit_bandwidth_kbps == oracle_max_transit_kbps(t, d));
      CHECK(ad.min_transit_latency_us == oracle_min_transit_latency_us(t, d));
    }
  }
}

TEST_CASE("submit writes the request and watchers observe it") {
  Engine engine = t3_engine();
  std::string txid = engine.submit(spec("a1", "c2", 100, 50), std::nullopt);
  CHECK(txid == "tx-000001");
  auto rec = engine.repo().get("tx/" + txid + "/request");
  REQUIRE(rec.has_value());
  CHECK(rec->version == 1);

  // No dedup: identical payloads get distinct transactions.
  std::string txid2 = engine.submit(spec("a1", "c2", 100, 50), std::nullopt);
  CHECK(txid2 == "tx-000002");
  CHECK(txid2 != txid);
}

TEST_CASE("hand-executed trace: t3 deployment settles in three fixed rounds") {
  Engine engine = t3_engine();
  std::string txid = engine.submit(spec("a1", "c2", 100, 50), std::nullopt);

  auto phase = [&] { return transaction_status(engine.repo(), txid).phase; };
  auto states = [&] {
    return transaction_status(engine.repo(), txid).per_domain;
  };

  // Round 1: coordinator begins and every domain reserves.
  for (std::uint32_t asn : {65001, 65002, 65003}) {
    engine.step_domain({asn});
  }
  CHECK(phase() == TxPhase::Reserving);
  for (const auto& [asn, st] : states()) CHECK(st == DomainTxState::Reserved);

  // Round 2: coordinator flips to Committing; every domain commits.
  for (std::uint32_t asn : {65001, 65002, 65003}) {
    engine.step_domain({asn});
  }
  CHECK(phase() == TxPhase::Committing);
  for (const auto& [asn, st] : states()) CHECK(st == DomainTxState::Committed);

  // Round 3: coordinator assembles the slice and writes Done.
  for (std::uint32_t asn : {65001, 65002, 65003}) {
    engine.step_domain({asn});
  }
  CHECK(phase() == TxPhase::Done);

  DeploymentTransaction tx = transaction_status(engine.repo(), txid);
  REQUIRE(tx.slice_id.has_value());
  const Slice& slice = engine.tree().at(*tx.slice_id);
  CHECK(slice.state == SliceState::Active);
  CHECK(engine.audit().empty());
  CHECK(walk_sft(engine.topology(), engine.sfts(), engine.tree(),
                 slice.id) == slice.plan.hops);
}

TEST_CASE("full t3 deployment over the seeded scheduler stays within bounds") {
  for (std::uint64_t seed : {0ULL, 1ULL, 7ULL, 99ULL}) {
    Engine engine = t3_engine(seed);
    std::string txid = engine.submit(spec("a1", "c2", 100, 50), std::nullopt);
    int rounds = 0;
    while (!tx_phase_terminal(transaction_status(engine.repo(), txid).phase)) {
      engine.run_round();
      ++rounds;
      REQUIRE(rounds <= 6);
    }
    CHECK(transaction_status(engine.repo(), txid).phase == TxPhase::Done);
    CHECK(engine.audit().empty());
  }
}

TEST_CASE("fault-free progress bound: Done within 2N+2 rounds for N=1..5") {
  for (int n = 1; n <= 5; ++n) {
    for (std::uint64_t seed : {0ULL, 3ULL, 17ULL}) {
      EngineConfig config;
      config.seed = seed;
      Engine engine(make_chain(n), config);
      std::string src = "d0r0";
      std::string dst = "d" + std::to_string(n - 1) + "r1";
      std::string txid =
          engine.submit(spec(src, dst, 50, 1000), std::nullopt);
      int rounds = 0;
      while (!tx_phase_terminal(
          transaction_status(engine.repo(), txid).phase)) {
        engine.run_round();
        ++rounds;
        REQUIRE(rounds <= 2 * n + 2);
      }
      CHECK(transaction_status(engine.repo(), txid).phase == TxPhase::Done);
    }
  }
}

TEST_CASE("transaction_status views: mid-flight, done, unknown") {
  Engine engine = t3_engine();
  std::string txid = engine.submit(spec("a1", "c2", 100, 50), std::nullopt);

  // Step only the coordinator: its domain is Reserved, others Waiting.
  engine.step_domain({65001});
  DeploymentTransaction mid = transaction_status(engine.repo(), txid);
  CHECK(mid.phase == TxPhase::Reserving);
  CHECK(mid.per_domain.at(65001) == DomainTxState::Reserved);
  CHECK(mid.per_domain.at(65002) == DomainTxState::Waiting);
  CHECK(mid.per_domain.at(65003) == DomainTxState::Waiting);

  DeploymentTransaction done = engine.drive(txid);
  CHECK(done.phase == TxPhase::Done);
  for (const auto& [asn, st] : done.per_domain) {
    CHECK(st == DomainTxState::Committed);
  }

  CHECK_THROWS_AS(transaction_status(engine.repo(), "tx-999999"), Error);
}

TEST_CASE("coordinator rejections surface as Failed with the admit reason") {
  Engine engine = t3_engine();

  std::string latency =
      engine.submit(spec("a1", "c2", 100, 1), std::nullopt);
  CHECK(engine.drive(latency).phase == TxPhase::Failed);
  CHECK(engine.drive(latency).reason == "latency");

  std::string parent =
      engine.submit(spec("a1", "b2", 10, 20), SliceId::parse("7"));
  DeploymentTransaction tx = engine.drive(parent);
  CHECK(tx.phase == TxPhase::Failed);
  CHECK(tx.reason == "unknown parent");

  std::string ghost = engine.submit(spec("ghost", "c2", 10, 20), std::nullopt);
  DeploymentTransaction g = engine.drive(ghost);
  CHECK(g.phase == TxPhase::Failed);
  CHECK(g.reason.find("unknown node") == 0);

  CHECK(engine.tree().empty());
  CHECK(engine.audit().empty());
}

TEST_CASE("reserve_local debits exactly its own domain's links") {
  Engine engine = t3_engine();
  engine.submit(spec("a1", "c2", 100, 50), std::nullopt);
  engine.step_domain({65001});  // begin + reserve the a-side crossing
  CHECK(engine.topology().residual_kbps("ab1") == mbps_to_kbps(900));
  CHECK(engine.topology().residual_kbps("b-intra") == mbps_to_kbps(10000));
  engine.step_domain({65002});  // b-intra and the bc crossing
  CHECK(engine.topology().residual_kbps("b-intra") == mbps_to_kbps(9900));
  CHECK(engine.topology().residual_kbps("bc1") == mbps_to_kbps(900));
  engine.step_domain({65003});  // c-intra only
  CHECK(engine.topology().residual_kbps("c-intra") == mbps_to_kbps(9900));
}

TEST_CASE("reserve_local refuses atomically when one hop is 1 kbps short") {
  Topology t = t3();
  KvRepository repo;
  SliceTree tree;
  SftStore sfts;
  NanoRegistry nanos;
  EngineConfig config;
  FaultState faults;
  DomainOrchestrator orch({65002}, repo);
  EngineCtx ctx{t, repo, tree, sfts, nanos, config, faults, 0, 0, nullptr};

  RoutePlan plan = assemble_route_plan(t, "a1", "c2");
  // 65002 owns b-intra and the bc1 crossing. Leave bc1 one kilobit short.
  t.reserve("bc1", t.residual_kbps("bc1") - mbps_to_kbps(100) + 1);
  Kbps b_intra_before = t.link("b-intra").reserved_kbps;

  DomainOrchestrator::TxContext tx;
  tx.txid = "tx-000001";
  tx.spec = spec("a1", "c2", 100, 50);
  std::string reason;
  CHECK(orch.reserve_local(ctx, tx, plan, reason) == DomainTxState::Refused);
  CHECK(reason == "link `bc1`");
  // Zero local changes: the passing link was not debited.
  CHECK(t.link("b-intra").reserved_kbps == b_intra_before);
  CHECK(orch.holds().empty());
}

TEST_CASE("two transactions contending for the last capacity: one wins") {
  for (std::uint64_t seed : {0ULL, 1ULL, 2ULL, 5ULL}) {
    for (int order = 0; order < 2; ++order) {
      Engine engine = t3_engine(seed);
      SliceSpec big = spec("a1", "c2", 550, 50);
      std::string tx1 = engine.submit(big, std::nullopt);
      std::string tx2 = engine.submit(big, std::nullopt);
      if (order == 1) std::swap(tx1, tx2);
      engine.quiesce();

      DeploymentTransaction s1 = transaction_status(engine.repo(), tx1);
      DeploymentTransaction s2 = transaction_status(engine.repo(), tx2);
      bool one_done =
          (s1.phase == TxPhase::Done) != (s2.phase == TxPhase::Done);
      CHECK(one_done);
      CHECK((s1.phase == TxPhase::Failed || s2.phase == TxPhase::Failed));
      CHECK(engine.tree().slices().size() == 1);
      CHECK(engine.topology().residual_kbps("ab1") == mbps_to_kbps(450));
      CHECK(engine.audit().empty());
    }
  }
}

TEST_CASE("injected refusal aborts with zero residue in every domain") {
  Engine engine = t3_engine();
  engine.faults().forced_refusals[65002] = 1;
  std::string txid = engine.submit(spec("a1", "c2", 100, 50), std::nullopt);
  DeploymentTransaction tx = engine.drive(txid);
  CHECK(tx.phase == TxPhase::Failed);
  CHECK(tx.reason == "refused by 65002: injected");
  for (const auto& link : {"ab1", "ab2", "bc1", "bc2", "a-intra", "b-intra",
                           "c-intra"}) {
    CHECK(engine.topology().link(link).reserved_kbps == 0);
  }
  CHECK(engine.tree().empty());
  CHECK(engine.sfts().empty());
  CHECK(engine.audit().empty());

  // The substrate is intact, so the next attempt succeeds.
  std::string retry = engine.submit(spec("a1", "c2", 100, 50), std::nullopt);
  CHECK(engine.drive(retry).phase == TxPhase::Done);
}

TEST_CASE("stalled domains trip the deadline and the coordinator aborts") {
  Engine engine = t3_engine();
  engine.faults().stall_probability = 1.0;
  std::string txid = engine.submit(spec("a1", "c2", 100, 50), std::nullopt);
  DeploymentTransaction tx = engine.drive(txid);
  CHECK(tx.phase == TxPhase::Failed);
  CHECK(tx.reason == "deadline");
  CHECK(engine.tick() >= engine.config().deadline_ticks);
  for (const auto& link : {"ab1", "bc1", "b-intra"}) {
    CHECK(engine.topology().link(link).reserved_kbps == 0);
  }
  CHECK(engine.audit().empty());
}

TEST_CASE("commit without a hold is a protocol violation, no state change") {
  Topology t = t3();
  KvRepository repo;
  SliceTree tree;
  SftStore sfts;
  NanoRegistry nanos;
  EngineConfig config;
  FaultState faults;
  DomainOrchestrator orch({65002}, repo);
  EngineCtx ctx{t, repo, tree, sfts, nanos, config, faults, 0, 0, nullptr};

  RoutePlan plan = assemble_route_plan(t, "a1", "c2");
  DomainOrchestrator::TxContext tx;
  tx.txid = "tx-000001";
  tx.spec = spec("a1", "c2", 100, 50);

  // Reserve, then abort (as if the transaction aborted), then try to
  // commit: the hold is gone.
  std::string reason;
  REQUIRE(orch.reserve_local(ctx, tx, plan, reason) ==
          DomainTxState::Reserved);
  orch.abort_local(ctx, tx, SliceId::parse("1"));
  CHECK(orch.holds().empty());
  CHECK_THROWS_AS(orch.commit_local(ctx, tx, SliceId::parse("1"), plan),
                  Error);
  CHECK(sfts.empty());

  // Abort is idempotent: a second call is a no-op.
  orch.abort_local(ctx, tx, SliceId::parse("1"));
  CHECK(t.link("b-intra").reserved_kbps == 0);
  CHECK(t.link("bc1").reserved_kbps == 0);
}

TEST_CASE("per-domain SFT programming equals the whole-path programmer") {
  std::mt19937_64 rng(33);
  int verified = 0;
  while (verified < 100) {
    TopoGenOptions opt;
    opt.max_domains = 4;
    opt.max_routers = 4;
    Topology t = random_topology(rng, opt);
    EngineConfig config;
    config.seed = rng();
    Engine engine(t, config);

    std::vector<const RouterNode*> all;
    for (DomainId d : t.domains()) {
      for (const RouterNode* r : t.routers_in_domain(d)) all.push_back(r);
    }
    for (int k = 0; k < 3; ++k) {
      const RouterNode* src = all[rng() % all.size()];
      const RouterNode* dst = all[rng() % all.size()];
      std::string txid = engine.submit(
          spec(src->node_id, dst->node_id,
               1 + static_cast<double>(rng() % 20), 1000),
          std::nullopt);
      DeploymentTransaction tx = engine.drive(txid);
      if (tx.phase != TxPhase::Done) continue;

      // Reference: the slicing module's whole-path output on a twin
      // store.
      SftStore reference;
      program_sft(engine.topology(), reference, *tx.slice_id,
                  engine.tree().at(*tx.slice_id).plan);
      CHECK(engine.sfts().entries_for_slice(*tx.slice_id) ==
            reference.entries_for_slice(*tx.slice_id));
      ++verified;
    }
  }
}

TEST_CASE("randomized refusals (p=0.3) leave no residue; Done slices walk") {
  std::mt19937_64 rng(34);
  Engine engine = t3_engine(5);
  engine.faults().refusal_probability = 0.3;
  int done = 0, failed = 0;
  for (int i = 0; i < 60; ++i) {
    std::string txid = engine.submit(
        spec("a1", "c2", 1 + static_cast<double>(rng() % 10), 50),
        std::nullopt);
    DeploymentTransaction tx = engine.drive(txid);
    if (tx.phase == TxPhase::Done) {
      ++done;
      CHECK(walk_sft(engine.topology(), engine.sfts(), engine.tree(),
                     *tx.slice_id) ==
            engine.tree().at(*tx.slice_id).plan.hops);
    } else {
      ++failed;
    }
    CHECK(engine.audit().empty());
  }
  CHECK(done > 0);
  CHECK(failed > 0);

  // Release everything: the substrate returns to its initial ledger.
  engine.faults().refusal_probability = 0.0;
  for (const SliceId& id : engine.tree().roots()) {
    engine.release_slice(id);
  }
  for (const auto& link : {"ab1", "ab2", "bc1", "bc2", "a-intra", "b-intra",
                           "c-intra"}) {
    CHECK(engine.topology().link(link).reserved_kbps == 0);
  }
}

TEST_CASE("subslice deployment through the transaction pipeline") {
  Engine engine = t3_engine();
  std::string root_tx = engine.submit(spec("a1", "c2", 100, 50), std::nullopt);
  DeploymentTransaction root = engine.drive(root_tx);
  REQUIRE(root.phase == TxPhase::Done);

  std::string child_tx =
      engine.submit(spec("a1", "b2", 40, 20), root.slice_id);
  DeploymentTransaction child = engine.drive(child_tx);
  REQUIRE(child.phase == TxPhase::Done);
  CHECK(child.slice_id->str() == "1.1");
  CHECK(engine.tree().at(*root.slice_id).child_committed_kbps ==
        mbps_to_kbps(40));
  // Child SFT entries exist exactly on the sub-path.
  CHECK(engine.sfts().entries_for_slice(*child.slice_id).size() == 3);
  CHECK(engine.audit().empty());

  // Parent headroom refuses an oversized second child at admission.
  std::string fat_tx = engine.submit(spec("a1", "b2", 61, 20), root.slice_id);
  DeploymentTransaction fat = engine.drive(fat_tx);
  CHECK(fat.phase == TxPhase::Failed);
  CHECK(fat.reason == "parent capacity");
  CHECK(engine.audit().empty());
}

TEST_CASE("atomic visibility: slices appear exactly when their tx is Done") {
  Engine engine = t3_engine();
  std::string txid = engine.submit(spec("a1", "c2", 100, 50), std::nullopt);
  while (!tx_phase_terminal(transaction_status(engine.repo(), txid).phase)) {
    // Mid-flight, the slice is not yet observable.
    CHECK(engine.tree().empty());
    engine.run_round();
  }
  CHECK(transaction_status(engine.repo(), txid).phase == TxPhase::Done);
  CHECK(engine.tree().slices().size() == 1);
}

TEST_CASE("free-running actor mode reaches the same quiescent shape") {
  Engine engine = t3_engine();
  std::string tx1 = engine.submit(spec("a1", "c2", 100, 50), std::nullopt);
  std::string tx2 = engine.submit(spec("a1", "b2", 200, 50), std::nullopt);
  engine.run_actors_until_quiescent();

  CHECK(transaction_status(engine.repo(), tx1).phase == TxPhase::Done);
  CHECK(transaction_status(engine.repo(), tx2).phase == TxPhase::Done);
  CHECK(engine.tree().slices().size() == 2);
  CHECK(engine.audit().empty());
  for (const auto& [id, s] : engine.tree().slices()) {
    CHECK(walk_sft(engine.topology(), engine.sfts(), engine.tree(), id) ==
          s.plan.hops);
  }
}

TEST_CASE("engine snapshot round-trips mid-flight transactions") {
  Engine engine = t3_engine(11);
  engine.submit(spec("a1", "c2", 100, 50), std::nullopt);
  engine.run_round();  // leave the transaction mid-flight

  nlohmann::json snap = engine.snapshot();
  Engine restored = Engine::from_snapshot(snap);
  CHECK(restored.snapshot().dump() == snap.dump());

  // Both replicas finish identically.
  engine.quiesce();
  restored.quiesce();
  CHECK(engine.snapshot().dump() == restored.snapshot().dump());
  CHECK(!engine.tree().empty());
}
