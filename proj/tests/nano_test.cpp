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
#include "oracles.hpp"

using namespace nasor;
using namespace nasor::testing;

namespace {

SliceId deploy(Engine& engine, const SliceSpec& s,
               std::optional<SliceId> parent = std::nullopt) {
  DeploymentTransaction tx = engine.drive(engine.submit(s, parent));
  REQUIRE(tx.phase == TxPhase::Done);
  return *tx.slice_id;
}

}  // namespace

TEST_CASE("a fresh root nano sees headroom equal to its allocation") {
  Engine engine = t3_engine();
  SliceId id = deploy(engine, spec("a1", "c2", 100, 50));

  const Nano& nano = engine.nano(id);
  CHECK(nano.owner == "tenant-a");
  SliceCapacity cap = engine.nano_capacity(id);
  CHECK(cap.allocated_kbps == mbps_to_kbps(100));
  CHECK(cap.headroom_kbps == mbps_to_kbps(100));
  CHECK(cap.path_latency_us == ms_to_micros(12));  // latency-sum oracle
}

TEST_CASE("duplicate nano instantiation is refused") {
  Engine engine = t3_engine();
  SliceId id = deploy(engine, spec("a1", "c2", 100, 50));
  CHECK_THROWS_AS(engine.nanos_mut().instantiate(id, "tenant-a"), Error);
}

TEST_CASE("parent nano lists its children") {
  Engine engine = t3_engine();
  SliceId root = deploy(engine, spec("a1", "c2", 100, 50));
  SliceId child = deploy(engine, spec("a1", "b2", 10, 20), root);
  std::vector<SliceId> children = engine.nano_children(root);
  REQUIRE(children.size() == 1);
  CHECK(children[0] == child);
  CHECK(engine.nano(child).owner == "tenant-a");
}

TEST_CASE("owner resize updates the capacity view") {
  Engine engine = t3_engine();
  SliceId id = deploy(engine, spec("a1", "c2", 100, 50));
  SliceCapacity cap = engine.nano_resize(id, "tenant-a", mbps_to_kbps(150));
  CHECK(cap.allocated_kbps == mbps_to_kbps(150));
  CHECK(cap.headroom_kbps == mbps_to_kbps(150));
  CHECK(engine.topology().residual_kbps("ab1") == mbps_to_kbps(850));
}

TEST_CASE("non-owner calls are rejected and change nothing") {
  Engine engine = t3_engine();
  SliceId id = deploy(engine, spec("a1", "c2", 100, 50));
  try {
    engine.nano_resize(id, "intruder", mbps_to_kbps(150));
    FAIL("expected authorization error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::authorization);
  }
  CHECK(engine.nano_capacity(id).allocated_kbps == mbps_to_kbps(100));
  CHECK(engine.topology().residual_kbps("ab1") == mbps_to_kbps(900));
}

TEST_CASE("delegation transparency: limits surface exactly as resize errors") {
  Engine engine = t3_engine();
  SliceId root = deploy(engine, spec("a1", "c2", 25, 50));
  SliceId child = deploy(engine, spec("a1", "b2", 10, 20), root);
  try {
    engine.nano_resize(child, "tenant-a", mbps_to_kbps(40));
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::rejected);
    CHECK(std::string(e.what()) == "parent capacity");
  }
}

TEST_CASE("recursive slicing scenario: child inside parent, then deeper") {
  Engine engine = t3_engine();
  SliceId one = deploy(engine, spec("a1", "c2", 100, 50));

  // The slice owner carves a child out of the running parent; the
  // parent's headroom shrinks by the child's allocation.
  SliceId two =
      engine.nano_create_subslice(one, "tenant-a", spec("a1", "b2", 40, 20));
  CHECK(two.str() == "1.1");
  CHECK(engine.tree().at(two).state == SliceState::Active);
  CHECK(engine.nano_capacity(one).headroom_kbps == mbps_to_kbps(60));

  // Recursion continues: a child of the child.
  SliceId three =
      engine.nano_create_subslice(two, "tenant-a", spec("a1", "b1", 5, 10));
  CHECK(three.str() == "1.1.1");
  CHECK(engine.nano_capacity(two).headroom_kbps == mbps_to_kbps(35));
  CHECK(engine.audit().empty());
}

TEST_CASE("off-path subslice creation propagates the rejection") {
  Engine engine = t3_engine();
  SliceId one = deploy(engine, spec("a1", "c2", 100, 50));
  try {
    engine.nano_create_subslice(one, "tenant-a", spec("a1", "a2", 10, 20));
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::rejected);
    CHECK(std::string(e.what()) == "off-path");
  }
  CHECK(engine.nano_capacity(one).headroom_kbps == mbps_to_kbps(100));
}

TEST_CASE("metrics: zero before traffic, cap at the allocation") {
  Engine engine = t3_engine();

  SimulationScript script;
  script.seed = 4;
  // Deploy at tick 0, let the transaction settle, then attach flows.
  nlohmann::json req = spec("a1", "c2", 100, 50).to_json();
  script.events.push_back({0, "deploy", {{"request", req}}});
  run_script(engine, script);

  SliceId id = SliceId::parse("1");
  SliceMetrics before = engine.nano_metrics(id);
  CHECK(before.active_ticks == 0);
  CHECK(before.offered_mbps() == 0.0);
  CHECK(before.delivered_mbps() == 0.0);
  CHECK(before.violation_count == 0);

  SimulationScript traffic;
  traffic.seed = 4;
  traffic.events.push_back(
      {6, "flow",
       {{"slice", "1"}, {"offered_mbps", 50}, {"duration_ticks", 10}}});
  run_script(engine, traffic, /*resume=*/true);

  SliceMetrics after = engine.nano_metrics(id);
  CHECK(after.active_ticks == 10);
  CHECK(after.offered_mbps() == doctest::Approx(50.0));
  CHECK(after.delivered_mbps() == doctest::Approx(50.0));
  CHECK(after.observed_latency_us == ms_to_micros(12));
  CHECK(after.violation_count == 0);

  // Offered above the allocation: delivered caps at min(offered,
  // allocated).
  SimulationScript overload;
  overload.seed = 4;
  overload.events.push_back(
      {engine.tick(), "flow",
       {{"slice", "1"}, {"offered_mbps", 150}, {"duration_ticks", 5}}});
  run_script(engine, overload, /*resume=*/true);

  SliceMetrics capped = engine.nano_metrics(id);
  // min(offered, allocated) oracle per overloaded tick: 100.
  CHECK(capped.delivered_accum_kbps - after.delivered_accum_kbps ==
        5 * mbps_to_kbps(100));
  CHECK(capped.offered_accum_kbps - after.offered_accum_kbps ==
        5 * mbps_to_kbps(150));
}

TEST_CASE("capacity arithmetic follows children and releases") {
  Engine engine = t3_engine();
  SliceId root = deploy(engine, spec("a1", "c2", 100, 50));
  deploy(engine, spec("a1", "b2", 60, 20), root);
  SliceId c2 = deploy(engine, spec("a1", "b2", 40, 20), root);
  CHECK(engine.nano_capacity(root).headroom_kbps == 0);

  engine.release_slice(c2);
  CHECK(engine.nano_capacity(root).headroom_kbps == mbps_to_kbps(40));
  CHECK(engine.nanos().find(c2) == nullptr);  // nano died with the slice
  CHECK(engine.audit().empty());
}

TEST_CASE("latency bound: loosening always allowed, tightening checked") {
  Engine engine = t3_engine();
  SliceId id = deploy(engine, spec("a1", "c2", 100, 50));
  engine.nano_set_latency_bound(id, "tenant-a", ms_to_micros(100));
  CHECK(engine.tree().at(id).spec.latency_bound_us == ms_to_micros(100));

  // The plan runs at 12 ms: a 15 ms bound is a legal tightening, 5 ms is
  // not.
  engine.nano_set_latency_bound(id, "tenant-a", ms_to_micros(15));
  CHECK(engine.tree().at(id).spec.latency_bound_us == ms_to_micros(15));
  try {
    engine.nano_set_latency_bound(id, "tenant-a", ms_to_micros(5));
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "latency");
  }
  CHECK(engine.tree().at(id).spec.latency_bound_us == ms_to_micros(15));
}

TEST_CASE("property: random non-owner calls never move any ledger") {
  std::mt19937_64 rng(41);
  Engine engine = t3_engine();
  SliceId root = deploy(engine, spec("a1", "c2", 100, 50));
  SliceId child = deploy(engine, spec("a1", "b2", 30, 20), root);

  nlohmann::json before_tree = engine.tree().to_snapshot();
  nlohmann::json before_topo = engine.topology().to_snapshot();

  for (int i = 0; i < 50; ++i) {
    std::string caller = "mallory-" + std::to_string(rng() % 5);
    SliceId target = (rng() % 2 == 0) ? root : child;
    int op = static_cast<int>(rng() % 3);
    try {
      if (op == 0) {
        engine.nano_resize(target, caller, mbps_to_kbps(1 + rng() % 200));
      } else if (op == 1) {
        engine.nano_create_subslice(target, caller, spec("a1", "b2", 1, 20));
      } else {
        engine.nano_set_latency_bound(target, caller, ms_to_micros(9));
      }
      FAIL("expected authorization error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::authorization);
    }
  }
  CHECK(engine.tree().to_snapshot().dump() == before_tree.dump());
  CHECK(engine.topology().to_snapshot().dump() == before_topo.dump());
}

TEST_CASE("nano lifecycle is slaved to the slice lifecycle") {
  Engine engine = t3_engine();
  SliceId root = deploy(engine, spec("a1", "c2", 100, 50));
  SliceId child = deploy(engine, spec("a1", "b2", 30, 20), root);
  CHECK(engine.nanos().all().size() == 2);

  engine.release_slice(root);  // subtree teardown
  CHECK(engine.nanos().all().empty());
  CHECK(engine.tree().empty());
  CHECK(engine.audit().empty());
  CHECK(engine.nanos().find(child) == nullptr);
}
