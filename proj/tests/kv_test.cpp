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

#include "nasor/errors.hpp"
#include "nasor/kv.hpp"

using namespace nasor;

TEST_CASE("CAS create, update, and conflict") {
  KvRepository repo;
  CHECK(repo.put_cas("k", "v1", 0) == 1);
  CHECK(repo.get("k")->version == 1);
  CHECK(repo.get("k")->value == "v1");

  // Wrong expected version: no write, no version bump.
  CHECK(!repo.put_cas("k", "v2", 0).has_value());
  CHECK(!repo.put_cas("k", "v2", 2).has_value());
  CHECK(repo.get("k")->value == "v1");

  CHECK(repo.put_cas("k", "v2", 1) == 2);
  CHECK(repo.get("k")->version == 2);
}

TEST_CASE("versions increment by exactly one per successful write") {
  KvRepository repo;
  std::uint64_t expected = 0;
  for (int i = 0; i < 20; ++i) {
    auto v = repo.put_cas("key", "v" + std::to_string(i), expected);
    REQUIRE(v.has_value());
    CHECK(*v == expected + 1);
    expected = *v;
  }
}

TEST_CASE("no two writers succeed on the same (key, version)") {
  KvRepository repo;
  repo.put_cas("shared", "base", 0);
  std::mt19937_64 rng(3);
  int successes_per_version = 0;
  for (int round = 0; round < 200; ++round) {
    std::uint64_t current = repo.get("shared")->version;
    // Two writers race on the same observed version.
    bool first_wins = rng() % 2 == 0;
    auto a = repo.put_cas("shared", "a" + std::to_string(round), current);
    auto b = repo.put_cas("shared", "b" + std::to_string(round), current);
    CHECK(a.has_value() != b.has_value());
    (void)first_wins;
    successes_per_version += (a.has_value() ? 1 : 0) + (b.has_value() ? 1 : 0);
  }
  CHECK(successes_per_version == 200);
}

TEST_CASE("watches deliver every committed write once, in order") {
  KvRepository repo;
  auto sub = repo.subscribe("tx/");
  repo.put_cas("tx/1/request", "r1", 0);
  repo.put_cas("capacity/65001", "cap", 0);  // outside the prefix
  repo.put_cas("tx/1/phase", "p1", 0);
  repo.put_cas("tx/1/phase", "p2", 1);

  auto events = repo.drain(sub);
  REQUIRE(events.size() == 3);
  CHECK(events[0].key == "tx/1/request");
  CHECK(events[1].key == "tx/1/phase");
  CHECK(events[1].version == 1);
  CHECK(events[2].key == "tx/1/phase");
  CHECK(events[2].version == 2);
  CHECK(events[0].seq < events[1].seq);
  CHECK(events[1].seq < events[2].seq);

  // Exactly once: a second drain is empty.
  CHECK(repo.drain(sub).empty());
}

TEST_CASE("multiple subscribers each get their own stream") {
  KvRepository repo;
  auto s1 = repo.subscribe("a/");
  auto s2 = repo.subscribe("a/");
  auto s3 = repo.subscribe("b/");
  repo.put_cas("a/x", "1", 0);
  repo.put_cas("b/y", "2", 0);
  CHECK(repo.drain(s1).size() == 1);
  CHECK(repo.drain(s2).size() == 1);
  CHECK(repo.drain(s3).size() == 1);
}

TEST_CASE("watch completeness under randomized write storms") {
  KvRepository repo;
  auto sub = repo.subscribe("tx/");
  std::mt19937_64 rng(9);
  std::vector<std::pair<std::string, std::uint64_t>> committed;
  for (int i = 0; i < 300; ++i) {
    std::string key = "tx/" + std::to_string(rng() % 10) + "/state";
    auto rec = repo.get(key);
    std::uint64_t expected = rec ? rec->version : 0;
    // Occasionally use a stale version: that write must not surface.
    if (rng() % 4 == 0 && expected > 0) expected -= 1;
    auto v = repo.put_cas(key, "v" + std::to_string(i), expected);
    if (v) committed.push_back({key, *v});
  }
  auto events = repo.drain(sub);
  REQUIRE(events.size() == committed.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    CHECK(events[i].key == committed[i].first);
    CHECK(events[i].version == committed[i].second);
    if (i > 0) CHECK(events[i].seq > events[i - 1].seq);
  }
}

TEST_CASE("scan returns the prefix sorted by key") {
  KvRepository repo;
  repo.put_cas("tx/2/a", "2", 0);
  repo.put_cas("tx/1/a", "1", 0);
  repo.put_cas("ty/0", "x", 0);
  auto recs = repo.scan("tx/");
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].key == "tx/1/a");
  CHECK(recs[1].key == "tx/2/a");
}

TEST_CASE("put_retry rides out injected CAS conflicts") {
  KvRepository repo;
  repo.inject_cas_conflicts("capacity/", 3);
  CHECK(repo.put_retry("capacity/65001", "ad") == 1);

  repo.inject_cas_conflicts("capacity/", 12);
  CHECK_THROWS_AS(repo.put_retry("capacity/65001", "ad2"), Error);
}

TEST_CASE("snapshot round-trip preserves records and pending watches") {
  KvRepository repo;
  auto sub = repo.subscribe("tx/");
  repo.put_cas("tx/1/request", "r", 0);
  repo.put_cas("tx/1/phase", "p", 0);

  KvRepository restored = KvRepository::from_snapshot(repo.to_snapshot());
  CHECK(restored.get("tx/1/request")->value == "r");
  CHECK(restored.commit_seq() == repo.commit_seq());
  CHECK(restored.to_snapshot() == repo.to_snapshot());
  auto events = restored.drain(sub);
  CHECK(events.size() == 2);
}
