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

#ifndef NASOR_KV_HPP_
#define NASOR_KV_HPP_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nasor {

struct KvRecord {
  std::string key;
  std::string value;
  std::uint64_t version = 0;  // increments by exactly 1 per successful write
};

struct WatchEvent {
  std::string key;
  std::string value;
  std::uint64_t version = 0;
  std::uint64_t seq = 0;  // global commit order
};

// Versioned key-value repository with compare-and-swap writes and
// prefix watches. Logically centralized; the orchestrators' only shared
// state.
class KvRepository {
 public:
  using SubscriberId = std::uint32_t;

  std::optional<KvRecord> get(const std::string& key) const;

  // Compare-and-swap. expected_version 0 creates the key; otherwise the
  // write succeeds only when expected_version equals the current
  // version. Returns the new version, or nullopt on conflict.
  std::optional<std::uint64_t> put_cas(const std::string& key,
                                       std::string value,
                                       std::uint64_t expected_version);

  // Read-modify-write helper with bounded retries. Conflicts are counted
  // so tests can observe contention. Throws after max_attempts.
  std::uint64_t put_retry(const std::string& key, const std::string& value,
                          int max_attempts = 10);

  SubscriberId subscribe(std::string prefix);
  std::vector<WatchEvent> drain(SubscriberId id);

  // All records under a prefix, sorted by key.
  std::vector<KvRecord> scan(const std::string& prefix) const;

  std::uint64_t commit_seq() const { return commit_seq_; }

  // Test hook: fail the next `count` CAS writes whose key starts with
  // `prefix`, simulating lost races.
  void inject_cas_conflicts(std::string prefix, int count);

  nlohmann::json to_snapshot() const;
  static KvRepository from_snapshot(const nlohmann::json& j);

 private:
  struct Subscriber {
    std::string prefix;
    std::deque<WatchEvent> queue;
  };

  std::map<std::string, KvRecord> records_;
  std::map<SubscriberId, Subscriber> subscribers_;
  SubscriberId next_subscriber_ = 1;
  std::uint64_t commit_seq_ = 0;
  std::string conflict_prefix_;
  int conflict_count_ = 0;
};

}  // namespace nasor

#endif  // NASOR_KV_HPP_
