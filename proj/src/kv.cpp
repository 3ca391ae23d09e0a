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

#include "nasor/kv.hpp"

#include "nasor/errors.hpp"
#include "nasor/json_util.hpp"

namespace nasor {

std::optional<KvRecord> KvRepository::get(const std::string& key) const {
  auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint64_t> KvRepository::put_cas(
    const std::string& key, std::string value, std::uint64_t expected_version) {
  if (conflict_count_ > 0 && key.starts_with(conflict_prefix_)) {
    --conflict_count_;
    return std::nullopt;
  }
  auto it = records_.find(key);
  std::uint64_t current = it == records_.end() ? 0 : it->second.version;
  if (expected_version != current) return std::nullopt;

  std::uint64_t next = current + 1;
  KvRecord rec{key, std::move(value), next};
  if (it == records_.end()) {
    records_.emplace(key, rec);
  } else {
    it->second = rec;
  }
  ++commit_seq_;
  for (auto& [sid, sub] : subscribers_) {
    if (key.starts_with(sub.prefix)) {
      sub.queue.push_back({key, rec.value, next, commit_seq_});
    }
  }
  return next;
}

std::uint64_t KvRepository::put_retry(const std::string& key,
                                      const std::string& value,
                                      int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    auto rec = get(key);
    std::uint64_t expected = rec ? rec->version : 0;
    if (auto v = put_cas(key, value, expected)) return *v;
  }
  throw Error(Errc::protocol,
              "compare-and-swap on `" + key + "` failed after " +
                  std::to_string(max_attempts) + " attempts");
}

KvRepository::SubscriberId KvRepository::subscribe(std::string prefix) {
  SubscriberId id = next_subscriber_++;
  subscribers_.emplace(id, Subscriber{std::move(prefix), {}});
  return id;
}

std::vector<WatchEvent> KvRepository::drain(SubscriberId id) {
  auto it = subscribers_.find(id);
  if (it == subscribers_.end()) {
    throw Error(Errc::unknown_entity,
                "unknown watch subscriber " + std::to_string(id));
  }
  std::vector<WatchEvent> out(it->second.queue.begin(),
                              it->second.queue.end());
  it->second.queue.clear();
  return out;
}

std::vector<KvRecord> KvRepository::scan(const std::string& prefix) const {
  std::vector<KvRecord> out;
  for (auto it = records_.lower_bound(prefix);
       it != records_.end() && it->first.starts_with(prefix); ++it) {
    out.push_back(it->second);
  }
  return out;
}

void KvRepository::inject_cas_conflicts(std::string prefix, int count) {
  conflict_prefix_ = std::move(prefix);
  conflict_count_ = count;
}

nlohmann::json KvRepository::to_snapshot() const {
  nlohmann::json j;
  j["commit_seq"] = commit_seq_;
  j["next_subscriber"] = next_subscriber_;
  j["records"] = nlohmann::json::array();
  for (const auto& [key, rec] : records_) {
    j["records"].push_back(
        {{"key", rec.key}, {"value", rec.value}, {"version", rec.version}});
  }
  j["subscribers"] = nlohmann::json::array();
  for (const auto& [sid, sub] : subscribers_) {
    nlohmann::json sj;
    sj["id"] = sid;
    sj["prefix"] = sub.prefix;
    sj["queue"] = nlohmann::json::array();
    for (const auto& ev : sub.queue) {
      sj["queue"].push_back({{"key", ev.key},
                             {"value", ev.value},
                             {"version", ev.version},
                             {"seq", ev.seq}});
    }
    j["subscribers"].push_back(std::move(sj));
  }
  return j;
}

KvRepository KvRepository::from_snapshot(const nlohmann::json& j) {
  KvRepository repo;
  repo.commit_seq_ = jsonutil::require_int64(j, "commit_seq");
  repo.next_subscriber_ = jsonutil::require_uint(j, "next_subscriber");
  for (const auto& rj : jsonutil::require_array(j, "records")) {
    KvRecord rec;
    rec.key = jsonutil::require_string(rj, "key");
    rec.value = jsonutil::require_string(rj, "value");
    rec.version = jsonutil::require_int64(rj, "version");
    repo.records_.emplace(rec.key, rec);
  }
  for (const auto& sj : jsonutil::require_array(j, "subscribers")) {
    Subscriber sub;
    SubscriberId id = jsonutil::require_uint(sj, "id");
    sub.prefix = jsonutil::require_string(sj, "prefix");
    for (const auto& ej : jsonutil::require_array(sj, "queue")) {
      WatchEvent ev;
      ev.key = jsonutil::require_string(ej, "key");
      ev.value = jsonutil::require_string(ej, "value");
      ev.version = jsonutil::require_int64(ej, "version");
      ev.seq = jsonutil::require_int64(ej, "seq");
      sub.queue.push_back(std::move(ev));
    }
    repo.subscribers_.emplace(id, std::move(sub));
  }
  return repo;
}

}  // namespace nasor
