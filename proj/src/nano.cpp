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

#include "nasor/nano.hpp"

#include "nasor/errors.hpp"
#include "nasor/json_util.hpp"

namespace nasor {

Nano& NanoRegistry::instantiate(const SliceId& id, const std::string& owner) {
  auto [it, inserted] = nanos_.emplace(id, Nano{id, owner, {}});
  if (!inserted) {
    throw Error(Errc::duplicate,
                "nano for slice `" + id.str() + "` already exists");
  }
  return it->second;
}

void NanoRegistry::destroy(const SliceId& id) { nanos_.erase(id); }

const Nano* NanoRegistry::find(const SliceId& id) const {
  auto it = nanos_.find(id);
  return it == nanos_.end() ? nullptr : &it->second;
}

Nano* NanoRegistry::find_mut(const SliceId& id) {
  auto it = nanos_.find(id);
  return it == nanos_.end() ? nullptr : &it->second;
}

nlohmann::json NanoRegistry::to_snapshot() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, nano] : nanos_) {
    j[id.str()] = {{"owner", nano.owner},
                   {"active_ticks", nano.metrics.active_ticks},
                   {"offered_accum_kbps", nano.metrics.offered_accum_kbps},
                   {"delivered_accum_kbps", nano.metrics.delivered_accum_kbps},
                   {"observed_latency_us", nano.metrics.observed_latency_us},
                   {"violation_count", nano.metrics.violation_count}};
  }
  return j;
}

NanoRegistry NanoRegistry::from_snapshot(const nlohmann::json& j) {
  NanoRegistry reg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    Nano nano;
    nano.slice_id = SliceId::parse(it.key());
    const auto& nj = it.value();
    nano.owner = jsonutil::require_string(nj, "owner");
    nano.metrics.active_ticks = jsonutil::require_int64(nj, "active_ticks");
    nano.metrics.offered_accum_kbps =
        jsonutil::require_int64(nj, "offered_accum_kbps");
    nano.metrics.delivered_accum_kbps =
        jsonutil::require_int64(nj, "delivered_accum_kbps");
    nano.metrics.observed_latency_us =
        jsonutil::require_int64(nj, "observed_latency_us");
    nano.metrics.violation_count =
        jsonutil::require_int64(nj, "violation_count");
    reg.nanos_.emplace(nano.slice_id, std::move(nano));
  }
  return reg;
}

}  // namespace nasor
