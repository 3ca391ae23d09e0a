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

#ifndef NASOR_NANO_HPP_
#define NASOR_NANO_HPP_

#include <map>
#include <string>

#include <json.hpp>

#include "nasor/slicing.hpp"
#include "nasor/units.hpp"

namespace nasor {

// Ledger-consistent capacity view of one slice at read time.
struct SliceCapacity {
  Kbps allocated_kbps = 0;
  Kbps headroom_kbps = 0;
  Micros path_latency_us = 0;
};

// Harness-aggregated traffic observations. Rates are kept as exact
// per-tick accumulators; the averaged views are derived.
struct SliceMetrics {
  std::int64_t active_ticks = 0;
  std::int64_t offered_accum_kbps = 0;
  std::int64_t delivered_accum_kbps = 0;
  Micros observed_latency_us = 0;
  std::int64_t violation_count = 0;

  double offered_mbps() const {
    return active_ticks == 0
               ? 0.0
               : static_cast<double>(offered_accum_kbps) /
                     (1000.0 * static_cast<double>(active_ticks));
  }
  double delivered_mbps() const {
    return active_ticks == 0
               ? 0.0
               : static_cast<double>(delivered_accum_kbps) /
                     (1000.0 * static_cast<double>(active_ticks));
  }

  bool operator==(const SliceMetrics&) const = default;
};

// Per-slice private orchestrator record. A facade: resource truth stays
// in the slice tree, so the Nano carries only identity, ownership, and
// traffic observations. Configuration, capacity, and children are read
// through the engine against the ledger.
struct Nano {
  SliceId slice_id;
  std::string owner;
  SliceMetrics metrics;
};

class NanoRegistry {
 public:
  // Registered when its slice turns Active; rejects duplicates.
  Nano& instantiate(const SliceId& id, const std::string& owner);
  void destroy(const SliceId& id);
  const Nano* find(const SliceId& id) const;
  Nano* find_mut(const SliceId& id);
  const std::map<SliceId, Nano>& all() const { return nanos_; }

  nlohmann::json to_snapshot() const;
  static NanoRegistry from_snapshot(const nlohmann::json& j);

 private:
  std::map<SliceId, Nano> nanos_;
};

}  // namespace nasor

#endif  // NASOR_NANO_HPP_
