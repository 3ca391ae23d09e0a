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

#ifndef NASOR_HARNESS_HPP_
#define NASOR_HARNESS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nasor/engine.hpp"
#include "nasor/slicing.hpp"
#include "nasor/units.hpp"

namespace nasor {

// One slice-attached traffic demand in the fluid model.
struct Flow {
  std::string flow_id;
  SliceId slice;
  Kbps offered_kbps = 0;
  std::int64_t start_tick = 0;
  std::int64_t duration_ticks = 0;

  bool active_at(std::int64_t tick) const {
    return tick >= start_tick && tick < start_tick + duration_ticks;
  }
};

struct ScriptEvent {
  std::int64_t tick = 0;
  std::string action;  // deploy | subslice | resize | release | flow | fault
  nlohmann::json payload;
};

struct SimulationScript {
  std::uint64_t seed = 0;
  std::vector<ScriptEvent> events;

  static SimulationScript from_json(const nlohmann::json& doc);
  static SimulationScript from_string(std::string_view text);
  nlohmann::json to_json() const;
};

struct LogEntry {
  std::int64_t tick = 0;
  std::uint64_t seq = 0;
  std::string actor;
  std::string event;
  nlohmann::json payload;
};

struct EventLog {
  std::vector<LogEntry> entries;

  // Line-delimited records, one JSON object per event.
  std::string to_jsonl() const;
};

struct RunResult {
  EventLog log;
  std::vector<Violation> violations;
  // Per-slice delivered series (one sample per tick with active flows),
  // for differential isolation checks.
  std::map<SliceId, std::vector<std::pair<std::int64_t, Kbps>>>
      delivered_series;
};

// Per-tick fluid shares: every slice with traffic delivers
// min(sum offered, own usable bandwidth), split among its flows
// proportionally to offered rates (largest-remainder rounding keeps the
// split exact in kbps). A slice's own usable bandwidth excludes what its
// children hold, so sibling and child traffic can never displace it.
std::map<std::string, Kbps> delivered_rates(
    const SliceTree& tree, const std::vector<const Flow*>& active_flows);

// Executes the script against the engine: applies each tick's events,
// runs a scheduler round, evaluates flows, audits invariants, and logs
// every step. Runs until events are exhausted, flows drained, and no
// transaction is live. resume=true continues a restored engine without
// re-seeding or re-emitting the init marker.
RunResult run_script(Engine& engine, const SimulationScript& script,
                     bool resume = false);

// Violations distilled from a completed run: scripted audits plus a
// final-state audit.
std::vector<Violation> isolation_report(const EventLog& log,
                                        const Engine& final_state);

}  // namespace nasor

#endif  // NASOR_HARNESS_HPP_
