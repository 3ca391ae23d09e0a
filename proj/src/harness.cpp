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

#include "nasor/harness.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "nasor/errors.hpp"
#include "nasor/json_util.hpp"

namespace nasor {

SimulationScript SimulationScript::from_json(const nlohmann::json& doc) {
  SimulationScript script;
  script.seed = jsonutil::require_int64(doc, "seed");
  std::int64_t last_tick = 0;
  for (const auto& ej : jsonutil::require_array(doc, "events")) {
    ScriptEvent ev;
    ev.tick = jsonutil::require_int64(ej, "tick");
    ev.action = jsonutil::require_string(ej, "action");
    if (ev.tick < last_tick) {
      throw Error(Errc::parse, "script ticks must be non-decreasing");
    }
    last_tick = ev.tick;
    ev.payload = ej;
    ev.payload.erase("tick");
    ev.payload.erase("action");
    script.events.push_back(std::move(ev));
  }
  return script;
}

SimulationScript SimulationScript::from_string(std::string_view text) {
  return from_json(jsonutil::parse_text(text));
}

nlohmann::json SimulationScript::to_json() const {
  nlohmann::json doc;
  doc["seed"] = seed;
  doc["events"] = nlohmann::json::array();
  for (const auto& ev : events) {
    nlohmann::json ej = ev.payload;
    ej["tick"] = ev.tick;
    ej["action"] = ev.action;
    doc["events"].push_back(std::move(ej));
  }
  return doc;
}

std::string EventLog::to_jsonl() const {
  std::string out;
  for (const auto& e : entries) {
    nlohmann::json j;
    j["tick"] = e.tick;
    j["seq"] = e.seq;
    j["actor"] = e.actor;
    j["event"] = e.event;
    j["payload"] = e.payload;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::map<std::string, Kbps> delivered_rates(
    const SliceTree& tree, const std::vector<const Flow*>& active_flows) {
  // Group per slice, keeping flow order stable by flow id.
  std::map<SliceId, std::vector<const Flow*>> by_slice;
  for (const Flow* f : active_flows) by_slice[f->slice].push_back(f);

  std::map<std::string, Kbps> shares;
  for (auto& [slice_id, flows] : by_slice) {
    std::sort(flows.begin(), flows.end(),
              [](const Flow* a, const Flow* b) {
                return a->flow_id < b->flow_id;
              });
    const Slice* s = tree.find(slice_id);
    if (s == nullptr || s->state != SliceState::Active) {
      for (const Flow* f : flows) shares[f->flow_id] = 0;
      continue;
    }
    Kbps offered_total = 0;
    for (const Flow* f : flows) offered_total += f->offered_kbps;
    // Own usable bandwidth excludes the share committed to children, so
    // sibling and child deliveries stay independent and links conserve.
    Kbps usable = s->allocated_kbps - s->child_committed_kbps;
    Kbps delivered = std::min(offered_total, usable);
    if (offered_total == 0) {
      for (const Flow* f : flows) shares[f->flow_id] = 0;
      continue;
    }

    // Proportional split, exact in kbps via largest remainder.
    std::vector<Kbps> floors(flows.size());
    std::vector<std::pair<Kbps, std::size_t>> remainders;
    Kbps assigned = 0;
    for (std::size_t i = 0; i < flows.size(); ++i) {
      Kbps numer = delivered * flows[i]->offered_kbps;
      floors[i] = numer / offered_total;
      assigned += floors[i];
      remainders.push_back({numer % offered_total, i});
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
              });
    Kbps leftover = delivered - assigned;
    for (std::size_t k = 0; k < remainders.size() && leftover > 0;
         ++k, --leftover) {
      floors[remainders[k].second] += 1;
    }
    for (std::size_t i = 0; i < flows.size(); ++i) {
      shares[flows[i]->flow_id] = floors[i];
    }
  }
  return shares;
}

namespace {

struct ScriptRunner {
  Engine& engine;
  RunResult result;
  std::uint64_t seq = 0;
  std::vector<Flow> flows;
  std::set<std::string> dead_flows;
  std::set<std::pair<std::string, std::string>> seen_violations;
  int flow_counter = 0;

  void log(std::int64_t tick, std::string_view actor, std::string_view event,
           nlohmann::json payload) {
    result.log.entries.push_back({tick, seq++, std::string(actor),
                                  std::string(event), std::move(payload)});
  }

  void violation(std::int64_t tick, const std::string& code,
                 const std::string& detail) {
    // A standing breach (e.g. a corrupted ledger) reappears every tick;
    // report it once, at the tick it first surfaced.
    if (!seen_violations.insert({code, detail}).second) return;
    result.violations.push_back({code, detail});
    log(tick, "harness", "violation", {{"code", code}, {"detail", detail}});
  }

  void apply_event(const ScriptEvent& ev) {
    std::int64_t t = engine.tick();
    try {
      if (ev.action == "deploy") {
        SliceSpec spec =
            SliceSpec::from_json(jsonutil::require(ev.payload, "request"));
        std::string txid = engine.submit(spec, std::nullopt);
        log(t, "harness", "script_deploy", {{"txid", txid}});
      } else if (ev.action == "subslice") {
        SliceSpec spec =
            SliceSpec::from_json(jsonutil::require(ev.payload, "request"));
        SliceId parent =
            SliceId::parse(jsonutil::require_string(ev.payload, "parent"));
        std::string txid = engine.submit(spec, parent);
        log(t, "harness", "script_subslice", {{"txid", txid}});
      } else if (ev.action == "resize") {
        SliceId id =
            SliceId::parse(jsonutil::require_string(ev.payload, "slice"));
        Kbps bw =
            mbps_to_kbps(jsonutil::require_number(ev.payload, "bandwidth_mbps"));
        engine.resize_slice(id, bw);
      } else if (ev.action == "release") {
        SliceId id =
            SliceId::parse(jsonutil::require_string(ev.payload, "slice"));
        engine.release_slice(id);
      } else if (ev.action == "flow") {
        Flow f;
        f.flow_id = "f" + std::to_string(++flow_counter);
        f.slice = SliceId::parse(jsonutil::require_string(ev.payload, "slice"));
        f.offered_kbps =
            mbps_to_kbps(jsonutil::require_number(ev.payload, "offered_mbps"));
        f.start_tick = t;
        f.duration_ticks = jsonutil::require_int64(ev.payload, "duration_ticks");
        log(t, "harness", "flow_start",
            {{"flow", f.flow_id},
             {"slice", f.slice.str()},
             {"offered_mbps", kbps_to_mbps(f.offered_kbps)},
             {"duration_ticks", f.duration_ticks}});
        flows.push_back(std::move(f));
      } else if (ev.action == "fault") {
        apply_fault(ev);
      } else {
        log(t, "harness", "script_rejected",
            {{"reason", "unknown action `" + ev.action + "`"}});
      }
    } catch (const Error& e) {
      log(t, "harness", "script_rejected",
          {{"action", ev.action}, {"reason", e.what()}});
    }
  }

  void apply_fault(const ScriptEvent& ev) {
    std::int64_t t = engine.tick();
    std::string kind = jsonutil::require_string(ev.payload, "fault");
    if (kind == "refuse") {
      std::uint32_t asn = jsonutil::require_uint(ev.payload, "asn");
      int count = static_cast<int>(jsonutil::require_int64(ev.payload, "count"));
      engine.faults().forced_refusals[asn] += count;
    } else if (kind == "refusal_probability") {
      engine.faults().refusal_probability =
          jsonutil::require_number(ev.payload, "value");
    } else if (kind == "stall_probability") {
      engine.faults().stall_probability =
          jsonutil::require_number(ev.payload, "value");
    } else if (kind == "drop_sft") {
      std::string router = jsonutil::require_string(ev.payload, "router");
      SliceId id =
          SliceId::parse(jsonutil::require_string(ev.payload, "slice"));
      engine.sfts_mut().remove(router, id);
    } else if (kind == "corrupt_reservation") {
      // Ledger corruption hook: an unattributed reservation that the
      // conservation audit must flag.
      std::string link = jsonutil::require_string(ev.payload, "link");
      Kbps delta =
          mbps_to_kbps(jsonutil::require_number(ev.payload, "delta_mbps"));
      engine.topology_mut().reserve(link, delta);
    } else if (kind == "cas_conflict") {
      engine.repo_mut().inject_cas_conflicts(
          jsonutil::require_string(ev.payload, "prefix"),
          static_cast<int>(jsonutil::require_int64(ev.payload, "count")));
    } else {
      throw Error(Errc::parse, "unknown fault kind `" + kind + "`");
    }
    log(t, "harness", "fault_injected", ev.payload);
  }

  // Fluid-model evaluation for one tick; returns whether any flow was
  // active.
  bool evaluate_flows(std::int64_t t) {
    std::vector<const Flow*> active;
    for (Flow& f : flows) {
      if (!f.active_at(t) || dead_flows.contains(f.flow_id)) continue;
      const Slice* s = engine.tree().find(f.slice);
      bool live = s != nullptr && s->state == SliceState::Active;
      if (!live) {
        if (t == f.start_tick) {
          log(t, "harness", "flow_rejected",
              {{"flow", f.flow_id},
               {"slice", f.slice.str()},
               {"reason", "slice not active"}});
          dead_flows.insert(f.flow_id);
        }
        continue;
      }
      active.push_back(&f);
    }
    if (active.empty()) return false;

    std::map<std::string, Kbps> shares =
        delivered_rates(engine.tree(), active);

    // Per-slice totals and substrate usage.
    std::map<SliceId, Kbps> slice_offered;
    std::map<SliceId, Kbps> slice_delivered;
    for (const Flow* f : active) {
      slice_offered[f->slice] += f->offered_kbps;
      slice_delivered[f->slice] += shares.at(f->flow_id);
    }

    std::map<std::string, Kbps> link_load;
    nlohmann::json slices_payload = nlohmann::json::array();
    for (const auto& [sid, delivered] : slice_delivered) {
      const Slice& s = engine.tree().at(sid);
      if (delivered > s.allocated_kbps) {
        violation(t, "delivery_above_allocation",
                  "slice `" + sid.str() + "` delivered " +
                      format_mbps(delivered) + " Mbps over allocation " +
                      format_mbps(s.allocated_kbps) + " Mbps");
      }
      for (const auto& h : s.plan.hops) link_load[h.link_id] += delivered;
      result.delivered_series[sid].push_back({t, delivered});

      if (Nano* nano = engine.nanos_mut().find_mut(sid)) {
        nano->metrics.active_ticks += 1;
        nano->metrics.offered_accum_kbps += slice_offered.at(sid);
        nano->metrics.delivered_accum_kbps += delivered;
        nano->metrics.observed_latency_us = s.plan.total_latency_us;
        if (s.plan.total_latency_us > s.spec.latency_bound_us) {
          nano->metrics.violation_count += 1;
          violation(t, "latency_bound",
                    "slice `" + sid.str() + "` latency above bound");
        }
      }

      nlohmann::json sj;
      sj["slice"] = sid.str();
      sj["offered_mbps"] = kbps_to_mbps(slice_offered.at(sid));
      sj["delivered_mbps"] = kbps_to_mbps(delivered);
      sj["flows"] = nlohmann::json::array();
      for (const Flow* f : active) {
        if (f->slice != sid) continue;
        sj["flows"].push_back(
            {{"flow", f->flow_id},
             {"delivered_mbps", kbps_to_mbps(shares.at(f->flow_id))}});
      }
      slices_payload.push_back(std::move(sj));
    }
    log(t, "harness", "flow_delivered", {{"slices", slices_payload}});

    for (const auto& [link, load] : link_load) {
      if (load > engine.topology().link(link).capacity_kbps) {
        violation(t, "link_over_capacity",
                  "link `" + link + "` carries " + format_mbps(load) +
                      " Mbps over capacity");
      }
    }
    return true;
  }

  bool flows_pending(std::int64_t t) const {
    for (const Flow& f : flows) {
      if (dead_flows.contains(f.flow_id)) continue;
      if (t < f.start_tick + f.duration_ticks) return true;
    }
    return false;
  }
};

}  // namespace

RunResult run_script(Engine& engine, const SimulationScript& script,
                     bool resume) {
  ScriptRunner runner{engine};
  engine.set_event_fn([&runner](std::int64_t tick, std::string_view actor,
                                std::string_view event,
                                nlohmann::json payload) {
    runner.log(tick, actor, event, std::move(payload));
  });

  if (!resume) {
    engine.set_script_seed(script.seed);
    runner.log(engine.tick(), "harness", "init", {{"seed", script.seed}});
  }

  std::size_t next_event = 0;
  for (int guard = 0; guard < 1000000; ++guard) {
    std::int64_t t = engine.tick();
    while (next_event < script.events.size() &&
           script.events[next_event].tick <= t) {
      runner.apply_event(script.events[next_event++]);
    }

    bool work_left = next_event < script.events.size() ||
                     engine.has_live_tx() || runner.flows_pending(t);
    if (!work_left) break;

    engine.run_round();
    runner.evaluate_flows(t);

    for (const Violation& v : engine.audit()) {
      runner.violation(t, v.code, v.detail);
    }
  }

  for (const Violation& v : engine.audit()) {
    runner.violation(engine.tick(), "final_" + v.code, v.detail);
  }
  runner.log(engine.tick(), "harness", "quiesce",
             {{"violations", runner.result.violations.size()}});
  engine.set_event_fn(nullptr);
  return std::move(runner.result);
}

std::vector<Violation> isolation_report(const EventLog& log,
                                        const Engine& final_state) {
  std::vector<Violation> out;
  for (const LogEntry& e : log.entries) {
    if (e.event == "violation") {
      out.push_back({e.payload.at("code").get<std::string>(),
                     e.payload.at("detail").get<std::string>()});
    }
  }
  for (const Violation& v : final_state.audit()) {
    out.push_back({"final_" + v.code, v.detail});
  }
  return out;
}

}  // namespace nasor
