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

// Operator-facing front end: loads a topology or a state snapshot, runs
// one command, and (when --state is given) persists the state back.
//
// Exit codes: 0 ok, 1 domain-level rejection, 2 input error,
// 3 invariant violation detected.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nasor/engine.hpp"
#include "nasor/errors.hpp"
#include "nasor/harness.hpp"
#include "nasor/json_util.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRejected = 1;
constexpr int kExitInput = 2;
constexpr int kExitViolation = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw nasor::Error(nasor::Errc::parse, "cannot read `" + path + "`");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw nasor::Error(nasor::Errc::parse, "cannot write `" + path + "`");
  }
  out << content;
}

struct RequestDocument {
  nasor::SliceSpec spec;
  std::optional<nasor::SliceId> parent;
};

RequestDocument parse_request(const std::string& path) {
  nlohmann::json doc = nasor::jsonutil::parse_text(read_file(path));
  RequestDocument req;
  req.spec = nasor::SliceSpec::from_json(doc);
  if (doc.contains("parent_slice") && !doc.at("parent_slice").is_null()) {
    req.parent =
        nasor::SliceId::parse(doc.at("parent_slice").get<std::string>());
  }
  return req;
}

int run_deploy(nasor::Engine& engine, const RequestDocument& req,
               bool no_wait) {
  std::string txid = engine.submit(req.spec, req.parent);
  std::cout << "txid\t" << txid << "\n";
  if (no_wait) return kExitOk;

  nasor::DeploymentTransaction tx = engine.drive(txid);
  std::cout << "phase\t" << nasor::tx_phase_name(tx.phase) << "\n";
  for (const auto& [asn, state] : tx.per_domain) {
    std::cout << "domain\t" << asn << "\t"
              << nasor::domain_tx_state_name(state) << "\n";
  }
  if (tx.phase == nasor::TxPhase::Done) {
    std::cout << "slice\t" << tx.slice_id->str() << "\n";
    return kExitOk;
  }
  std::cout << "reason\t" << tx.reason << "\n";
  return kExitRejected;
}

int run_show(const nasor::Engine& engine,
             const std::vector<std::string>& selector) {
  if (selector.empty()) {
    std::cerr << "error\tmissing selector\n";
    return kExitInput;
  }
  const std::string& what = selector.front();

  if (what == "slices") {
    std::cout << "id\tparent\tstate\tsrc\tdst\tbandwidth_mbps\tallocated_mbps"
                 "\theadroom_mbps\tlatency_ms\towner\n";
    for (const auto& [id, s] : engine.tree().slices()) {
      std::cout << id.str() << "\t"
                << (s.parent ? s.parent->str() : std::string("-")) << "\t"
                << nasor::slice_state_name(s.state) << "\t" << s.spec.src_node
                << "\t" << s.spec.dst_node << "\t"
                << nasor::format_mbps(s.spec.bandwidth_kbps) << "\t"
                << nasor::format_mbps(s.allocated_kbps) << "\t"
                << nasor::format_mbps(s.headroom_kbps()) << "\t"
                << nasor::format_ms(s.plan.total_latency_us) << "\t"
                << s.spec.owner << "\n";
    }
    return kExitOk;
  }
  if (what == "sft") {
    if (selector.size() != 2) {
      std::cerr << "error\tusage: show sft <router>\n";
      return kExitInput;
    }
    if (!engine.topology().has_router(selector[1])) {
      std::cerr << "error\tunknown router `" << selector[1] << "`\n";
      return kExitInput;
    }
    std::cout << "slice\tout_link\tremaining_segments\n";
    auto it = engine.sfts().tables().find(selector[1]);
    if (it != engine.sfts().tables().end()) {
      for (const auto& [id, entry] : it->second) {
        std::cout << id.str() << "\t"
                  << (entry.out_link ? *entry.out_link : std::string("-"))
                  << "\t"
                  << nasor::segment_lists_to_json(entry.remaining_segments)
                         .dump()
                  << "\n";
      }
    }
    return kExitOk;
  }
  if (what == "capacity") {
    std::cout << "asn\tmax_transit_bandwidth_mbps\tmin_transit_latency_ms"
                 "\tborder_count\tepoch\n";
    for (const nasor::KvRecord& rec : engine.repo().scan("capacity/")) {
      nasor::CapacityAdvertisement ad = nasor::CapacityAdvertisement::from_json(
          nasor::jsonutil::parse_text(rec.value));
      std::cout << ad.domain.asn << "\t"
                << nasor::format_mbps(ad.max_transit_bandwidth_kbps) << "\t"
                << nasor::format_ms(ad.min_transit_latency_us) << "\t"
                << ad.border_count << "\t" << ad.epoch << "\n";
    }
    return kExitOk;
  }
  if (what == "tx") {
    if (selector.size() != 2) {
      std::cerr << "error\tusage: show tx <txid>\n";
      return kExitInput;
    }
    nasor::DeploymentTransaction tx =
        nasor::transaction_status(engine.repo(), selector[1]);
    std::cout << "txid\t" << tx.txid << "\n";
    std::cout << "phase\t" << nasor::tx_phase_name(tx.phase) << "\n";
    std::cout << "reason\t" << (tx.reason.empty() ? "-" : tx.reason) << "\n";
    std::cout << "slice\t" << (tx.slice_id ? tx.slice_id->str() : "-") << "\n";
    for (const auto& [asn, state] : tx.per_domain) {
      std::cout << "domain\t" << asn << "\t"
                << nasor::domain_tx_state_name(state) << "\n";
    }
    return kExitOk;
  }
  std::cerr << "error\tunknown selector `" << what << "`\n";
  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nasor: recursive multi-domain network slicing engine"};
  app.require_subcommand(1);

  std::string topology_path;
  std::string state_path;
  std::uint64_t seed = 0;
  app.add_option("--topology", topology_path, "topology document (JSON)");
  app.add_option("--state", state_path,
                 "state snapshot to load and persist back");
  app.add_option("--seed", seed, "scheduler seed for a fresh engine");

  auto* cmd_deploy = app.add_subcommand("deploy", "deploy a slice request");
  std::string deploy_file;
  bool no_wait = false;
  cmd_deploy->add_option("file", deploy_file)->required();
  cmd_deploy->add_flag("--no-wait", no_wait, "print txid and return");

  auto* cmd_subslice =
      app.add_subcommand("subslice", "deploy a child slice inside a parent");
  std::string subslice_parent, subslice_file;
  cmd_subslice->add_option("parent", subslice_parent)->required();
  cmd_subslice->add_option("file", subslice_file)->required();

  auto* cmd_resize = app.add_subcommand("resize", "resize a slice");
  std::string resize_id;
  double resize_mbps = 0;
  cmd_resize->add_option("id", resize_id)->required();
  cmd_resize->add_option("mbps", resize_mbps)->required();

  auto* cmd_delete = app.add_subcommand("delete", "release a slice");
  std::string delete_id;
  cmd_delete->add_option("id", delete_id)->required();

  auto* cmd_show = app.add_subcommand("show", "inspect engine state");
  std::vector<std::string> selector;
  cmd_show->add_option("selector", selector,
                       "slices | sft <router> | capacity | tx <txid>");

  auto* cmd_run = app.add_subcommand("run", "execute a simulation script");
  std::string script_path, log_path;
  cmd_run->add_option("script", script_path)->required();
  cmd_run->add_option("--log", log_path, "event log output path");

  auto* cmd_snapshot = app.add_subcommand("snapshot", "write a state snapshot");
  std::string snapshot_path;
  cmd_snapshot->add_option("file", snapshot_path)->required();

  auto* cmd_restore = app.add_subcommand("restore", "load a state snapshot");
  std::string restore_path;
  cmd_restore->add_option("file", restore_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    // Restore validates before replacing anything, so a corrupt file
    // leaves prior state untouched.
    std::optional<nasor::Engine> engine;
    if (cmd_restore->parsed()) {
      engine = nasor::Engine::from_snapshot(
          nasor::jsonutil::parse_text(read_file(restore_path)));
    } else if (!state_path.empty() && std::filesystem::exists(state_path)) {
      engine = nasor::Engine::from_snapshot(
          nasor::jsonutil::parse_text(read_file(state_path)));
    } else if (!topology_path.empty()) {
      nasor::EngineConfig config;
      config.seed = seed;
      engine = nasor::Engine(
          nasor::Topology::from_string(read_file(topology_path)), config);
    } else {
      std::cerr << "error\tno --topology or --state to load\n";
      return kExitInput;
    }

    int code = kExitOk;
    if (cmd_deploy->parsed()) {
      code = run_deploy(*engine, parse_request(deploy_file), no_wait);
    } else if (cmd_subslice->parsed()) {
      RequestDocument req = parse_request(subslice_file);
      req.parent = nasor::SliceId::parse(subslice_parent);
      code = run_deploy(*engine, req, false);
    } else if (cmd_resize->parsed()) {
      nasor::SliceId id = nasor::SliceId::parse(resize_id);
      try {
        engine->resize_slice(id, nasor::mbps_to_kbps(resize_mbps));
        const nasor::Slice& s = engine->tree().at(id);
        std::cout << "slice\t" << id.str() << "\n";
        std::cout << "allocated_mbps\t" << nasor::format_mbps(s.allocated_kbps)
                  << "\n";
      } catch (const nasor::Error& e) {
        if (e.code() == nasor::Errc::rejected ||
            e.code() == nasor::Errc::state_machine) {
          std::cout << "reason\t" << e.what() << "\n";
          code = kExitRejected;
        } else {
          throw;
        }
      }
    } else if (cmd_delete->parsed()) {
      nasor::SliceId id = nasor::SliceId::parse(delete_id);
      try {
        bool existed = engine->release_slice(id);
        std::cout << (existed ? "deleted\t" : "unknown\t") << id.str() << "\n";
      } catch (const nasor::Error& e) {
        if (e.code() == nasor::Errc::rejected) {
          std::cout << "reason\t" << e.what() << "\n";
          code = kExitRejected;
        } else {
          throw;
        }
      }
    } else if (cmd_show->parsed()) {
      code = run_show(*engine, selector);
    } else if (cmd_run->parsed()) {
      nasor::SimulationScript script =
          nasor::SimulationScript::from_string(read_file(script_path));
      nasor::RunResult result = nasor::run_script(*engine, script);
      std::string out_path =
          log_path.empty() ? script_path + ".log" : log_path;
      write_file(out_path, result.log.to_jsonl());
      std::cout << "log\t" << out_path << "\n";
      for (const nasor::Violation& v : result.violations) {
        std::cout << "violation\t" << v.code << "\t" << v.detail << "\n";
      }
      std::cout << "violations: " << result.violations.size() << "\n";
      if (!result.violations.empty()) code = kExitViolation;
    } else if (cmd_snapshot->parsed()) {
      write_file(snapshot_path, engine->snapshot().dump(2) + "\n");
      std::cout << "snapshot\t" << snapshot_path << "\n";
    } else if (cmd_restore->parsed()) {
      std::cout << "restored\t" << restore_path << "\n";
    }

    if (!state_path.empty() && code != kExitInput) {
      write_file(state_path, engine->snapshot().dump(2) + "\n");
    }
    return code;
  } catch (const nasor::Error& e) {
    std::cerr << "error\t" << e.what() << "\n";
    switch (e.code()) {
      case nasor::Errc::rejected:
      case nasor::Errc::authorization:
      case nasor::Errc::insufficient_capacity:
        return kExitRejected;
      default:
        return kExitInput;
    }
  } catch (const std::exception& e) {
    std::cerr << "error\t" << e.what() << "\n";
    return kExitInput;
  }
}
