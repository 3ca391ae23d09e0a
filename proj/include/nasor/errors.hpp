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

#ifndef NASOR_ERRORS_HPP_
#define NASOR_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <vector>

namespace nasor {

enum class Errc {
  parse,                  // malformed document
  validation,             // one or more structural invariants violated
  unknown_entity,         // link/router/domain/slice/tx id does not resolve
  insufficient_capacity,  // reserve would exceed link capacity
  over_release,           // release exceeds the reserved amount
  no_path,                // no AS path between domains
  stale_plan,             // plan references a link that no longer exists
  stale_decision,         // admission decision no longer matches ledgers
  sid_resolution,         // a SID does not resolve within its domain
  state_machine,          // transition outside the declared edges
  duplicate,              // duplicate programming / duplicate nano
  protocol,               // transaction protocol violation
  authorization,          // caller is not the slice owner
  rejected,               // resize or configuration rejected by a ledger rule
  missing_entry,          // forwarding walk hit a router with no entry
  loop_detected,          // forwarding walk exceeded the router count
  snapshot_format,        // snapshot version mismatch or corrupt content
  internal,               // engine bug (e.g. disconnected validated domain)
};

// Single error type for the whole engine. Validation failures carry the
// full list of violated invariants in details().
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Error(Errc code, std::string message, std::vector<std::string> details)
      : std::runtime_error(std::move(message)),
        code_(code),
        details_(std::move(details)) {}

  Errc code() const { return code_; }
  const std::vector<std::string>& details() const { return details_; }

 private:
  Errc code_;
  std::vector<std::string> details_;
};

}  // namespace nasor

#endif  // NASOR_ERRORS_HPP_
