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

#include "fixtures.hpp"

namespace nasor::testing {

const std::string& t3_document() {
  static const std::string doc = R"({
    "domains": [
      {"asn": 65001,
       "routers": [{"id": "a1", "sid": 101, "role": "border"},
                   {"id": "a2", "sid": 102, "role": "interior"}],
       "links": [{"id": "a-intra", "a": "a1", "b": "a2",
                  "capacity_mbps": 10000, "latency_ms": 1, "adj_sid": 201}]},
      {"asn": 65002,
       "routers": [{"id": "b1", "sid": 101, "role": "border"},
                   {"id": "b2", "sid": 102, "role": "border"}],
       "links": [{"id": "b-intra", "a": "b1", "b": "b2",
                  "capacity_mbps": 10000, "latency_ms": 1, "adj_sid": 201}]},
      {"asn": 65003,
       "routers": [{"id": "c1", "sid": 101, "role": "border"},
                   {"id": "c2", "sid": 102, "role": "interior"}],
       "links": [{"id": "c-intra", "a": "c1", "b": "c2",
                  "capacity_mbps": 10000, "latency_ms": 1, "adj_sid": 201}]}
    ],
    "peerings": [
      {"id": "ab1", "a": "a1", "b": "b1", "capacity_mbps": 1000,
       "latency_ms": 5, "adj_sid": 301, "domain_a": 65001, "domain_b": 65002},
      {"id": "ab2", "a": "a1", "b": "b1", "capacity_mbps": 1000,
       "latency_ms": 5, "adj_sid": 302, "domain_a": 65001, "domain_b": 65002},
      {"id": "bc1", "a": "b2", "b": "c1", "capacity_mbps": 1000,
       "latency_ms": 5, "adj_sid": 303, "domain_a": 65002, "domain_b": 65003},
      {"id": "bc2", "a": "b2", "b": "c1", "capacity_mbps": 1000,
       "latency_ms": 5, "adj_sid": 304, "domain_a": 65002, "domain_b": 65003}
    ]
  })";
  return doc;
}

Topology t3() { return Topology::from_string(t3_document()); }

Engine t3_engine(std::uint64_t seed) {
  EngineConfig config;
  config.seed = seed;
  return Engine(t3(), config);
}

SliceSpec spec(const std::string& src, const std::string& dst,
               double bandwidth_mbps, double latency_bound_ms,
               const std::string& owner) {
  SliceSpec s;
  s.src_node = src;
  s.dst_node = dst;
  s.bandwidth_kbps = mbps_to_kbps(bandwidth_mbps);
  s.latency_bound_us = ms_to_micros(latency_bound_ms);
  s.owner = owner;
  return s;
}

}  // namespace nasor::testing
