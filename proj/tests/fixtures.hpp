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

#ifndef NASOR_TESTS_FIXTURES_HPP_
#define NASOR_TESTS_FIXTURES_HPP_

#include <string>

#include "nasor/engine.hpp"
#include "nasor/slicing.hpp"
#include "nasor/topology.hpp"

namespace nasor::testing {

// Three-domain chain: 65001 -- 65002 -- 65003, two routers per domain,
// one 1 ms / 10000 Mbps intra link each, and two parallel 5 ms /
// 1000 Mbps crossings per adjacency (6 routers, 7 links). The canonical
// end-to-end walk a1 -> c2 is ab1, b-intra, bc1, c-intra: 12 ms.
const std::string& t3_document();

Topology t3();
Engine t3_engine(std::uint64_t seed = 0);

SliceSpec spec(const std::string& src, const std::string& dst,
               double bandwidth_mbps, double latency_bound_ms,
               const std::string& owner = "tenant-a");

}  // namespace nasor::testing

#endif  // NASOR_TESTS_FIXTURES_HPP_
