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

#ifndef NASOR_UNITS_HPP_
#define NASOR_UNITS_HPP_

#include <cstdint>
#include <string>

namespace nasor {

// Bandwidth is accounted in integer kilobits per second so that
// reserve/release pairs are exactly invertible. Latency is accounted in
// integer microseconds for the same reason.
using Kbps = std::int64_t;
using Micros = std::int64_t;

// Converts a decimal megabit/s quantity (as read from a document) to
// kilobit/s, rounding to the nearest kilobit. Throws on negative,
// non-finite, or out-of-range input.
Kbps mbps_to_kbps(double mbps);

// Converts a decimal millisecond quantity to microseconds, rounding to
// the nearest microsecond. Throws on negative, non-finite, or
// out-of-range input.
Micros ms_to_micros(double ms);

double kbps_to_mbps(Kbps kbps);
double micros_to_ms(Micros us);

// Exact decimal rendering, e.g. 1000010 kbps -> "1000.01".
// Trailing zeros in the fraction are trimmed.
std::string format_mbps(Kbps kbps);
std::string format_ms(Micros us);

}  // namespace nasor

#endif  // NASOR_UNITS_HPP_
