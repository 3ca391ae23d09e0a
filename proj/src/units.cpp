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

#include "nasor/units.hpp"

#include <cmath>

#include "nasor/errors.hpp"

namespace nasor {

namespace {

std::int64_t scale_by_1000(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw Error(Errc::parse, std::string(what) + " is not a finite number");
  }
  if (value < 0.0) {
    throw Error(Errc::parse, std::string(what) + " is negative");
  }
  if (value > 9.0e12) {
    throw Error(Errc::parse, std::string(what) + " is out of range");
  }
  return std::llround(value * 1000.0);
}

std::string format_milli(std::int64_t value) {
  std::string out = std::to_string(value / 1000);
  std::int64_t frac = value % 1000;
  if (frac != 0) {
    char digits[4];
    digits[0] = static_cast<char>('0' + frac / 100);
    digits[1] = static_cast<char>('0' + (frac / 10) % 10);
    digits[2] = static_cast<char>('0' + frac % 10);
    digits[3] = '\0';
    int len = 3;
    while (len > 0 && digits[len - 1] == '0') {
      digits[--len] = '\0';
    }
    out += '.';
    out += digits;
  }
  return out;
}

}  // namespace

Kbps mbps_to_kbps(double mbps) { return scale_by_1000(mbps, "bandwidth"); }

Micros ms_to_micros(double ms) { return scale_by_1000(ms, "latency"); }

double kbps_to_mbps(Kbps kbps) { return static_cast<double>(kbps) / 1000.0; }

double micros_to_ms(Micros us) { return static_cast<double>(us) / 1000.0; }

std::string format_mbps(Kbps kbps) { return format_milli(kbps); }

std::string format_ms(Micros us) { return format_milli(us); }

}  // namespace nasor
