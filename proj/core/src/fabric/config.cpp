// Copyright 2026 The Rivet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rivet/fabric/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rivet/common/error.hpp"

namespace rivet::fabric {
namespace {

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(std::string_view key, std::string_view value,
                      const char* why) {
  throw Error(Errc::kConfig, "config key '" + std::string(key) + "' value '" +
                                 std::string(value) + "': " + why);
}

uint64_t parse_u64(std::string_view key, std::string_view value) {
  uint64_t mult = 1;
  std::string_view digits = value;
  if (!digits.empty()) {
    char last = digits.back();
    if (last == 'K' || last == 'k') mult = 1ull << 10;
    if (last == 'M' || last == 'm') mult = 1ull << 20;
    if (last == 'G' || last == 'g') mult = 1ull << 30;
    if (mult != 1) digits.remove_suffix(1);
  }
  uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
    bad(key, value, "expected an unsigned integer");
  }
  return v * mult;
}

uint32_t parse_u32(std::string_view key, std::string_view value) {
  uint64_t v = parse_u64(key, value);
  if (v > 0xffffffffull) bad(key, value, "out of range");
  return static_cast<uint32_t>(v);
}

}  // namespace

void apply_option(SystemConfig& c, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "machines") c.machines = parse_u32(key, value);
  else if (key == "processes_per_machine") c.processes_per_machine = parse_u32(key, value);
  else if (key == "threads_per_process") c.threads_per_process = parse_u32(key, value);
  else if (key == "zones_per_machine") c.zones_per_machine = parse_u32(key, value);
  else if (key == "u_max") c.u_max = parse_u32(key, value);
  else if (key == "recv_depth") c.recv_depth = parse_u32(key, value);
  else if (key == "recv_size") c.recv_size = parse_u32(key, value);
  else if (key == "execution") {
    if (value == "immediate") c.execution = verbs::Execution::kImmediate;
    else if (value == "deferred") c.execution = verbs::Execution::kDeferred;
    else bad(key, value, "expected immediate|deferred");
  } else if (key == "backend") {
    if (value == "inprocess") c.backend = verbs::Backend::kInProcess;
    else if (value == "stream") c.backend = verbs::Backend::kStream;
    else bad(key, value, "expected inprocess|stream");
  } else if (key == "slab_size") c.slab_size = parse_u64(key, value);
  else if (key == "unit_size") c.unit_size = parse_u64(key, value);
  else if (key == "ring_initial") c.ring_initial = parse_u32(key, value);
  else if (key == "ring_growth") {
    if (value == "linear") c.ring_growth = mem::Growth::kLinear;
    else if (value == "exponential") c.ring_growth = mem::Growth::kExponential;
    else if (value == "none") c.ring_growth = mem::Growth::kNone;
    else bad(key, value, "expected linear|exponential|none");
  } else if (key == "ring_max") c.ring_max = parse_u32(key, value);
  else if (key == "general_cap") c.general_cap = parse_u64(key, value);
  else if (key == "chunk_size") c.chunk_size = parse_u64(key, value);
  else if (key == "c") c.c = parse_u32(key, value);
  else if (key == "c_max") c.c_max = parse_u32(key, value);
  else if (key == "consumed_pull_threshold") c.consumed_pull_threshold = parse_u64(key, value);
  else if (key == "agg_mode") {
    if (value == "trad") c.agg_mode = AggMode::kTrad;
    else if (value == "ovfl") c.agg_mode = AggMode::kOvfl;
    else bad(key, value, "expected trad|ovfl");
  } else if (key == "agg_flush_bytes") c.agg_flush_bytes = parse_u64(key, value);
  else if (key == "agg_exceed_cap") c.agg_exceed_cap = parse_u64(key, value);
  else if (key == "agg_idle_flush_us") c.agg_idle_flush_us = parse_u64(key, value);
  else if (key == "broadcast_arity") c.broadcast_arity = parse_u32(key, value);
  else if (key == "handling") {
    if (value == "direct") c.handling = HandlingMode::kDirect;
    else if (value == "helper") c.handling = HandlingMode::kHelper;
    else bad(key, value, "expected direct|helper");
  } else if (key == "finalize_timeout_ms") c.finalize_timeout_ms = parse_u64(key, value);
  else if (key == "seed") c.seed = parse_u64(key, value);
  else throw Error(Errc::kConfig, "unknown config key '" + std::string(key) + "'");
}

SystemConfig parse_config(std::string_view text) {
  SystemConfig config;
  size_t line_no = 0;
  while (!text.empty()) {
    size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::kConfig, "line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_option(config, line.substr(0, eq), line.substr(eq + 1));
  }
  validate(config);
  return config;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kConfig, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const SystemConfig& c) {
  auto fail = [](const std::string& why) { throw Error(Errc::kConfig, why); };
  if (c.machines == 0 || c.processes_per_machine == 0 || c.threads_per_process == 0) {
    fail("placement components must be positive");
  }
  if (c.thread_count() > (1u << 20)) fail("too many threads");
  if (c.zones() == 0) fail("zones_per_machine must be positive");
  if (c.u_max == 0) fail("u_max must be positive");
  if (c.recv_depth == 0 || c.recv_size < 64 || c.recv_size % 8 != 0) {
    fail("recv_depth must be positive and recv_size a multiple of 8 >= 64");
  }
  if (c.slab_size == 0 || c.slab_size % 64 != 0) fail("slab_size must be a multiple of 64");
  if (c.unit_size == 0 || c.unit_size > c.slab_size) fail("unit_size must be in (0, slab_size]");
  if (c.ring_initial == 0 || c.ring_max < c.ring_initial) {
    fail("need 1 <= ring_initial <= ring_max");
  }
  if (c.chunk_size < 128 || c.chunk_size % 64 != 0 || c.chunk_size > c.slab_size) {
    fail("chunk_size must be a multiple of 64 in [128, slab_size]");
  }
  if (c.c == 0 || c.c_max < c.c || c.c_max > 255) fail("need 1 <= c <= c_max <= 255");
  if (c.agg_flush_bytes < 24 || c.agg_flush_bytes > c.chunk_size - 64) {
    fail("agg_flush_bytes must fit in one chunk's data area");
  }
  if (c.agg_flush_bytes > c.unit_size) fail("agg_flush_bytes must not exceed unit_size");
  if (c.broadcast_arity == 0) fail("broadcast_arity must be positive");
}

}  // namespace rivet::fabric
