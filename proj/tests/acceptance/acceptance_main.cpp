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

// Prints one PASS/FAIL line per acceptance criterion. Exit status is nonzero
// when a gated criterion fails. Criterion numbers given as arguments select
// a subset.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <set>
#include <string>

#include "checks.hpp"

namespace {

struct Criterion {
  int id;
  const char* name;
  bool gated;
  acceptance::Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "shared transmitter recycling", true, acceptance::shared_transmitter_safety},
    {2, "signaling ratio", true, acceptance::signaling_ratio},
    {3, "channel stream integrity", true, acceptance::channel_stream_integrity},
    {4, "back-pressure boundary", true, acceptance::channel_backpressure_boundary},
    {5, "split write safety", true, acceptance::split_write_safety},
    {6, "invocation primitives", true, acceptance::primitive_semantics},
    {7, "aggregation", true, acceptance::aggregation_transfers_and_ordering},
    {8, "search conservation", true, acceptance::search_conservation},
    {9, "ucb selection", true, acceptance::ucb_against_direct_formula},
    {10, "hex oracles", true, acceptance::hex_against_oracles},
    {11, "determinism", true, acceptance::search_determinism},
    {12, "scaling smoke (not gated)", false, acceptance::scaling_smoke},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int gated_failures = 0;
  for (const Criterion& c : kCriteria) {
    if (!only.empty() && only.count(c.id) == 0) continue;
    const auto t0 = std::chrono::steady_clock::now();
    acceptance::Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %-28s %6.1fs  %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, s,
                out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass && c.gated) ++gated_failures;
  }
  return gated_failures == 0 ? 0 : 1;
}
