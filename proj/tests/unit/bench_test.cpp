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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>

#include "rivet/bench/bench.hpp"
#include "rivet/common/error.hpp"

namespace rivet::bench {
namespace {

TEST(BenchParse, Sizes) {
  EXPECT_EQ(parse_sizes("8..64"), (std::vector<uint64_t>{8, 16, 32, 64}));
  EXPECT_EQ(parse_sizes("8,100,4096"), (std::vector<uint64_t>{8, 100, 4096}));
  EXPECT_THROW(parse_sizes("abc"), Error);
  EXPECT_THROW(parse_sizes("64..8"), Error);
  EXPECT_THROW(parse_sizes(""), Error);
}

TEST(BenchParse, Placement) {
  const Placement p = parse_placement("2x3x4");
  EXPECT_EQ(p.machines, 2u);
  EXPECT_EQ(p.processes, 3u);
  EXPECT_EQ(p.threads, 4u);
  EXPECT_EQ(p.str(), "2x3x4");
  EXPECT_THROW(parse_placement("2x2"), Error);
  EXPECT_THROW(parse_placement("0x1x1"), Error);
  EXPECT_THROW(parse_placement("axbxc"), Error);
}

TEST(BenchTransport, TwoModesPerSize) {
  TransportOptions o;
  o.sizes = {8, 64};
  o.count = 2000;
  o.reps = 1;
  const auto rows = run_transport(o);
  ASSERT_EQ(rows.size(), 4u);
  std::set<std::string> modes;
  for (const auto& r : rows) {
    modes.insert(r.mode);
    EXPECT_EQ(r.bytes, r.size * o.count) << r.mode << " " << r.size;
    EXPECT_GT(r.msgs_per_sec, 0);
  }
  EXPECT_EQ(modes, (std::set<std::string>{"raw", "raw+auto"}));
  std::ostringstream csv;
  write_csv(csv, rows);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

TEST(BenchInvoke, EveryModeAndSize) {
  InvokeOptions o;
  o.sizes = {8, 64, 256};
  o.count = 500;
  o.reps = 1;
  const auto rows = run_invoke(o);
  ASSERT_EQ(rows.size(), 15u);
  for (const auto& r : rows) EXPECT_GT(r.calls_per_sec, 0) << r.mode << " " << r.size;
  o.modes = {"carrier-pigeon"};
  EXPECT_THROW(run_invoke(o), Error);
}

MctsRow mcts_at(const std::string& placement) {
  MctsOptions o;
  o.placement = parse_placement(placement);
  o.hex_n = 5;
  o.reps = 1;
  return run_mcts(o);
}

TEST(BenchMcts, SingleThreadVisitsMatchCap) {
  const MctsRow r = mcts_at("1x1x1");
  EXPECT_EQ(r.visits, 4096u);
  EXPECT_EQ(r.completions, 4096u);
  EXPECT_TRUE(r.conserved) << r.failure;
}

TEST(BenchMcts, CapScalesWithThreads) {
  const MctsRow r = mcts_at("1x1x4");
  EXPECT_EQ(r.visits, 16384u);
  EXPECT_TRUE(r.conserved) << r.failure;
}

TEST(BenchMcts, MultiMachineConserves) {
  const MctsRow r = mcts_at("2x2x2");
  EXPECT_EQ(r.visits, 8u * 4096);
  EXPECT_TRUE(r.conserved) << r.failure;
}

#ifdef RIVET_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(RIVET_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(BenchCli, BadInputExitsWithTwo) {
  EXPECT_EQ(run_cli("bench transport --sizes abc"), 2);
  EXPECT_EQ(run_cli("bench mcts --placement 2x2"), 2);
  EXPECT_EQ(run_cli("bench nonsense"), 2);
  EXPECT_EQ(run_cli("bench transport --sizes 8 --count 100 --reps 1"), 0);
}
#endif

}  // namespace
}  // namespace rivet::bench
