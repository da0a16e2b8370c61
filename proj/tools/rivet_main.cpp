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

// rivet: benchmark driver. Every subcommand prints CSV with a header row.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "rivet/bench/bench.hpp"
#include "rivet/common/error.hpp"
#include "rivet/fabric/config.hpp"

namespace {

constexpr int kConfigError = 2;

struct Common {
  std::string out;
  std::string config_file;
  std::vector<std::string> overrides;
  uint32_t reps = 3;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "Write CSV here instead of stdout");
  cmd->add_option("--config", c.config_file, "System config file (key = value lines)");
  cmd->add_option("--set", c.overrides, "Config override, key=value (repeatable)");
  cmd->add_option("--reps", c.reps, "Repetitions averaged per row")->check(CLI::PositiveNumber);
}

rivet::fabric::SystemConfig load(const Common& c) {
  rivet::fabric::SystemConfig cfg;
  if (!c.config_file.empty()) cfg = rivet::fabric::load_config(c.config_file);
  for (const auto& kv : c.overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw rivet::Error(rivet::Errc::kConfig, "--set expects key=value, got '" + kv + "'");
    }
    rivet::fabric::apply_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

template <class Rows>
void emit(const Common& c, const Rows& rows) {
  if (c.out.empty()) {
    rivet::bench::write_csv(std::cout, rows);
    return;
  }
  std::ofstream f(c.out);
  if (!f) throw rivet::Error(rivet::Errc::kConfig, "cannot open " + c.out);
  rivet::bench::write_csv(f, rows);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  size_t pos = 0;
  for (;;) {
    const size_t comma = s.find(',', pos);
    out.push_back(s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) return out;
    pos = comma + 1;
  }
}

rivet::fabric::PathKind parse_path(const std::string& s) {
  if (s == "send") return rivet::fabric::PathKind::kSend;
  if (s == "write") return rivet::fabric::PathKind::kWrite;
  if (s == "aggregated") return rivet::fabric::PathKind::kAggregated;
  throw rivet::Error(rivet::Errc::kConfig, "unknown path '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rivet: simulated RDMA remote invocation runtime"};
  app.require_subcommand(1);
  CLI::App* bench = app.add_subcommand("bench", "Run a benchmark and print CSV");
  bench->require_subcommand(1);

  Common tc;
  std::string t_sizes = "8..65536";
  std::string backend = "inprocess";
  rivet::bench::TransportOptions topt;
  CLI::App* transport = bench->add_subcommand("transport", "Loopback WRITE throughput");
  add_common(transport, tc);
  transport->add_option("--sizes", t_sizes, "Sizes: LO..HI (powers of two) or a,b,c");
  transport->add_option("--count", topt.count, "Messages per repetition");
  transport->add_option("--u-max", topt.u_max, "Unsignaled ops between signals");
  transport->add_option("--backend", backend, "inprocess or stream");

  Common ic;
  std::string i_sizes = "8,64,256";
  std::string modes = "send,write,trad,ovfl,max-raw";
  rivet::bench::InvokeOptions iopt;
  CLI::App* invoke = bench->add_subcommand("invoke", "Call throughput per invocation mode");
  add_common(invoke, ic);
  invoke->add_option("--sizes", i_sizes, "Context sizes in bytes");
  invoke->add_option("--modes", modes, "Comma-separated: send,write,trad,ovfl,max-raw");
  invoke->add_option("--count", iopt.count, "Calls per repetition");

  Common mc;
  std::string placement = "1x1x1";
  std::string path = "aggregated";
  rivet::bench::MctsOptions mopt;
  mopt.reps = 1;
  CLI::App* mcts = bench->add_subcommand("mcts", "Distributed Hex search");
  add_common(mcts, mc);
  mc.reps = 1;
  mcts->add_option("--placement", placement, "Machines x processes x threads, e.g. 1x2x2");
  mcts->add_option("--phases", mopt.phases, "Search phases")->check(CLI::PositiveNumber);
  mcts->add_option("--hex-n", mopt.hex_n, "Hex board side");
  mcts->add_option("--rollouts-per-phase-per-thread",
                   mopt.search.rollouts_per_phase_per_thread, "Phase cap per thread");
  mcts->add_option("--sims-per-request", mopt.search.sims_per_request,
                   "Random playouts per evaluation");
  mcts->add_option("--ucb-c", mopt.search.ucb_c, "Exploration constant");
  mcts->add_option("--seed", mopt.search.seed, "Search seed");
  mcts->add_option("--inflight", mopt.search.inflight, "Open rollouts per issuing thread");
  mcts->add_option("--path", path, "send, write or aggregated");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*transport) {
      topt.sizes = rivet::bench::parse_sizes(t_sizes);
      topt.reps = tc.reps;
      if (backend == "stream") {
        topt.backend = rivet::verbs::Backend::kStream;
      } else if (backend != "inprocess") {
        throw rivet::Error(rivet::Errc::kConfig, "unknown backend '" + backend + "'");
      }
      emit(tc, rivet::bench::run_transport(topt));
    } else if (*invoke) {
      iopt.base = load(ic);
      iopt.sizes = rivet::bench::parse_sizes(i_sizes);
      iopt.modes = split(modes);
      iopt.reps = ic.reps;
      emit(ic, rivet::bench::run_invoke(iopt));
    } else if (*mcts) {
      mopt.base = load(mc);
      mopt.placement = rivet::bench::parse_placement(placement);
      mopt.search.path = parse_path(path);
      mopt.reps = mc.reps;
      const rivet::bench::MctsRow row = rivet::bench::run_mcts(mopt);
      emit(mc, std::vector<rivet::bench::MctsRow>{row});
      if (!row.conserved) {
        std::cerr << "rivet: tree counts did not balance: " << row.failure << "\n";
        return 1;
      }
    }
  } catch (const rivet::Error& e) {
    std::cerr << "rivet: " << e.what() << "\n";
    return e.code() == rivet::Errc::kConfig || e.code() == rivet::Errc::kInvalidArgument
               ? kConfigError
               : 1;
  } catch (const std::exception& e) {
    std::cerr << "rivet: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
