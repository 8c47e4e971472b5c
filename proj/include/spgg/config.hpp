#pragma once

#include <cstdint>
#include <string>

#include "spgg/analysis.hpp"
#include "spgg/game.hpp"
#include "spgg/rl/env.hpp"
#include "spgg/rl/trainer.hpp"
#include "spgg/solver.hpp"

namespace spgg::config {

struct OutputConfig {
  std::string path;  // empty = stdout only
  analysis::Format format = analysis::Format::kCsv;
};

struct SweepConfig {
  analysis::SweepParam param = analysis::SweepParam::kGammaCoop;
  double lo = 0.5;
  double hi = 3.0;
  int count = 25;
};

struct ParetoConfig {
  int samples = 10000;
  double eps = 0.0;
};

struct BestResponseConfig {
  int agent = 1;     // 0-based; must have a predecessor
  int points = 25;   // c_prev grid size over [c_min, c_max]
  double s_prev = 0.0;
};

// One declarative file drives every subcommand; sections it does not need
// are simply ignored by that subcommand. Unknown keys and type mismatches
// are hard errors naming the offending key path.
struct RunConfig {
  GameParams game;
  CostModel cost = CostModel::linear(1.0);
  SolverConfig solver;
  rl::TrainerConfig trainer;
  rl::SyntheticEnv::Params env;
  SweepConfig sweep;
  ParetoConfig pareto;
  BestResponseConfig best_response;
  std::uint64_t seed = 42;
  OutputConfig output;
  int threads = 0;  // 0 = one worker per available core
};

// Parses JSON text. The game and cost sections are required (with all core
// numeric fields); everything else is optional and defaulted. Throws
// std::invalid_argument with the key path on any schema violation.
RunConfig parse_config_text(const std::string& text);

// Reads and parses a config file; std::runtime_error if unreadable.
RunConfig load_config_file(const std::string& path);

// Emits the full config, defaults materialized, as pretty JSON. Parsing the
// result reproduces the config exactly.
std::string serialize_config(const RunConfig& cfg);

}  // namespace spgg::config
