#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spgg/game.hpp"
#include "spgg/solver.hpp"

namespace spgg::analysis {

enum class SweepParam { kGammaCoop, kRho, kThreshold };

const char* sweep_param_name(SweepParam p);

// Returns a copy of `params` with the swept parameter set to `value`.
GameParams with_param(const GameParams& params, SweepParam p, double value);

struct SweepRow {
  double param_value = 0.0;
  Profile profile;
  std::vector<double> utilities;
  double welfare = 0.0;
  bool success = false;
};

// Equilibrium at `count` evenly spaced parameter values (endpoints included).
// Rows come back in grid order regardless of thread count; each solve is
// independent.
std::vector<SweepRow> sweep(const GameParams& params, const CostModel& cost,
                            const SolverConfig& config, SweepParam param,
                            double lo, double hi, int count, int threads = 1);

// Strict Pareto dominance: u weakly better everywhere, strictly somewhere.
// eps > 0 demands that margin per coordinate, so raising it can only drop
// borderline hits (sensitivity probes); 0 is the exact set definition.
bool dominates(const std::vector<double>& u, const std::vector<double>& v,
               double eps = 0.0);

struct ParetoReport {
  std::uint64_t seed = 0;
  int sample_count = 0;
  int dominating_count = 0;
  std::vector<double> spne_utilities;
  std::vector<Profile> dominating_examples;  // capped at 10
};

// Counts uniformly sampled profiles whose utility vector strictly dominates
// the equilibrium's. Sample k draws its coordinates from the child stream
// with index k, so the report is independent of evaluation order and thread
// count.
ParetoReport pareto_assess(const GameParams& params, const CostModel& cost,
                           const SolverConfig& config, int sample_count,
                           std::uint64_t seed, double eps = 0.0,
                           int threads = 1);

// Core comparison against explicit samples (drives the sampler above; exposed
// so tests can force specific profiles through the same path).
int count_dominating(const std::vector<Profile>& samples,
                     const std::vector<double>& spne_utilities,
                     const GameParams& params, const CostModel& cost,
                     double eps, std::vector<Profile>* examples = nullptr);

enum class Format { kCsv, kJson };

// Writes sweep rows with the fixed schema
//   param_name, param_value, c_1..c_n, u_1..u_n, welfare, success
// as CSV (UTF-8, LF, floats at 6 significant digits) or a JSON array
// mirroring the field names.
void export_rows(std::ostream& out, const std::vector<SweepRow>& rows,
                 const std::string& param_name, int n, Format format);
void export_rows_file(const std::string& path,
                      const std::vector<SweepRow>& rows,
                      const std::string& param_name, int n, Format format);

void export_pareto(std::ostream& out, const ParetoReport& report,
                   Format format);

// Learning-curve export: one row per episode with the update stats that were
// current at that episode.
void export_curves(std::ostream& out, const std::vector<int>& episode,
                   const std::vector<double>& mean_reward,
                   const std::vector<double>& mean_quality,
                   const std::vector<double>& loss,
                   const std::vector<double>& kl, Format format);

// 6-significant-digit canonical form used by both exporters; keeps CSV and
// JSON byte-stable across runs and platforms.
double round6(double x);
std::string fmt6(double x);

}  // namespace spgg::analysis
