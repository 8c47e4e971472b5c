#pragma once

#include <utility>
#include <vector>

#include "spgg/game.hpp"

namespace spgg {

struct SolverConfig {
  enum class Mode { kNested, kDp };
  enum class TieBreak { kPreferLarger };

  int grid_points = 401;   // dense scan over [c_min, c_max]
  int refine_iters = 40;   // golden-section steps inside the best cell
  double tol = 1e-4;       // payoff tie window for the tie-break rule
  TieBreak tie_break = TieBreak::kPreferLarger;
  Mode mode = Mode::kNested;
  int dp_prev_cells = 201;  // value-table resolution over c_prev
  int dp_sum_cells = 401;   // value-table resolution over the running sum

  void validate() const;  // throws std::invalid_argument
};

// Payoff-relevant summary of play before one agent moves: the predecessor's
// contribution and the running sum S_{i-1} (which includes c_prev). Both are
// zero for the first agent. c_prev and s_prev are not required to be jointly
// realizable; checks that condition on one while holding the other fixed
// rely on that freedom.
struct HistoryState {
  int agent = 0;       // 0-based acting agent
  double c_prev = 0.0;
  double s_prev = 0.0;
};

struct ThresholdResult {
  double value = 0.0;    // clamped to [c_min, c_max]
  bool reachable = true; // false if success is lost even at c_max
};

// Smallest own contribution that keeps success reachable assuming every
// successor plays c_max. Meaningful under cumulative-sum success; it is the
// one payoff discontinuity whose location is known in closed form.
ThresholdResult min_contribution_for_success(const HistoryState& state,
                                             const GameParams& params);

struct BestResponse {
  double c_star = 0.0;
  double value = 0.0;                // acting agent's own payoff at c_star
  std::vector<double> continuation;  // contributions of agents i..n-1
};

// Subgame-perfect best response by backward induction: every candidate action
// is evaluated against the successors' own best responses. Grid scan plus
// golden-section refinement; exact ties within `tol` resolve to the larger
// contribution.
BestResponse best_response(const HistoryState& state, const GameParams& params,
                           const CostModel& cost, const SolverConfig& config);

// Own payoff of playing exactly `c` in `state` while all successors best
// respond. Deviation-value probe used by equilibrium tests.
double action_value(const HistoryState& state, double c,
                    const GameParams& params, const CostModel& cost,
                    const SolverConfig& config);

struct SolveDiagnostics {
  double grid_step = 0.0;      // contribution resolution of the dense scan
  double bracket_error = 0.0;  // final refinement bracket width at the root
  SolverConfig::Mode mode = SolverConfig::Mode::kNested;
};

struct EquilibriumResult {
  Profile profile;
  std::vector<double> utilities;  // recomputed from the profile, exact
  double welfare = 0.0;
  bool success = false;
  SolveDiagnostics diagnostics;
};

// Backward-induction equilibrium of the full game. kNested recurses exactly
// and is capped at n <= 6; kDp tabulates the downstream-contribution function
// over (c_prev, s_prev) with bilinear interpolation and supports larger n,
// but only the default predecessor-synergy / cumulative-sum modes.
EquilibriumResult solve_spne(const GameParams& params, const CostModel& cost,
                             const SolverConfig& config);

// Best response of one agent as a function of the predecessor's contribution,
// holding s_prev fixed (the running sum is not re-derived from the samples,
// isolating the synergy channel). Returns (c_prev, c_star) pairs in input
// order.
std::vector<std::pair<double, double>> best_response_curve(
    int agent, const std::vector<double>& c_prev_samples, double s_prev,
    const GameParams& params, const CostModel& cost,
    const SolverConfig& config);

}  // namespace spgg
