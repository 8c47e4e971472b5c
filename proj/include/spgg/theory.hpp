#pragma once

#include <string>
#include <vector>

#include "spgg/analysis.hpp"
#include "spgg/game.hpp"
#include "spgg/solver.hpp"

namespace spgg::theory {

struct AssumptionReport {
  bool c_min_positive = false;     // strict-interior regime
  bool simulation_only = false;    // c_min == 0: fine to solve, outside the
                                   // guarantee regime
  bool marginal_positive = false;  // l' > 0 at every probe point
  bool convex = false;             // second difference >= 0 at every probe
  std::vector<double> probe_points;
  std::vector<std::string> failures;

  bool all_ok() const {
    return marginal_positive && convex && c_min_positive;
  }
};

// Checks the cost model against the regularity the guarantees assume:
// increasing marginal cost and convexity, probed on an even grid over
// [c_min, c_max]. c_min == 0 is flagged rather than failed.
AssumptionReport check_assumptions(const GameParams& params,
                                   const CostModel& cost,
                                   int probe_points = 33);

struct ConditionReport {
  bool rho_ok = false;
  double rho_required = 0.0;  // n * l'(c_max)
  double rho_margin = 0.0;

  bool gamma_ok = false;
  double gamma_required_a = 0.0;  // (l'(c_max) * B - rho/n) / (c_min / B)
  double gamma_required_b = 0.0;  // (l'(c_max) - rho/n) / (c_min / B)
  double gamma_required = 0.0;    // max of the two forms
  double gamma_margin = 0.0;

  bool penalty_ok = false;
  double penalty_required = 0.0;
  double penalty_margin = 0.0;

  bool all_ok = false;
  Profile predicted_profile;  // all c_max when all_ok
};

// Sufficient conditions for full contribution by every agent. The two gamma
// forms differ by a factor of B in the numerator's cost term; exceeding both
// is required. Throws std::invalid_argument when c_min == 0 (the conditions
// divide by c_min).
ConditionReport theorem1_conditions(const GameParams& params,
                                    const CostModel& cost);

struct VerificationReport {
  bool conditions_met = false;
  bool verified = false;       // every coordinate at c_max within tolerance
  double max_deviation = 0.0;
  double tolerance = 0.0;
  Profile profile;
};

// Solves the game and checks the full-contribution prediction. When the
// sufficient conditions do not hold the check is skipped (conditions_met
// false, no assertion made).
VerificationReport verify_theorem1(const GameParams& params,
                                   const CostModel& cost,
                                   const SolverConfig& config);

struct MonotonicityReport {
  bool passed = false;
  double tolerance = 0.0;  // one solver grid step
  struct Violation {
    int agent = 0;
    double s_prev = 0.0;
    double c_prev_lo = 0.0, c_prev_hi = 0.0;
    double c_star_lo = 0.0, c_star_hi = 0.0;
  };
  std::vector<Violation> violations;
  int curves_checked = 0;
};

// Best-response monotonicity in the predecessor's contribution: for every
// agent with a predecessor and a spread of fixed s_prev slices, the response
// curve over a c_prev grid must be non-decreasing within one grid step.
MonotonicityReport verify_lemma1(const GameParams& params,
                                 const CostModel& cost,
                                 const SolverConfig& config,
                                 int curve_points = 25,
                                 int s_prev_slices = 3);

enum class Direction { kNonDecreasing, kNonIncreasing };

struct StaticsReport {
  analysis::SweepParam param{};
  Direction expected{};
  bool passed = false;
  double tolerance = 0.0;
  std::vector<double> values;
  std::vector<double> welfare;
  struct Violation {
    int index = 0;  // welfare[index] -> welfare[index + 1] breaks the sign
    double delta = 0.0;
  };
  std::vector<Violation> violations;
};

// Equilibrium welfare sweep with a sign verdict: non-decreasing in the
// synergy and share weights, non-increasing in the threshold. Only the sign
// is asserted, at `welfare_tol`; exact derivative identities do not survive
// the strategic profile adjustments.
StaticsReport comparative_statics(const GameParams& params,
                                  const CostModel& cost,
                                  const SolverConfig& config,
                                  analysis::SweepParam param, double lo,
                                  double hi, int count,
                                  double welfare_tol = 1e-6, int threads = 1);

}  // namespace spgg::theory
