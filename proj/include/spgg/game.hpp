#pragma once

#include <string>
#include <vector>

namespace spgg {

// Task success predicate and share-term aggregate: either the cumulative sum
// of all contributions or the last agent's contribution alone.
enum class SuccessMode { kCumulativeSum, kFinalScore };

// Synergy numerator: predecessor's contribution (first agent gets none) or
// the agent's own.
enum class SynergyMode { kPredecessor, kSelf };

struct GameParams {
  int n = 3;                 // number of agents, acting in fixed order
  double gamma_coop = 1.5;   // synergy weight
  double rho = 1.8;          // shared success reward, split /n
  double threshold = 1.0;    // B, required aggregate score
  double penalty = 0.5;      // P, charged to every agent on failure
  double c_min = 0.0;
  double c_max = 1.0;
  SuccessMode success_mode = SuccessMode::kCumulativeSum;
  SynergyMode synergy_mode = SynergyMode::kPredecessor;

  // Throws std::invalid_argument on violated bounds (n >= 1, gamma >= 0,
  // rho >= 0, threshold > 0, penalty >= 0, 0 <= c_min <= c_max).
  void validate() const;
};

// Per-agent effort cost l(c), increasing and convex on [c_min, c_max].
struct CostModel {
  enum class Kind { kLinear, kQuadratic };
  Kind kind = Kind::kLinear;
  double a = 1.0;  // linear coefficient, > 0
  double b = 0.0;  // quadratic coefficient, >= 0 (kQuadratic only)

  static CostModel linear(double a);
  static CostModel quadratic(double a, double b);

  double cost(double c) const;      // l(c)  = a*c + b*c^2
  double marginal(double c) const;  // l'(c) = a + 2*b*c

  void validate() const;
  std::string describe() const;
};

// contributions[i] is agent i's contribution, agents indexed from 0 in order
// of play.
using Profile = std::vector<double>;

// Throws std::invalid_argument unless the profile has length n and every
// entry lies in [c_min, c_max].
void validate_profile(const Profile& profile, const GameParams& params);

// Sum of the first k contributions; k = 0 gives 0. Throws std::out_of_range
// for k outside [0, size].
double cumulative_sum(const Profile& profile, int k);

// The final task score the success test and the share term are based on.
double aggregate_score(const Profile& profile, const GameParams& params);

// Success iff the aggregate reaches the threshold; the boundary counts as
// success (penalty applies strictly below).
bool success(const Profile& profile, const GameParams& params);

struct RewardBreakdown {
  double cost_term = 0.0;     // -l(c_i), <= 0
  double synergy_term = 0.0;  // gamma * (source / B) * c_i
  double share_term = 0.0;    // (rho / n) * aggregate
  double penalty_term = 0.0;  // -P on failure, else 0
  double total = 0.0;         // sum of the four terms, exact
};

// Reward terms from the payoff-relevant state alone. own_cost is the realized
// effort cost of the contribution; c_prev the predecessor's contribution
// (0 for the first agent); aggregate the final task score. This is the single
// implementation every reward computation in the project routes through.
RewardBreakdown reward_terms(double own_cost, double c_prev, double own_c,
                             double aggregate, const GameParams& params);

// Reward of agent `agent` (0-based) under a full profile.
RewardBreakdown reward(int agent, const Profile& profile,
                       const GameParams& params, const CostModel& cost);

std::vector<double> utilities(const Profile& profile, const GameParams& params,
                              const CostModel& cost);

// Sum of all agents' reward totals.
double welfare(const Profile& profile, const GameParams& params,
               const CostModel& cost);

}  // namespace spgg
