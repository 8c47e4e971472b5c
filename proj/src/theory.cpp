#include "spgg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spgg::theory {

AssumptionReport check_assumptions(const GameParams& params,
                                   const CostModel& cost, int probe_points) {
  params.validate();
  cost.validate();
  if (probe_points < 3)
    throw std::invalid_argument("check_assumptions: need >= 3 probe points");

  AssumptionReport rep;
  rep.c_min_positive = params.c_min > 0.0;
  rep.simulation_only = !rep.c_min_positive;
  if (rep.simulation_only)
    rep.failures.push_back(
        "c_min = 0: outside the guarantee regime (simulation only)");

  double lo = params.c_min, hi = params.c_max;
  double h = hi > lo ? (hi - lo) / (probe_points - 1) : 0.0;
  rep.marginal_positive = true;
  rep.convex = true;
  for (int j = 0; j < probe_points; ++j) {
    double c = j == probe_points - 1 ? hi : lo + h * j;
    rep.probe_points.push_back(c);
    if (!(cost.marginal(c) > 0.0)) {
      rep.marginal_positive = false;
      rep.failures.push_back("l'(c) <= 0 at c = " + std::to_string(c));
    }
    if (h > 0.0 && j > 0 && j + 1 < probe_points) {
      double second =
          cost.cost(c + h) - 2.0 * cost.cost(c) + cost.cost(c - h);
      if (second < -1e-9 * std::max(1.0, std::abs(cost.cost(c)))) {
        rep.convex = false;
        rep.failures.push_back("negative curvature at c = " +
                               std::to_string(c));
      }
    }
  }
  return rep;
}

ConditionReport theorem1_conditions(const GameParams& params,
                                    const CostModel& cost) {
  params.validate();
  cost.validate();
  if (params.c_min <= 0.0)
    throw std::invalid_argument(
        "theorem1_conditions: requires c_min > 0 (the gamma bound divides by "
        "c_min)");

  ConditionReport rep;
  double lp = cost.marginal(params.c_max);  // max over agents: shared model
  double share = params.rho / params.n;

  rep.rho_required = params.n * lp;
  rep.rho_margin = params.rho - rep.rho_required;
  rep.rho_ok = params.rho > rep.rho_required;

  double denom = params.c_min / params.threshold;
  rep.gamma_required_a = (lp * params.threshold - share) / denom;
  rep.gamma_required_b = (lp - share) / denom;
  rep.gamma_required = std::max(rep.gamma_required_a, rep.gamma_required_b);
  rep.gamma_margin = params.gamma_coop - rep.gamma_required;
  rep.gamma_ok = params.gamma_coop > rep.gamma_required;

  rep.penalty_required = (lp + params.gamma_coop * params.c_max /
                                   params.threshold +
                          share) *
                         (params.c_max - params.c_min);
  rep.penalty_margin = params.penalty - rep.penalty_required;
  rep.penalty_ok = params.penalty > rep.penalty_required;

  rep.all_ok = rep.rho_ok && rep.gamma_ok && rep.penalty_ok;
  if (rep.all_ok) rep.predicted_profile.assign(params.n, params.c_max);
  return rep;
}

VerificationReport verify_theorem1(const GameParams& params,
                                   const CostModel& cost,
                                   const SolverConfig& config) {
  VerificationReport rep;
  ConditionReport cond = theorem1_conditions(params, cost);
  rep.conditions_met = cond.all_ok;
  if (!rep.conditions_met) return rep;  // no assertion without the premises

  EquilibriumResult eq = solve_spne(params, cost, config);
  rep.profile = eq.profile;
  double grid_step = eq.diagnostics.grid_step;
  rep.tolerance = std::max({config.tol, grid_step, eq.diagnostics.bracket_error});
  rep.max_deviation = 0.0;
  for (double c : eq.profile)
    rep.max_deviation = std::max(rep.max_deviation, std::abs(c - params.c_max));
  rep.verified = rep.max_deviation <= rep.tolerance;
  return rep;
}

MonotonicityReport verify_lemma1(const GameParams& params,
                                 const CostModel& cost,
                                 const SolverConfig& config, int curve_points,
                                 int s_prev_slices) {
  params.validate();
  cost.validate();
  config.validate();
  if (curve_points < 2)
    throw std::invalid_argument("verify_lemma1: need >= 2 curve points");
  if (s_prev_slices < 1)
    throw std::invalid_argument("verify_lemma1: need >= 1 s_prev slice");

  MonotonicityReport rep;
  rep.tolerance = params.c_max > params.c_min
                      ? (params.c_max - params.c_min) / (config.grid_points - 1)
                      : 0.0;
  rep.passed = true;

  // Land the last sample exactly on c_max: the affine form can overshoot by
  // an ulp for non-round bounds, and state validation is strict.
  std::vector<double> grid(curve_points);
  for (int j = 0; j < curve_points; ++j)
    grid[j] = j == curve_points - 1
                  ? params.c_max
                  : params.c_min + (params.c_max - params.c_min) * j /
                                       (curve_points - 1);

  for (int agent = 1; agent < params.n; ++agent) {
    double s_lo = agent * params.c_min;
    double s_hi = agent * params.c_max;
    for (int k = 0; k < s_prev_slices; ++k) {
      double s_prev =
          s_prev_slices == 1
              ? 0.5 * (s_lo + s_hi)
              : s_lo + (s_hi - s_lo) * k / (s_prev_slices - 1);
      auto curve =
          best_response_curve(agent, grid, s_prev, params, cost, config);
      ++rep.curves_checked;
      for (size_t j = 0; j + 1 < curve.size(); ++j) {
        if (curve[j + 1].second < curve[j].second - rep.tolerance) {
          rep.passed = false;
          rep.violations.push_back({agent, s_prev, curve[j].first,
                                    curve[j + 1].first, curve[j].second,
                                    curve[j + 1].second});
        }
      }
    }
  }
  return rep;
}

StaticsReport comparative_statics(const GameParams& params,
                                  const CostModel& cost,
                                  const SolverConfig& config,
                                  analysis::SweepParam param, double lo,
                                  double hi, int count, double welfare_tol,
                                  int threads) {
  StaticsReport rep;
  rep.param = param;
  rep.expected = param == analysis::SweepParam::kThreshold
                     ? Direction::kNonIncreasing
                     : Direction::kNonDecreasing;
  rep.tolerance = welfare_tol;

  auto rows = analysis::sweep(params, cost, config, param, lo, hi, count,
                              threads);
  rep.passed = true;
  for (const auto& row : rows) {
    rep.values.push_back(row.param_value);
    rep.welfare.push_back(row.welfare);
  }
  for (int j = 0; j + 1 < static_cast<int>(rep.welfare.size()); ++j) {
    double delta = rep.welfare[j + 1] - rep.welfare[j];
    bool bad = rep.expected == Direction::kNonDecreasing
                   ? delta < -welfare_tol
                   : delta > welfare_tol;
    if (bad) {
      rep.passed = false;
      rep.violations.push_back({j, delta});
    }
  }
  return rep;
}

}  // namespace spgg::theory
