#include "spgg/game.hpp"

#include <cmath>
#include <stdexcept>

namespace spgg {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void GameParams::validate() const {
  require(n >= 1, "game: n must be >= 1");
  require(std::isfinite(gamma_coop) && gamma_coop >= 0.0,
          "game: gamma_coop must be >= 0");
  require(std::isfinite(rho) && rho >= 0.0, "game: rho must be >= 0");
  require(std::isfinite(threshold) && threshold > 0.0,
          "game: threshold must be > 0");
  require(std::isfinite(penalty) && penalty >= 0.0,
          "game: penalty must be >= 0");
  require(std::isfinite(c_min) && c_min >= 0.0, "game: c_min must be >= 0");
  require(std::isfinite(c_max) && c_max >= c_min,
          "game: c_max must be >= c_min");
}

CostModel CostModel::linear(double a) {
  CostModel m;
  m.kind = Kind::kLinear;
  m.a = a;
  m.b = 0.0;
  m.validate();
  return m;
}

CostModel CostModel::quadratic(double a, double b) {
  CostModel m;
  m.kind = Kind::kQuadratic;
  m.a = a;
  m.b = b;
  m.validate();
  return m;
}

double CostModel::cost(double c) const { return a * c + b * c * c; }

double CostModel::marginal(double c) const { return a + 2.0 * b * c; }

void CostModel::validate() const {
  require(std::isfinite(a) && a > 0.0, "cost: linear coefficient must be > 0");
  if (kind == Kind::kLinear) {
    require(b == 0.0, "cost: linear model must have b = 0");
  } else {
    require(std::isfinite(b) && b >= 0.0,
            "cost: quadratic coefficient must be >= 0");
  }
}

std::string CostModel::describe() const {
  if (kind == Kind::kLinear) return "linear(a=" + std::to_string(a) + ")";
  return "quadratic(a=" + std::to_string(a) + ",b=" + std::to_string(b) + ")";
}

void validate_profile(const Profile& profile, const GameParams& params) {
  params.validate();
  require(static_cast<int>(profile.size()) == params.n,
          "profile: length must equal n");
  for (double c : profile) {
    require(std::isfinite(c) && c >= params.c_min && c <= params.c_max,
            "profile: contribution outside [c_min, c_max]");
  }
}

double cumulative_sum(const Profile& profile, int k) {
  if (k < 0 || k > static_cast<int>(profile.size()))
    throw std::out_of_range("cumulative_sum: k outside [0, n]");
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += profile[i];
  return s;
}

double aggregate_score(const Profile& profile, const GameParams& params) {
  if (params.success_mode == SuccessMode::kFinalScore) return profile.back();
  return cumulative_sum(profile, static_cast<int>(profile.size()));
}

bool success(const Profile& profile, const GameParams& params) {
  return aggregate_score(profile, params) >= params.threshold;
}

RewardBreakdown reward_terms(double own_cost, double c_prev, double own_c,
                             double aggregate, const GameParams& params) {
  RewardBreakdown bd;
  bd.cost_term = -own_cost;
  double source =
      params.synergy_mode == SynergyMode::kPredecessor ? c_prev : own_c;
  bd.synergy_term = params.gamma_coop * (source / params.threshold) * own_c;
  bd.share_term = (params.rho / params.n) * aggregate;
  bd.penalty_term = aggregate < params.threshold ? -params.penalty : 0.0;
  bd.total = bd.cost_term + bd.synergy_term + bd.share_term + bd.penalty_term;
  return bd;
}

RewardBreakdown reward(int agent, const Profile& profile,
                       const GameParams& params, const CostModel& cost) {
  validate_profile(profile, params);
  if (agent < 0 || agent >= params.n)
    throw std::out_of_range("reward: agent outside [0, n)");
  double c = profile[agent];
  double c_prev = agent == 0 ? 0.0 : profile[agent - 1];
  return reward_terms(cost.cost(c), c_prev, c,
                      aggregate_score(profile, params), params);
}

std::vector<double> utilities(const Profile& profile, const GameParams& params,
                              const CostModel& cost) {
  std::vector<double> u(profile.size());
  for (int i = 0; i < static_cast<int>(profile.size()); ++i)
    u[i] = reward(i, profile, params, cost).total;
  return u;
}

double welfare(const Profile& profile, const GameParams& params,
               const CostModel& cost) {
  double w = 0.0;
  for (double u : utilities(profile, params, cost)) w += u;
  return w;
}

}  // namespace spgg
