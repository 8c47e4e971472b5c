#include "spgg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace spgg {

namespace {

constexpr int kNestedDepthCap = 6;
constexpr double kGolden = 0.6180339887498948482;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// One-dimensional maximizer used by both solver modes. Scans an even grid
// over [lo, hi] plus both sides of each known breakpoint, then refines each
// smooth piece of the best grid cell by golden section. Ties within tie_tol
// of the running maximum resolve to the larger argument.
struct ScanResult {
  double c = 0.0;
  double value = 0.0;
  double bracket_error = 0.0;
};

template <class F>
ScanResult maximize_piecewise(F&& value_at, double lo, double hi,
                              const double* breaks, int n_breaks,
                              int grid_points, int refine_iters,
                              double tie_tol) {
  std::vector<double> cs;
  std::vector<double> vs;
  cs.reserve(grid_points + 2 * n_breaks + 2 * (refine_iters + 2) + 4);

  if (hi <= lo) {
    double v = value_at(lo);
    return {lo, v, 0.0};
  }

  // Merged ascending candidate list: grid points and breakpoint sides.
  double step = (hi - lo) / (grid_points - 1);
  int bi = 0;
  for (int j = 0; j < grid_points; ++j) {
    double x = j == grid_points - 1 ? hi : lo + step * j;
    while (bi < n_breaks && breaks[bi] <= x) {
      double b = breaks[bi++];
      if (b > lo && b < hi) {
        cs.push_back(std::nextafter(b, lo));  // left limit of the jump
        cs.push_back(b);
      }
    }
    if (!cs.empty() && cs.back() >= x) continue;
    cs.push_back(x);
  }
  while (bi < n_breaks) {
    double b = breaks[bi++];
    if (b > lo && b < hi) {
      cs.push_back(std::nextafter(b, lo));
      cs.push_back(b);
    }
  }

  vs.resize(cs.size());
  for (size_t j = 0; j < cs.size(); ++j) vs[j] = value_at(cs[j]);

  auto pick = [&](size_t count) {
    double vmax = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < count; ++j) vmax = std::max(vmax, vs[j]);
    size_t best = 0;
    double best_c = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < count; ++j) {
      if (vs[j] >= vmax - tie_tol && cs[j] > best_c) {
        best = j;
        best_c = cs[j];
      }
    }
    return best;
  };

  size_t best = pick(cs.size());
  double bracket_error = step;

  if (refine_iters > 0) {
    // Refine within one cell on each side of the best candidate, split at
    // breakpoints so each golden search runs on a smooth piece.
    double a = best > 0 ? cs[best - 1] : cs[best];
    double b = best + 1 < cs.size() ? cs[best + 1] : cs[best];
    std::vector<double> edges{a};
    for (int k = 0; k < n_breaks; ++k) {
      if (breaks[k] > a && breaks[k] < b) {
        edges.push_back(std::nextafter(breaks[k], lo));
        edges.push_back(breaks[k]);
      }
    }
    edges.push_back(b);

    bracket_error = 0.0;
    for (size_t p = 0; p + 1 < edges.size(); p += edges.size() > 2 ? 2 : 1) {
      double pa = edges[p];
      double pb = edges[p + 1];
      if (pb <= pa) continue;
      double x1 = pb - kGolden * (pb - pa);
      double x2 = pa + kGolden * (pb - pa);
      double f1 = value_at(x1);
      double f2 = value_at(x2);
      cs.push_back(x1); vs.push_back(f1);
      cs.push_back(x2); vs.push_back(f2);
      for (int it = 0; it < refine_iters; ++it) {
        if (f1 <= f2) {  // keep the right piece on ties (prefer larger c)
          pa = x1;
          x1 = x2;
          f1 = f2;
          x2 = pa + kGolden * (pb - pa);
          f2 = value_at(x2);
          cs.push_back(x2); vs.push_back(f2);
        } else {
          pb = x2;
          x2 = x1;
          f2 = f1;
          x1 = pb - kGolden * (pb - pa);
          f1 = value_at(x1);
          cs.push_back(x1); vs.push_back(f1);
        }
      }
      bracket_error = std::max(bracket_error, pb - pa);
    }
    best = pick(cs.size());
  }

  return {cs[best], vs[best], bracket_error};
}

// Piece boundaries of edges: [a, left-of-break], [break, next], ... The loop
// above steps by 2 when breakpoints were inserted, pairing edges correctly;
// with no breakpoints edges = {a, b} and the single piece is [a, b].

struct Ctx {
  const GameParams& g;
  const CostModel& cost;
  const SolverConfig& cfg;
};

struct Eval {
  double value = 0.0;     // acting agent's payoff
  double down_sum = 0.0;  // contributions of the acting agent and successors
  double final_c = 0.0;   // last agent's contribution
};

struct Core {
  double c_star = 0.0;
  double value = 0.0;
  double down_sum = 0.0;
  double final_c = 0.0;
  double bracket_error = 0.0;
};

Core optimize_state(const Ctx& ctx, const HistoryState& st);

Eval eval_action(const Ctx& ctx, const HistoryState& st, double c) {
  const GameParams& g = ctx.g;
  bool cumulative = g.success_mode == SuccessMode::kCumulativeSum;
  if (st.agent == g.n - 1) {
    double aggregate = cumulative ? st.s_prev + c : c;
    RewardBreakdown bd =
        reward_terms(ctx.cost.cost(c), st.c_prev, c, aggregate, g);
    return {bd.total, c, c};
  }
  Core child = optimize_state(ctx, {st.agent + 1, c, st.s_prev + c});
  double down = c + child.down_sum;
  double aggregate = cumulative ? st.s_prev + down : child.final_c;
  RewardBreakdown bd =
      reward_terms(ctx.cost.cost(c), st.c_prev, c, aggregate, g);
  return {bd.total, down, child.final_c};
}

Core optimize_state(const Ctx& ctx, const HistoryState& st) {
  const GameParams& g = ctx.g;
  double breaks[1];
  int n_breaks = 0;
  if (g.success_mode == SuccessMode::kCumulativeSum) {
    ThresholdResult t = min_contribution_for_success(st, g);
    if (t.reachable && t.value > g.c_min && t.value < g.c_max)
      breaks[n_breaks++] = t.value;
  } else if (st.agent == g.n - 1 && g.threshold > g.c_min &&
             g.threshold < g.c_max) {
    breaks[n_breaks++] = g.threshold;
  }

  ScanResult best = maximize_piecewise(
      [&](double c) { return eval_action(ctx, st, c).value; }, g.c_min,
      g.c_max, breaks, n_breaks, ctx.cfg.grid_points, ctx.cfg.refine_iters,
      ctx.cfg.tol);

  Eval at_best = eval_action(ctx, st, best.c);
  return {best.c, at_best.value, at_best.down_sum, at_best.final_c,
          best.bracket_error};
}

void check_nested_depth(const GameParams& g, const HistoryState& st) {
  if (g.n - st.agent > kNestedDepthCap)
    throw std::invalid_argument(
        "solver: nested mode supports at most 6 levels of recursion; "
        "use dp mode for larger n");
}

void validate_state(const HistoryState& st, const GameParams& g) {
  require(st.agent >= 0 && st.agent < g.n, "state: agent outside [0, n)");
  bool prev_ok = st.c_prev == 0.0 ||
                 (st.c_prev >= g.c_min && st.c_prev <= g.c_max);
  require(prev_ok, "state: c_prev outside {0} u [c_min, c_max]");
  require(st.s_prev >= 0.0 && st.s_prev <= st.agent * g.c_max + 1e-12,
          "state: s_prev outside [0, i * c_max]");
}

// --- dp mode --------------------------------------------------------------
//
// Tabulates, for every level i >= 1, the total downstream contribution
// D_i(c_prev, s_prev) delivered by agents i..n-1 under continuation best
// responses. An agent's payoff depends on successors only through that sum,
// so bilinear interpolation of D is all the backward pass needs. The forward
// pass re-optimizes each on-path decision exactly against the child table.

struct DpAxis {
  double lo = 0.0, hi = 0.0;
  int cells = 1;
  double at(int j) const {
    return cells == 1 ? lo : lo + (hi - lo) * j / (cells - 1);
  }
};

struct DpTable {
  DpAxis prev, sum;
  std::vector<double> down;  // cells_prev x cells_sum

  double interp(double p, double s) const {
    auto locate = [](const DpAxis& ax, double x, int& j, double& f) {
      if (ax.cells == 1 || ax.hi <= ax.lo) {
        j = 0;
        f = 0.0;
        return;
      }
      double t = (x - ax.lo) / (ax.hi - ax.lo) * (ax.cells - 1);
      t = std::clamp(t, 0.0, static_cast<double>(ax.cells - 1));
      j = std::min(static_cast<int>(t), ax.cells - 2);
      f = t - j;
    };
    int jp, js;
    double fp, fs;
    locate(prev, p, jp, fp);
    locate(sum, s, js, fs);
    int w = sum.cells;
    auto v = [&](int dp, int ds) { return down[(jp + dp) * w + (js + ds)]; };
    if (prev.cells == 1 && sum.cells == 1) return v(0, 0);
    if (prev.cells == 1) return v(0, 0) * (1 - fs) + v(0, 1) * fs;
    if (sum.cells == 1) return v(0, 0) * (1 - fp) + v(1, 0) * fp;
    return (v(0, 0) * (1 - fp) + v(1, 0) * fp) * (1 - fs) +
           (v(0, 1) * (1 - fp) + v(1, 1) * fp) * fs;
  }
};

// 1-D optimization of one dp state against the child table (empty table for
// the last agent). Returns the chosen contribution and the downstream sum.
std::pair<double, double> dp_optimize(const Ctx& ctx, const HistoryState& st,
                                      const DpTable* child) {
  const GameParams& g = ctx.g;
  double breaks[1];
  int n_breaks = 0;
  ThresholdResult t = min_contribution_for_success(st, g);
  if (t.reachable && t.value > g.c_min && t.value < g.c_max)
    breaks[n_breaks++] = t.value;

  auto eval = [&](double c) {
    double child_down = child ? child->interp(c, st.s_prev + c) : 0.0;
    double down = c + child_down;
    double aggregate = st.s_prev + down;
    return reward_terms(ctx.cost.cost(c), st.c_prev, c, aggregate, g).total;
  };
  ScanResult best =
      maximize_piecewise(eval, g.c_min, g.c_max, breaks, n_breaks,
                         ctx.cfg.grid_points, ctx.cfg.refine_iters,
                         ctx.cfg.tol);
  double child_down =
      child ? child->interp(best.c, st.s_prev + best.c) : 0.0;
  return {best.c, best.c + child_down};
}

EquilibriumResult solve_dp(const Ctx& ctx) {
  const GameParams& g = ctx.g;
  if (g.synergy_mode != SynergyMode::kPredecessor ||
      g.success_mode != SuccessMode::kCumulativeSum)
    throw std::invalid_argument(
        "solver: dp mode requires predecessor synergy and cumulative-sum "
        "success; use nested mode for the other variants");

  std::vector<DpTable> tables(g.n);  // tables[i] valid for i >= 1
  for (int i = g.n - 1; i >= 1; --i) {
    DpTable& tab = tables[i];
    tab.prev = {g.c_min, g.c_max, g.c_max > g.c_min ? ctx.cfg.dp_prev_cells : 1};
    tab.sum = {i * g.c_min, i * g.c_max,
               g.c_max > g.c_min ? ctx.cfg.dp_sum_cells : 1};
    tab.down.resize(static_cast<size_t>(tab.prev.cells) * tab.sum.cells);
    const DpTable* child = i + 1 < g.n ? &tables[i + 1] : nullptr;
    for (int jp = 0; jp < tab.prev.cells; ++jp) {
      for (int js = 0; js < tab.sum.cells; ++js) {
        HistoryState st{i, tab.prev.at(jp), tab.sum.at(js)};
        tab.down[static_cast<size_t>(jp) * tab.sum.cells + js] =
            dp_optimize(ctx, st, child).second;
      }
    }
  }

  EquilibriumResult res;
  res.diagnostics.mode = SolverConfig::Mode::kDp;
  res.diagnostics.grid_step =
      ctx.cfg.grid_points > 1 ? (g.c_max - g.c_min) / (ctx.cfg.grid_points - 1)
                              : 0.0;
  res.diagnostics.bracket_error =
      g.c_max > g.c_min ? (g.c_max - g.c_min) / (ctx.cfg.dp_prev_cells - 1)
                        : 0.0;

  HistoryState st{0, 0.0, 0.0};
  for (int i = 0; i < g.n; ++i) {
    const DpTable* child = i + 1 < g.n ? &tables[i + 1] : nullptr;
    double c = dp_optimize(ctx, st, child).first;
    res.profile.push_back(c);
    st = {i + 1, c, st.s_prev + c};
  }
  res.utilities = utilities(res.profile, g, ctx.cost);
  res.welfare = 0.0;
  for (double u : res.utilities) res.welfare += u;
  res.success = success(res.profile, g);
  return res;
}

}  // namespace

void SolverConfig::validate() const {
  require(grid_points >= 2, "solver: grid_points must be >= 2");
  require(refine_iters >= 0, "solver: refine_iters must be >= 0");
  require(std::isfinite(tol) && tol >= 0.0, "solver: tol must be >= 0");
  require(dp_prev_cells >= 2, "solver: dp_prev_cells must be >= 2");
  require(dp_sum_cells >= 2, "solver: dp_sum_cells must be >= 2");
}

ThresholdResult min_contribution_for_success(const HistoryState& state,
                                             const GameParams& params) {
  int successors = params.n - 1 - state.agent;
  double needed =
      params.threshold - state.s_prev - successors * params.c_max;
  ThresholdResult out;
  out.reachable = needed <= params.c_max;
  out.value = std::clamp(std::max(params.c_min, needed), params.c_min,
                         params.c_max);
  return out;
}

BestResponse best_response(const HistoryState& state, const GameParams& params,
                           const CostModel& cost, const SolverConfig& config) {
  params.validate();
  cost.validate();
  config.validate();
  validate_state(state, params);
  check_nested_depth(params, state);

  Ctx ctx{params, cost, config};
  BestResponse out;
  Core root = optimize_state(ctx, state);
  out.c_star = root.c_star;
  out.value = root.value;

  // Forward replay down the chain; each re-solve works on a strictly
  // shallower subtree, so the total cost is dominated by the root solve.
  HistoryState st = state;
  double c = root.c_star;
  for (;;) {
    out.continuation.push_back(c);
    if (st.agent == params.n - 1) break;
    st = {st.agent + 1, c, st.s_prev + c};
    c = optimize_state(ctx, st).c_star;
  }
  return out;
}

double action_value(const HistoryState& state, double c,
                    const GameParams& params, const CostModel& cost,
                    const SolverConfig& config) {
  params.validate();
  cost.validate();
  config.validate();
  validate_state(state, params);
  check_nested_depth(params, state);
  require(c >= params.c_min && c <= params.c_max,
          "action_value: c outside [c_min, c_max]");
  Ctx ctx{params, cost, config};
  return eval_action(ctx, state, c).value;
}

EquilibriumResult solve_spne(const GameParams& params, const CostModel& cost,
                             const SolverConfig& config) {
  params.validate();
  cost.validate();
  config.validate();
  Ctx ctx{params, cost, config};

  if (config.mode == SolverConfig::Mode::kDp) return solve_dp(ctx);

  if (params.n > kNestedDepthCap)
    throw std::invalid_argument(
        "solver: nested mode supports n <= 6; use dp mode for larger n");

  EquilibriumResult res;
  res.diagnostics.mode = SolverConfig::Mode::kNested;
  res.diagnostics.grid_step =
      params.c_max > params.c_min
          ? (params.c_max - params.c_min) / (config.grid_points - 1)
          : 0.0;

  Core root = optimize_state(ctx, {0, 0.0, 0.0});
  res.diagnostics.bracket_error = root.bracket_error;
  HistoryState st{0, 0.0, 0.0};
  double c = root.c_star;
  for (;;) {
    res.profile.push_back(c);
    if (st.agent == params.n - 1) break;
    st = {st.agent + 1, c, st.s_prev + c};
    c = optimize_state(ctx, st).c_star;
  }

  res.utilities = utilities(res.profile, params, cost);
  res.welfare = 0.0;
  for (double u : res.utilities) res.welfare += u;
  res.success = success(res.profile, params);
  return res;
}

std::vector<std::pair<double, double>> best_response_curve(
    int agent, const std::vector<double>& c_prev_samples, double s_prev,
    const GameParams& params, const CostModel& cost,
    const SolverConfig& config) {
  params.validate();
  cost.validate();
  config.validate();
  require(agent >= 1 && agent < params.n,
          "best_response_curve: agent must have a predecessor");
  std::vector<std::pair<double, double>> out;
  out.reserve(c_prev_samples.size());
  for (double x : c_prev_samples) {
    HistoryState st{agent, x, s_prev};
    validate_state(st, params);
    check_nested_depth(params, st);
    Ctx ctx{params, cost, config};
    out.emplace_back(x, optimize_state(ctx, st).c_star);
  }
  return out;
}

}  // namespace spgg
