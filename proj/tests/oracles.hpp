#pragma once

// Reference implementations for the tests, kept deliberately naive and
// independent of the library: payoffs transcribed longhand, equilibria by
// exhaustive grid search, derivatives by central differences. Slow is fine
// here; agreement with these is what the fast code is measured against.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

struct GameSpec {
  int n = 3;
  double gamma = 1.5;
  double rho = 1.8;
  double B = 1.0;
  double P = 0.5;
  double c_min = 0.0;
  double c_max = 1.0;
  bool self_synergy = false;  // synergy source: own instead of predecessor
  bool final_score = false;   // aggregate: last contribution instead of sum
  std::function<double(double)> ell = [](double c) { return c; };
};

inline double aggregate(const std::vector<double>& c, const GameSpec& g) {
  if (g.final_score) return c.back();
  double s = 0.0;
  for (double x : c) s += x;
  return s;
}

inline double payoff(int i, const std::vector<double>& c, const GameSpec& g) {
  double agg = aggregate(c, g);
  double prev = i == 0 ? 0.0 : c[static_cast<std::size_t>(i) - 1];
  double own = c[static_cast<std::size_t>(i)];
  double src = g.self_synergy ? own : prev;
  double r = -g.ell(own);
  r += g.gamma * (src / g.B) * own;
  r += (g.rho / g.n) * agg;
  if (agg < g.B) r -= g.P;
  return r;
}

inline double welfare(const std::vector<double>& c, const GameSpec& g) {
  double w = 0.0;
  for (int i = 0; i < g.n; ++i) w += payoff(i, c, g);
  return w;
}

// Contributions of agents i..n-1 when each plays the exhaustive-grid best
// response to its successors, given the predecessor's contribution and the
// accumulated sum of everyone before agent i. Exact-tie preference goes to
// the larger contribution (ascending scan with >=).
inline std::vector<double> grid_continuation(const GameSpec& g, int i,
                                             double prev, double sum,
                                             int pts) {
  if (i == g.n) return {};
  double best_v = -1e300;
  std::vector<double> best;
  for (int k = 0; k < pts; ++k) {
    double c = g.c_min + (g.c_max - g.c_min) * k / (pts - 1);
    auto tail = grid_continuation(g, i + 1, c, sum + c, pts);
    double agg;
    if (g.final_score) {
      agg = tail.empty() ? c : tail.back();
    } else {
      agg = sum + c;
      for (double x : tail) agg += x;
    }
    double src = g.self_synergy ? c : prev;
    double v = -g.ell(c) + g.gamma * (src / g.B) * c + (g.rho / g.n) * agg;
    if (agg < g.B) v -= g.P;
    if (v >= best_v) {
      best_v = v;
      best.clear();
      best.push_back(c);
      for (double x : tail) best.push_back(x);
    }
  }
  return best;
}

inline std::vector<double> grid_spne(const GameSpec& g, int pts) {
  return grid_continuation(g, 0, 0.0, 0.0, pts);
}

// Dense-scan argmax of a scalar function; exact ties prefer the larger x.
inline double argmax_1d(const std::function<double(double)>& f, double lo,
                        double hi, int pts) {
  double best_x = lo, best_v = -1e300;
  for (int k = 0; k < pts; ++k) {
    double x = lo + (hi - lo) * k / (pts - 1);
    double v = f(x);
    if (v >= best_v) {
      best_v = v;
      best_x = x;
    }
  }
  return best_x;
}

inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double gaussian_logpdf(double x, double mu, double sigma) {
  static const double kLog2Pi = std::log(2.0 * std::acos(-1.0));
  double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * kLog2Pi;
}

}  // namespace oracle
