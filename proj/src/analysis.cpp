#include "spgg/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "spgg/parallel.hpp"
#include "spgg/rng.hpp"

#include "json.hpp"

namespace spgg::analysis {

const char* sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::kGammaCoop: return "gamma_coop";
    case SweepParam::kRho: return "rho";
    case SweepParam::kThreshold: return "threshold";
  }
  return "?";
}

GameParams with_param(const GameParams& params, SweepParam p, double value) {
  GameParams out = params;
  switch (p) {
    case SweepParam::kGammaCoop: out.gamma_coop = value; break;
    case SweepParam::kRho: out.rho = value; break;
    case SweepParam::kThreshold: out.threshold = value; break;
  }
  return out;
}

std::vector<SweepRow> sweep(const GameParams& params, const CostModel& cost,
                            const SolverConfig& config, SweepParam param,
                            double lo, double hi, int count, int threads) {
  params.validate();
  cost.validate();
  config.validate();
  if (count < 1) throw std::invalid_argument("sweep: count must be >= 1");
  if (hi < lo) throw std::invalid_argument("sweep: hi must be >= lo");

  return parallel_map<SweepRow>(count, threads, [&](int j) {
    double value =
        count == 1 ? lo : lo + (hi - lo) * j / (count - 1);
    GameParams p = with_param(params, param, value);
    EquilibriumResult eq = solve_spne(p, cost, config);
    SweepRow row;
    row.param_value = value;
    row.profile = eq.profile;
    row.utilities = eq.utilities;
    row.welfare = eq.welfare;
    row.success = eq.success;
    return row;
  });
}

bool dominates(const std::vector<double>& u, const std::vector<double>& v,
               double eps) {
  if (u.size() != v.size() || u.empty())
    throw std::invalid_argument("dominates: size mismatch");
  bool strict = false;
  for (size_t i = 0; i < u.size(); ++i) {
    if (u[i] < v[i] + eps) return false;
    if (u[i] > v[i] + eps) strict = true;
  }
  return strict;
}

int count_dominating(const std::vector<Profile>& samples,
                     const std::vector<double>& spne_utilities,
                     const GameParams& params, const CostModel& cost,
                     double eps, std::vector<Profile>* examples) {
  int count = 0;
  for (const Profile& profile : samples) {
    if (dominates(utilities(profile, params, cost), spne_utilities, eps)) {
      ++count;
      if (examples && examples->size() < 10) examples->push_back(profile);
    }
  }
  return count;
}

ParetoReport pareto_assess(const GameParams& params, const CostModel& cost,
                           const SolverConfig& config, int sample_count,
                           std::uint64_t seed, double eps, int threads) {
  params.validate();
  cost.validate();
  config.validate();
  if (sample_count < 0)
    throw std::invalid_argument("pareto_assess: sample_count must be >= 0");

  ParetoReport rep;
  rep.seed = seed;
  rep.sample_count = sample_count;
  rep.spne_utilities = solve_spne(params, cost, config).utilities;

  struct Hit {
    bool dominating = false;
    Profile profile;
  };
  auto hits = parallel_map<Hit>(sample_count, threads, [&](int k) {
    SplitMix64 rng = SplitMix64::child(seed, static_cast<std::uint64_t>(k));
    Profile profile(params.n);
    for (int i = 0; i < params.n; ++i)
      profile[i] = rng.uniform(params.c_min, params.c_max);
    Hit hit;
    hit.dominating =
        dominates(utilities(profile, params, cost), rep.spne_utilities, eps);
    if (hit.dominating) hit.profile = std::move(profile);
    return hit;
  });
  for (auto& hit : hits) {
    if (!hit.dominating) continue;
    ++rep.dominating_count;
    if (rep.dominating_examples.size() < 10)
      rep.dominating_examples.push_back(std::move(hit.profile));
  }
  return rep;
}

double round6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return std::strtod(buf, nullptr);
}

std::string fmt6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

namespace {

nlohmann::ordered_json row_to_json(const SweepRow& row,
                                   const std::string& param_name, int n) {
  nlohmann::ordered_json j;
  j["param_name"] = param_name;
  j["param_value"] = round6(row.param_value);
  for (int i = 0; i < n; ++i)
    j["c_" + std::to_string(i + 1)] = round6(row.profile[i]);
  for (int i = 0; i < n; ++i)
    j["u_" + std::to_string(i + 1)] = round6(row.utilities[i]);
  j["welfare"] = round6(row.welfare);
  j["success"] = row.success;
  return j;
}

}  // namespace

void export_rows(std::ostream& out, const std::vector<SweepRow>& rows,
                 const std::string& param_name, int n, Format format) {
  if (format == Format::kJson) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& row : rows) arr.push_back(row_to_json(row, param_name, n));
    out << arr.dump(2) << "\n";
    return;
  }
  out << "param_name,param_value";
  for (int i = 1; i <= n; ++i) out << ",c_" << i;
  for (int i = 1; i <= n; ++i) out << ",u_" << i;
  out << ",welfare,success\n";
  for (const auto& row : rows) {
    out << param_name << ',' << fmt6(row.param_value);
    for (int i = 0; i < n; ++i) out << ',' << fmt6(row.profile[i]);
    for (int i = 0; i < n; ++i) out << ',' << fmt6(row.utilities[i]);
    out << ',' << fmt6(row.welfare) << ','
        << (row.success ? "true" : "false") << "\n";
  }
}

void export_rows_file(const std::string& path,
                      const std::vector<SweepRow>& rows,
                      const std::string& param_name, int n, Format format) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("export: cannot open '" + path + "' for writing");
  export_rows(out, rows, param_name, n, format);
  out.flush();
  if (!out) throw std::runtime_error("export: write to '" + path + "' failed");
}

void export_pareto(std::ostream& out, const ParetoReport& report,
                   Format format) {
  nlohmann::ordered_json j;
  j["sample_count"] = report.sample_count;
  j["seed"] = report.seed;
  j["dominating_count"] = report.dominating_count;
  nlohmann::ordered_json u = nlohmann::ordered_json::array();
  for (double x : report.spne_utilities) u.push_back(round6(x));
  j["spne_utilities"] = u;
  nlohmann::ordered_json ex = nlohmann::ordered_json::array();
  for (const auto& profile : report.dominating_examples) {
    nlohmann::ordered_json p = nlohmann::ordered_json::array();
    for (double c : profile) p.push_back(round6(c));
    ex.push_back(p);
  }
  j["dominating_examples"] = ex;

  if (format == Format::kJson) {
    out << j.dump(2) << "\n";
    return;
  }
  out << "sample_count,seed,dominating_count\n"
      << report.sample_count << ',' << report.seed << ','
      << report.dominating_count << "\n";
}

void export_curves(std::ostream& out, const std::vector<int>& episode,
                   const std::vector<double>& mean_reward,
                   const std::vector<double>& mean_quality,
                   const std::vector<double>& loss,
                   const std::vector<double>& kl, Format format) {
  size_t rows = episode.size();
  if (mean_reward.size() != rows || mean_quality.size() != rows ||
      loss.size() != rows || kl.size() != rows)
    throw std::invalid_argument("export_curves: column length mismatch");
  if (format == Format::kJson) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (size_t i = 0; i < rows; ++i) {
      nlohmann::ordered_json j;
      j["episode"] = episode[i];
      j["mean_reward"] = round6(mean_reward[i]);
      j["mean_quality"] = round6(mean_quality[i]);
      j["loss"] = round6(loss[i]);
      j["kl"] = round6(kl[i]);
      arr.push_back(j);
    }
    out << arr.dump(2) << "\n";
    return;
  }
  out << "episode,mean_reward,mean_quality,loss,kl\n";
  for (size_t i = 0; i < rows; ++i) {
    out << episode[i] << ',' << fmt6(mean_reward[i]) << ','
        << fmt6(mean_quality[i]) << ',' << fmt6(loss[i]) << ',' << fmt6(kl[i])
        << "\n";
  }
}

}  // namespace spgg::analysis
