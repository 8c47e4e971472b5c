#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spgg/analysis.hpp"
#include "spgg/config.hpp"
#include "spgg/game.hpp"
#include "spgg/rl/env.hpp"
#include "spgg/rl/trainer.hpp"
#include "spgg/solver.hpp"
#include "spgg/theory.hpp"

namespace {

using spgg::analysis::Format;
using spgg::analysis::fmt6;
using spgg::analysis::round6;
using spgg::config::RunConfig;

// stdout carries the machine-readable report; --out mirrors the same bytes.
void emit(const std::string& text, const std::string& path) {
  std::cout << text;
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  f << text;
  f.flush();
  if (!f) throw std::runtime_error("failed writing output file: " + path);
}

int resolve_threads(int configured) {
  if (configured > 0) return configured;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

nlohmann::ordered_json profile_json(const spgg::Profile& p) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (double c : p) a.push_back(round6(c));
  return a;
}

int cmd_solve(const RunConfig& cfg) {
  auto res = spgg::solve_spne(cfg.game, cfg.cost, cfg.solver);
  nlohmann::ordered_json j;
  j["profile"] = profile_json(res.profile);
  j["utilities"] = profile_json(res.utilities);
  j["welfare"] = round6(res.welfare);
  j["success"] = res.success;
  j["diagnostics"] = {
      {"mode",
       res.diagnostics.mode == spgg::SolverConfig::Mode::kNested ? "nested"
                                                                 : "dp"},
      {"grid_step", round6(res.diagnostics.grid_step)},
      {"bracket_error", round6(res.diagnostics.bracket_error)},
  };
  emit(j.dump(2) + "\n", cfg.output.path);
  return 0;
}

int cmd_check(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  auto assume = spgg::theory::check_assumptions(cfg.game, cfg.cost);
  j["assumptions"] = {
      {"c_min_positive", assume.c_min_positive},
      {"simulation_only", assume.simulation_only},
      {"marginal_positive", assume.marginal_positive},
      {"convex", assume.convex},
      {"all_ok", assume.all_ok()},
      {"failures", assume.failures},
  };
  if (assume.c_min_positive) {
    auto cond = spgg::theory::theorem1_conditions(cfg.game, cfg.cost);
    j["conditions"] = {
        {"rho_ok", cond.rho_ok},
        {"rho_required", round6(cond.rho_required)},
        {"gamma_ok", cond.gamma_ok},
        {"gamma_required", round6(cond.gamma_required)},
        {"penalty_ok", cond.penalty_ok},
        {"penalty_required", round6(cond.penalty_required)},
        {"all_ok", cond.all_ok},
    };
    auto ver = spgg::theory::verify_theorem1(cfg.game, cfg.cost, cfg.solver);
    j["full_contribution"] = {
        {"conditions_met", ver.conditions_met},
        {"verified", ver.verified},
        {"max_deviation", round6(ver.max_deviation)},
        {"tolerance", round6(ver.tolerance)},
        {"profile", profile_json(ver.profile)},
    };
  } else {
    // the sufficient conditions divide by c_min; nothing to check at 0
    j["conditions"] = nullptr;
    j["full_contribution"] = nullptr;
  }
  auto mono = spgg::theory::verify_lemma1(cfg.game, cfg.cost, cfg.solver);
  j["best_response_monotonic"] = {
      {"passed", mono.passed},
      {"tolerance", round6(mono.tolerance)},
      {"curves_checked", mono.curves_checked},
      {"violations", mono.violations.size()},
  };
  emit(j.dump(2) + "\n", cfg.output.path);
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  auto rows = spgg::analysis::sweep(cfg.game, cfg.cost, cfg.solver,
                                    cfg.sweep.param, cfg.sweep.lo,
                                    cfg.sweep.hi, cfg.sweep.count,
                                    resolve_threads(cfg.threads));
  std::ostringstream out;
  spgg::analysis::export_rows(out, rows,
                              spgg::analysis::sweep_param_name(cfg.sweep.param),
                              cfg.game.n, cfg.output.format);
  emit(out.str(), cfg.output.path);
  return 0;
}

int cmd_pareto(const RunConfig& cfg) {
  auto report = spgg::analysis::pareto_assess(
      cfg.game, cfg.cost, cfg.solver, cfg.pareto.samples, cfg.seed,
      cfg.pareto.eps, resolve_threads(cfg.threads));
  std::ostringstream out;
  spgg::analysis::export_pareto(out, report, cfg.output.format);
  emit(out.str(), cfg.output.path);
  return 0;
}

int cmd_best_response(const RunConfig& cfg) {
  const auto& br = cfg.best_response;
  if (br.points < 2)
    throw std::invalid_argument("best_response.points must be >= 2");
  // last sample pinned to hi: the affine form can overshoot by an ulp
  std::vector<double> samples(static_cast<std::size_t>(br.points));
  double lo = cfg.game.c_min, hi = cfg.game.c_max;
  for (int k = 0; k < br.points; ++k)
    samples[static_cast<std::size_t>(k)] =
        k == br.points - 1 ? hi : lo + (hi - lo) * k / (br.points - 1);
  auto curve = spgg::best_response_curve(br.agent, samples, br.s_prev,
                                         cfg.game, cfg.cost, cfg.solver);
  std::ostringstream out;
  if (cfg.output.format == Format::kJson) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [c_prev, c_star] : curve)
      arr.push_back({{"c_prev", round6(c_prev)}, {"c_star", round6(c_star)}});
    nlohmann::ordered_json j;
    j["agent"] = br.agent;
    j["s_prev"] = round6(br.s_prev);
    j["curve"] = arr;
    out << j.dump(2) << "\n";
  } else {
    out << "c_prev,c_star\n";
    for (const auto& [c_prev, c_star] : curve)
      out << fmt6(c_prev) << ',' << fmt6(c_star) << "\n";
  }
  emit(out.str(), cfg.output.path);
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& checkpoint_path) {
  spgg::rl::SyntheticEnv env(cfg.env);
  auto result = spgg::rl::train(env, cfg.game, cfg.trainer, cfg.seed);
  std::ostringstream out;
  spgg::analysis::export_curves(out, result.curves.episode,
                                result.curves.mean_reward,
                                result.curves.mean_quality, result.curves.loss,
                                result.curves.kl, cfg.output.format);
  emit(out.str(), cfg.output.path);
  if (!checkpoint_path.empty())
    spgg::rl::save_checkpoint(checkpoint_path, result.policies, cfg.trainer);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Sequential public-goods laboratory: equilibrium solver, theory checks, "
      "parameter studies, and policy-gradient training"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string format;
  int threads = 0;
  std::string checkpoint_path;

  app.add_option("--config", config_path, "JSON config file")
      ->envname("SPGG_CONFIG")
      ->required();
  auto* seed_opt = app.add_option("--seed", seed, "override config seed")
                       ->envname("SPGG_SEED");
  auto* out_opt = app.add_option("--out", out_path, "override output path")
                      ->envname("SPGG_OUT");
  auto* format_opt =
      app.add_option("--format", format, "override output format (csv|json)")
          ->envname("SPGG_FORMAT")
          ->check(CLI::IsMember({"csv", "json"}));
  auto* threads_opt =
      app.add_option("--threads", threads,
                     "worker threads (0 = all cores; 1 = reproducible)")
          ->envname("SPGG_THREADS")
          ->check(CLI::NonNegativeNumber);

  auto* solve_cmd =
      app.add_subcommand("solve", "equilibrium profile and payoffs (JSON)");
  auto* check_cmd = app.add_subcommand(
      "check", "cost-model assumptions, full-contribution conditions, "
               "best-response monotonicity (JSON)");
  auto* sweep_cmd =
      app.add_subcommand("sweep", "equilibrium across a parameter range");
  auto* pareto_cmd = app.add_subcommand(
      "pareto", "sampled search for profiles dominating the equilibrium");
  auto* br_cmd = app.add_subcommand(
      "best-response", "one agent's response curve over the predecessor grid");
  auto* train_cmd =
      app.add_subcommand("train", "policy-gradient training, curve export");
  train_cmd->add_option("--checkpoint", checkpoint_path,
                        "write final policies to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = spgg::config::load_config_file(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (out_opt->count() > 0) cfg.output.path = out_path;
    if (format_opt->count() > 0)
      cfg.output.format = format == "json" ? Format::kJson : Format::kCsv;
    if (threads_opt->count() > 0) cfg.threads = threads;

    if (solve_cmd->parsed()) return cmd_solve(cfg);
    if (check_cmd->parsed()) return cmd_check(cfg);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg);
    if (pareto_cmd->parsed()) return cmd_pareto(cfg);
    if (br_cmd->parsed()) return cmd_best_response(cfg);
    if (train_cmd->parsed()) return cmd_train(cfg, checkpoint_path);
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
