#include "spgg/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace spgg::config {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument(what);
}

std::string join(const std::string& prefix, const char* key) {
  return prefix.empty() ? std::string(key) : prefix + "." + key;
}

void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail("config section must be an object: " + path);
}

void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail("unknown config key: " + join(prefix, it.key().c_str()));
  }
}

double require_num(const json& obj, const std::string& prefix,
                   const char* key) {
  if (!obj.contains(key)) fail("missing required key: " + join(prefix, key));
  const auto& v = obj.at(key);
  if (!v.is_number()) fail("key must be a number: " + join(prefix, key));
  return v.get<double>();
}

double get_num(const json& obj, const std::string& prefix, const char* key,
               double def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail("key must be a number: " + join(prefix, key));
  return v.get<double>();
}

int require_int(const json& obj, const std::string& prefix, const char* key) {
  if (!obj.contains(key)) fail("missing required key: " + join(prefix, key));
  const auto& v = obj.at(key);
  if (!v.is_number_integer())
    fail("key must be an integer: " + join(prefix, key));
  return v.get<int>();
}

int get_int(const json& obj, const std::string& prefix, const char* key,
            int def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_number_integer())
    fail("key must be an integer: " + join(prefix, key));
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& prefix, const char* key,
              bool def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) fail("key must be a boolean: " + join(prefix, key));
  return v.get<bool>();
}

std::string get_str(const json& obj, const std::string& prefix,
                    const char* key, const std::string& def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_string()) fail("key must be a string: " + join(prefix, key));
  return v.get<std::string>();
}

std::uint64_t get_u64(const json& obj, const std::string& prefix,
                      const char* key, std::uint64_t def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)))
    fail("key must be a non-negative integer: " + join(prefix, key));
  return v.get<std::uint64_t>();
}

GameParams parse_game(const json& j) {
  check_object(j, "game");
  check_keys(j, "game",
             {"n", "gamma_coop", "rho", "threshold", "penalty", "c_min",
              "c_max", "success_mode", "synergy_mode"});
  GameParams g;
  g.n = require_int(j, "game", "n");
  g.gamma_coop = require_num(j, "game", "gamma_coop");
  g.rho = require_num(j, "game", "rho");
  g.threshold = require_num(j, "game", "threshold");
  g.penalty = require_num(j, "game", "penalty");
  g.c_min = require_num(j, "game", "c_min");
  g.c_max = require_num(j, "game", "c_max");
  std::string sm = get_str(j, "game", "success_mode", "cumulative_sum");
  if (sm == "cumulative_sum") {
    g.success_mode = SuccessMode::kCumulativeSum;
  } else if (sm == "final_score") {
    g.success_mode = SuccessMode::kFinalScore;
  } else {
    fail("game.success_mode must be cumulative_sum or final_score");
  }
  std::string sy = get_str(j, "game", "synergy_mode", "predecessor");
  if (sy == "predecessor") {
    g.synergy_mode = SynergyMode::kPredecessor;
  } else if (sy == "self") {
    g.synergy_mode = SynergyMode::kSelf;
  } else {
    fail("game.synergy_mode must be predecessor or self");
  }
  return g;
}

CostModel parse_cost(const json& j) {
  check_object(j, "cost");
  check_keys(j, "cost", {"kind", "a", "b"});
  std::string kind = get_str(j, "cost", "kind", "");
  if (kind.empty()) fail("missing required key: cost.kind");
  if (kind == "linear") {
    if (j.contains("b")) fail("cost.b is only valid for the quadratic kind");
    return CostModel::linear(require_num(j, "cost", "a"));
  }
  if (kind == "quadratic") {
    return CostModel::quadratic(require_num(j, "cost", "a"),
                                require_num(j, "cost", "b"));
  }
  fail("cost.kind must be linear or quadratic");
}

SolverConfig parse_solver(const json& j) {
  check_object(j, "solver");
  check_keys(j, "solver",
             {"mode", "grid_points", "refine_iters", "tol", "tie_break",
              "dp_prev_cells", "dp_sum_cells"});
  SolverConfig s;
  std::string mode = get_str(j, "solver", "mode", "nested");
  if (mode == "nested") {
    s.mode = SolverConfig::Mode::kNested;
  } else if (mode == "dp") {
    s.mode = SolverConfig::Mode::kDp;
  } else {
    fail("solver.mode must be nested or dp");
  }
  std::string tb = get_str(j, "solver", "tie_break", "prefer_larger");
  if (tb != "prefer_larger") fail("solver.tie_break must be prefer_larger");
  s.grid_points = get_int(j, "solver", "grid_points", s.grid_points);
  s.refine_iters = get_int(j, "solver", "refine_iters", s.refine_iters);
  s.tol = get_num(j, "solver", "tol", s.tol);
  s.dp_prev_cells = get_int(j, "solver", "dp_prev_cells", s.dp_prev_cells);
  s.dp_sum_cells = get_int(j, "solver", "dp_sum_cells", s.dp_sum_cells);
  return s;
}

rl::TrainerConfig parse_trainer(const json& j) {
  check_object(j, "trainer");
  check_keys(j, "trainer",
             {"belief", "policy", "lr", "clip_ratio", "value_coef",
              "entropy_coef", "entropy_bonus", "grad_clip", "discount",
              "gae_lambda", "target_kl", "epochs", "minibatch_size",
              "buffer_size", "max_episodes", "reward_threshold",
              "quality_target", "plateau_margin", "curve_window"});
  rl::TrainerConfig t;
  if (j.contains("belief")) {
    const auto& b = j.at("belief");
    check_object(b, "trainer.belief");
    check_keys(b, "trainer.belief", {"task", "context", "position"});
    t.belief.task = get_int(b, "trainer.belief", "task", t.belief.task);
    t.belief.context =
        get_int(b, "trainer.belief", "context", t.belief.context);
    t.belief.position =
        get_int(b, "trainer.belief", "position", t.belief.position);
  }
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    check_object(p, "trainer.policy");
    check_keys(p, "trainer.policy",
               {"hidden_dim", "std_floor", "init_std"});
    t.policy.hidden_dim =
        get_int(p, "trainer.policy", "hidden_dim", t.policy.hidden_dim);
    t.policy.std_floor =
        get_num(p, "trainer.policy", "std_floor", t.policy.std_floor);
    t.policy.init_std =
        get_num(p, "trainer.policy", "init_std", t.policy.init_std);
  }
  t.policy.input_dim = t.belief.total();
  t.lr = get_num(j, "trainer", "lr", t.lr);
  t.clip_ratio = get_num(j, "trainer", "clip_ratio", t.clip_ratio);
  t.value_coef = get_num(j, "trainer", "value_coef", t.value_coef);
  t.entropy_coef = get_num(j, "trainer", "entropy_coef", t.entropy_coef);
  t.entropy_bonus = get_bool(j, "trainer", "entropy_bonus", t.entropy_bonus);
  t.grad_clip = get_num(j, "trainer", "grad_clip", t.grad_clip);
  t.discount = get_num(j, "trainer", "discount", t.discount);
  t.gae_lambda = get_num(j, "trainer", "gae_lambda", t.gae_lambda);
  t.target_kl = get_num(j, "trainer", "target_kl", t.target_kl);
  t.epochs = get_int(j, "trainer", "epochs", t.epochs);
  t.minibatch_size = get_int(j, "trainer", "minibatch_size", t.minibatch_size);
  t.buffer_size = get_int(j, "trainer", "buffer_size", t.buffer_size);
  t.max_episodes = get_int(j, "trainer", "max_episodes", t.max_episodes);
  t.reward_threshold =
      get_num(j, "trainer", "reward_threshold", t.reward_threshold);
  t.quality_target =
      get_num(j, "trainer", "quality_target", t.quality_target);
  t.plateau_margin =
      get_num(j, "trainer", "plateau_margin", t.plateau_margin);
  t.curve_window = get_int(j, "trainer", "curve_window", t.curve_window);
  return t;
}

rl::SyntheticEnv::Params parse_env(const json& j) {
  check_object(j, "env");
  check_keys(j, "env",
             {"task_seed", "surface", "obs", "score_lo", "score_hi",
              "synergy_weight", "deep_weight", "cost_scale",
              "constant_level"});
  rl::SyntheticEnv::Params e;
  e.task_seed = get_u64(j, "env", "task_seed", e.task_seed);
  std::string surf = get_str(j, "env", "surface", "sigmoid");
  if (surf == "sigmoid") {
    e.surface = rl::SyntheticEnv::Surface::kSigmoid;
  } else if (surf == "token_linear") {
    e.surface = rl::SyntheticEnv::Surface::kTokenLinear;
  } else if (surf == "mean_linear") {
    e.surface = rl::SyntheticEnv::Surface::kMeanLinear;
  } else if (surf == "constant") {
    e.surface = rl::SyntheticEnv::Surface::kConstant;
  } else {
    fail("env.surface must be sigmoid, token_linear, mean_linear or constant");
  }
  std::string obs = get_str(j, "env", "obs", "partial");
  if (obs == "partial") {
    e.obs = rl::ObsMode::kPartial;
  } else if (obs == "full") {
    e.obs = rl::ObsMode::kFull;
  } else {
    fail("env.obs must be partial or full");
  }
  e.score_lo = get_num(j, "env", "score_lo", e.score_lo);
  e.score_hi = get_num(j, "env", "score_hi", e.score_hi);
  e.synergy_weight = get_num(j, "env", "synergy_weight", e.synergy_weight);
  e.deep_weight = get_num(j, "env", "deep_weight", e.deep_weight);
  e.cost_scale = get_num(j, "env", "cost_scale", e.cost_scale);
  e.constant_level = get_num(j, "env", "constant_level", e.constant_level);
  return e;
}

SweepConfig parse_sweep(const json& j) {
  check_object(j, "sweep");
  check_keys(j, "sweep", {"param", "lo", "hi", "count"});
  SweepConfig s;
  std::string p = get_str(j, "sweep", "param", "gamma_coop");
  if (p == "gamma_coop") {
    s.param = analysis::SweepParam::kGammaCoop;
  } else if (p == "rho") {
    s.param = analysis::SweepParam::kRho;
  } else if (p == "threshold") {
    s.param = analysis::SweepParam::kThreshold;
  } else {
    fail("sweep.param must be gamma_coop, rho or threshold");
  }
  s.lo = get_num(j, "sweep", "lo", s.lo);
  s.hi = get_num(j, "sweep", "hi", s.hi);
  s.count = get_int(j, "sweep", "count", s.count);
  return s;
}

ParetoConfig parse_pareto(const json& j) {
  check_object(j, "pareto");
  check_keys(j, "pareto", {"samples", "eps"});
  ParetoConfig p;
  p.samples = get_int(j, "pareto", "samples", p.samples);
  p.eps = get_num(j, "pareto", "eps", p.eps);
  return p;
}

BestResponseConfig parse_best_response(const json& j) {
  check_object(j, "best_response");
  check_keys(j, "best_response", {"agent", "points", "s_prev"});
  BestResponseConfig b;
  b.agent = get_int(j, "best_response", "agent", b.agent);
  b.points = get_int(j, "best_response", "points", b.points);
  b.s_prev = get_num(j, "best_response", "s_prev", b.s_prev);
  return b;
}

OutputConfig parse_output(const json& j) {
  check_object(j, "output");
  check_keys(j, "output", {"path", "format"});
  OutputConfig o;
  o.path = get_str(j, "output", "path", "");
  std::string f = get_str(j, "output", "format", "csv");
  if (f == "csv") {
    o.format = analysis::Format::kCsv;
  } else if (f == "json") {
    o.format = analysis::Format::kJson;
  } else {
    fail("output.format must be csv or json");
  }
  return o;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail("config is not valid JSON: " + std::string(e.what()));
  }
  check_object(j, "(top level)");
  check_keys(j, "",
             {"game", "cost", "solver", "trainer", "env", "sweep", "pareto",
              "best_response", "seed", "output", "threads"});
  if (!j.contains("game")) fail("missing required section: game");
  if (!j.contains("cost")) fail("missing required section: cost");
  RunConfig cfg;
  cfg.game = parse_game(j.at("game"));
  cfg.cost = parse_cost(j.at("cost"));
  if (j.contains("solver")) cfg.solver = parse_solver(j.at("solver"));
  if (j.contains("trainer")) cfg.trainer = parse_trainer(j.at("trainer"));
  if (j.contains("env")) cfg.env = parse_env(j.at("env"));
  if (j.contains("sweep")) cfg.sweep = parse_sweep(j.at("sweep"));
  if (j.contains("pareto")) cfg.pareto = parse_pareto(j.at("pareto"));
  if (j.contains("best_response"))
    cfg.best_response = parse_best_response(j.at("best_response"));
  cfg.seed = get_u64(j, "", "seed", cfg.seed);
  if (j.contains("output")) cfg.output = parse_output(j.at("output"));
  cfg.threads = get_int(j, "", "threads", cfg.threads);
  if (cfg.threads < 0) fail("threads must be >= 0");
  cfg.game.validate();
  cfg.cost.validate();
  cfg.solver.validate();
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  ordered_json j;
  j["game"] = {
      {"n", cfg.game.n},
      {"gamma_coop", cfg.game.gamma_coop},
      {"rho", cfg.game.rho},
      {"threshold", cfg.game.threshold},
      {"penalty", cfg.game.penalty},
      {"c_min", cfg.game.c_min},
      {"c_max", cfg.game.c_max},
      {"success_mode", cfg.game.success_mode == SuccessMode::kCumulativeSum
                           ? "cumulative_sum"
                           : "final_score"},
      {"synergy_mode", cfg.game.synergy_mode == SynergyMode::kPredecessor
                           ? "predecessor"
                           : "self"},
  };
  if (cfg.cost.kind == CostModel::Kind::kLinear) {
    j["cost"] = {{"kind", "linear"}, {"a", cfg.cost.a}};
  } else {
    j["cost"] = {{"kind", "quadratic"}, {"a", cfg.cost.a}, {"b", cfg.cost.b}};
  }
  j["solver"] = {
      {"mode", cfg.solver.mode == SolverConfig::Mode::kNested ? "nested" : "dp"},
      {"grid_points", cfg.solver.grid_points},
      {"refine_iters", cfg.solver.refine_iters},
      {"tol", cfg.solver.tol},
      {"tie_break", "prefer_larger"},
      {"dp_prev_cells", cfg.solver.dp_prev_cells},
      {"dp_sum_cells", cfg.solver.dp_sum_cells},
  };
  j["trainer"] = {
      {"belief",
       {{"task", cfg.trainer.belief.task},
        {"context", cfg.trainer.belief.context},
        {"position", cfg.trainer.belief.position}}},
      {"policy",
       {{"hidden_dim", cfg.trainer.policy.hidden_dim},
        {"std_floor", cfg.trainer.policy.std_floor},
        {"init_std", cfg.trainer.policy.init_std}}},
      {"lr", cfg.trainer.lr},
      {"clip_ratio", cfg.trainer.clip_ratio},
      {"value_coef", cfg.trainer.value_coef},
      {"entropy_coef", cfg.trainer.entropy_coef},
      {"entropy_bonus", cfg.trainer.entropy_bonus},
      {"grad_clip", cfg.trainer.grad_clip},
      {"discount", cfg.trainer.discount},
      {"gae_lambda", cfg.trainer.gae_lambda},
      {"target_kl", cfg.trainer.target_kl},
      {"epochs", cfg.trainer.epochs},
      {"minibatch_size", cfg.trainer.minibatch_size},
      {"buffer_size", cfg.trainer.buffer_size},
      {"max_episodes", cfg.trainer.max_episodes},
      {"reward_threshold", cfg.trainer.reward_threshold},
      {"quality_target", cfg.trainer.quality_target},
      {"plateau_margin", cfg.trainer.plateau_margin},
      {"curve_window", cfg.trainer.curve_window},
  };
  const auto& e = cfg.env;
  const char* surf = "sigmoid";
  switch (e.surface) {
    case rl::SyntheticEnv::Surface::kSigmoid: surf = "sigmoid"; break;
    case rl::SyntheticEnv::Surface::kTokenLinear: surf = "token_linear"; break;
    case rl::SyntheticEnv::Surface::kMeanLinear: surf = "mean_linear"; break;
    case rl::SyntheticEnv::Surface::kConstant: surf = "constant"; break;
  }
  j["env"] = {
      {"task_seed", e.task_seed},
      {"surface", surf},
      {"obs", e.obs == rl::ObsMode::kPartial ? "partial" : "full"},
      {"score_lo", e.score_lo},
      {"score_hi", e.score_hi},
      {"synergy_weight", e.synergy_weight},
      {"deep_weight", e.deep_weight},
      {"cost_scale", e.cost_scale},
      {"constant_level", e.constant_level},
  };
  j["sweep"] = {
      {"param", analysis::sweep_param_name(cfg.sweep.param)},
      {"lo", cfg.sweep.lo},
      {"hi", cfg.sweep.hi},
      {"count", cfg.sweep.count},
  };
  j["pareto"] = {{"samples", cfg.pareto.samples}, {"eps", cfg.pareto.eps}};
  j["best_response"] = {
      {"agent", cfg.best_response.agent},
      {"points", cfg.best_response.points},
      {"s_prev", cfg.best_response.s_prev},
  };
  j["seed"] = cfg.seed;
  j["output"] = {
      {"path", cfg.output.path},
      {"format", cfg.output.format == analysis::Format::kCsv ? "csv" : "json"},
  };
  j["threads"] = cfg.threads;
  return j.dump(2) + "\n";
}

}  // namespace spgg::config
