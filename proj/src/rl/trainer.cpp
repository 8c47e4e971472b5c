#include "spgg/rl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace spgg::rl {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void TrainerConfig::validate() const {
  policy.validate();
  require(belief.task > 0 && belief.context > 0 && belief.position > 0,
          "belief block dims must be > 0");
  require(belief.total() == policy.input_dim,
          "belief blocks must total the policy input dim");
  require(policy.action_dim == ConfigVector::kDim,
          "policy action dim must match the config vector");
  require(lr > 0.0, "lr must be > 0");
  require(clip_ratio > 0.0 && clip_ratio < 1.0, "clip_ratio must be in (0, 1)");
  require(value_coef >= 0.0, "value_coef must be >= 0");
  require(entropy_coef >= 0.0, "entropy_coef must be >= 0");
  require(grad_clip > 0.0, "grad_clip must be > 0");
  require(discount > 0.0 && discount <= 1.0, "discount must be in (0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0,
          "gae_lambda must be in [0, 1]");
  require(target_kl >= 0.0, "target_kl must be >= 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(minibatch_size >= 1, "minibatch_size must be >= 1");
  require(buffer_size >= minibatch_size,
          "buffer_size must be >= minibatch_size");
  require(buffer_size % minibatch_size == 0,
          "buffer_size must be divisible by minibatch_size");
  require(max_episodes >= 0, "max_episodes must be >= 0");
  require(curve_window >= 1, "curve_window must be >= 1");
  require(plateau_margin > 0.0, "plateau_margin must be > 0");
  require(std::isfinite(reward_threshold) && std::isfinite(quality_target),
          "early-stop thresholds must be finite");
}

GameParams default_training_game() {
  GameParams g;
  g.n = 3;
  g.gamma_coop = 1.5;
  g.rho = 1.8;
  g.threshold = 0.85;
  g.penalty = 1.5;
  g.c_min = 0.0;
  g.c_max = 1.0;
  return g;
}

void ContextStats::update(std::span<const double> rewards,
                          std::span<const double> scores) {
  if (rewards.size() != reward_mean.size() ||
      scores.size() != score_mean.size())
    throw std::invalid_argument("stats update size mismatch");
  ++episodes;
  double inv = 1.0 / static_cast<double>(episodes);
  for (std::size_t i = 0; i < reward_mean.size(); ++i) {
    reward_mean[i] += (rewards[i] - reward_mean[i]) * inv;
    score_mean[i] += (scores[i] - score_mean[i]) * inv;
  }
}

std::vector<double> context_features(int agent, int n_agents,
                                     std::span<const double> visible,
                                     const ContextStats& stats,
                                     const BeliefDims& dims) {
  require(agent >= 0 && agent < n_agents, "agent index out of range");
  require(static_cast<int>(stats.reward_mean.size()) == n_agents,
          "stats sized for a different agent count");
  double n = static_cast<double>(n_agents);
  double c_prev = visible.empty() ? 0.0 : visible.back();
  double sum = std::accumulate(visible.begin(), visible.end(), 0.0);
  double mean = visible.empty() ? 0.0 : sum / static_cast<double>(visible.size());
  std::vector<double> f = {
      c_prev,
      mean,
      static_cast<double>(visible.size()) / n,
      static_cast<double>(agent) / n,
      stats.reward_mean[static_cast<std::size_t>(agent)],
      stats.score_mean[static_cast<std::size_t>(agent)],
      sum / n,
      0.0,
  };
  f.resize(static_cast<std::size_t>(dims.context), 0.0);
  return f;
}

Trajectory rollout_episode(const SequentialEnv& env,
                           std::span<const PolicyNet> policies,
                           const GameParams& game, const ContextStats& stats,
                           const BeliefDims& dims, SplitMix64& rng) {
  game.validate();
  require(static_cast<int>(policies.size()) == game.n,
          "one policy per agent required");
  Trajectory traj;
  traj.steps.reserve(static_cast<std::size_t>(game.n));
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(game.n));
  for (int i = 0; i < game.n; ++i) {
    std::span<const double> visible;
    if (env.obs_mode() == ObsMode::kFull) {
      visible = {scores.data(), scores.size()};
    } else if (!scores.empty()) {
      visible = {scores.data() + scores.size() - 1, 1};
    }
    auto feats = context_features(i, game.n, visible, stats, dims);
    auto belief = build_belief(env.task_id(), feats, i, dims);
    auto act = sample_action(policies[static_cast<std::size_t>(i)], belief.v,
                             rng);
    double s = env.score(i, act.config, visible);
    if (!(s >= env.score_min() - 1e-9 && s <= env.score_max() + 1e-9))
      throw std::runtime_error(
          "env returned a score outside its declared range");
    Transition t;
    t.belief = std::move(belief.v);
    t.action_raw = act.raw;
    t.config = act.config;
    t.score = s;
    t.cost = env.cost(act.config);
    t.logp = act.logp;
    t.value = act.value;
    traj.steps.push_back(std::move(t));
    scores.push_back(s);
  }
  return traj;
}

std::vector<AgentSignal> compute_rewards(const Trajectory& traj,
                                         const GameParams& game) {
  game.validate();
  require(static_cast<int>(traj.steps.size()) == game.n,
          "trajectory length must equal the agent count");
  Profile scores(traj.steps.size());
  for (std::size_t i = 0; i < traj.steps.size(); ++i)
    scores[i] = traj.steps[i].score;
  double agg = aggregate_score(scores, game);
  std::vector<AgentSignal> out(traj.steps.size());
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    double c_prev = i == 0 ? 0.0 : scores[i - 1];
    auto rb = reward_terms(traj.steps[i].cost, c_prev, scores[i], agg, game);
    out[i].reward = rb.total;
    out[i].advantage = rb.total - traj.steps[i].value;
  }
  return out;
}

void ExperienceBuffer::push(const Transition& t, const AgentSignal& s) {
  beliefs.push_back(t.belief);
  actions_raw.push_back(t.action_raw);
  logp_old.push_back(t.logp);
  returns.push_back(s.reward);
  advantages.push_back(s.advantage);
}

void ExperienceBuffer::clear() {
  beliefs.clear();
  actions_raw.clear();
  logp_old.clear();
  returns.clear();
  advantages.clear();
}

LossStats ppo_loss(const PolicyNet& net, const ExperienceBuffer& buf,
                   std::span<const int> rows, const TrainerConfig& cfg,
                   std::vector<double>* grad) {
  require(!rows.empty(), "ppo_loss needs a nonempty batch");
  if (grad) grad->assign(net.param_count(), 0.0);
  double m = static_cast<double>(rows.size());
  double eps = cfg.clip_ratio;
  double ce = cfg.entropy_bonus ? cfg.entropy_coef : 0.0;
  int a = net.config().action_dim;
  std::vector<double> d_mean(static_cast<std::size_t>(a));
  std::vector<double> d_std(static_cast<std::size_t>(a));
  LossStats st;
  for (int row : rows) {
    std::size_t r = static_cast<std::size_t>(row);
    const auto& belief = buf.beliefs[r];
    std::span<const double> action{buf.actions_raw[r].data(),
                                   buf.actions_raw[r].size()};
    auto fwd = net.forward(belief);
    double logp = net.log_prob(fwd, action);
    double ratio = std::exp(logp - buf.logp_old[r]);
    double adv = buf.advantages[r];
    double unclipped = ratio * adv;
    double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    double surr = std::min(unclipped, clipped);
    double verr = fwd.value - buf.returns[r];
    double ent = net.entropy(fwd);
    st.surrogate += surr / m;
    st.value_loss += verr * verr / m;
    st.entropy += ent / m;
    st.approx_kl += (buf.logp_old[r] - logp) / m;
    if (std::abs(ratio - 1.0) > eps) st.clip_fraction += 1.0 / m;
    if (grad) {
      bool active = adv >= 0.0 ? ratio <= 1.0 + eps : ratio >= 1.0 - eps;
      double dlogp = active ? -(adv * ratio) / m : 0.0;
      for (int d = 0; d < a; ++d) {
        std::size_t dd = static_cast<std::size_t>(d);
        double sd = fwd.stddev[dd];
        double z = (action[dd] - fwd.mean[dd]) / sd;
        d_mean[dd] = dlogp * z / sd;
        d_std[dd] = dlogp * (z * z - 1.0) / sd - ce / (m * sd);
      }
      double d_value = cfg.value_coef * 2.0 * verr / m;
      net.backward(fwd, belief, d_mean, d_std, d_value, *grad);
    }
  }
  st.loss = -st.surrogate + cfg.value_coef * st.value_loss - ce * st.entropy;
  if (!std::isfinite(st.loss))
    throw std::runtime_error("ppo loss is not finite");
  return st;
}

void AdamState::apply(std::vector<double>& params,
                      const std::vector<double>& grad, double lr) {
  if (m.size() != params.size() || grad.size() != params.size())
    throw std::invalid_argument("optimizer state size mismatch");
  ++step;
  double b1t = 1.0 - std::pow(beta1, static_cast<double>(step));
  double b2t = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    double mhat = m[i] / b1t;
    double vhat = v[i] / b2t;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

double clip_grad_norm(std::vector<double>& grad, double max_norm) {
  double norm2 = 0.0;
  for (double g : grad) norm2 += g * g;
  double norm = std::sqrt(norm2);
  if (norm > max_norm && norm > 0.0) {
    double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
  return norm;
}

UpdateStats ppo_update(PolicyNet& net, AdamState& opt, ExperienceBuffer& buf,
                       const TrainerConfig& cfg, SplitMix64& rng) {
  cfg.validate();
  require(static_cast<int>(buf.size()) == cfg.buffer_size,
          "buffer must hold exactly buffer_size transitions");
  // normalize advantages across the whole buffer
  double mean = 0.0;
  for (double x : buf.advantages) mean += x;
  mean /= static_cast<double>(buf.size());
  double var = 0.0;
  for (double x : buf.advantages) var += (x - mean) * (x - mean);
  var /= static_cast<double>(buf.size());
  double denom = std::max(std::sqrt(var), 1e-8);
  for (double& x : buf.advantages) x = (x - mean) / denom;

  std::vector<int> idx(buf.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> grad;
  UpdateStats st;
  double loss_sum = 0.0;
  int loss_count = 0;
  for (int epoch = 0; epoch < cfg.epochs && !st.kl_stopped; ++epoch) {
    for (std::size_t k = idx.size() - 1; k > 0; --k) {
      std::size_t j = static_cast<std::size_t>(rng.next() % (k + 1));
      std::swap(idx[k], idx[j]);
    }
    double epoch_vloss = 0.0;
    int epoch_mb = 0;
    for (std::size_t off = 0; off + cfg.minibatch_size <= idx.size();
         off += static_cast<std::size_t>(cfg.minibatch_size)) {
      std::span<const int> rows{idx.data() + off,
                                static_cast<std::size_t>(cfg.minibatch_size)};
      LossStats ls = ppo_loss(net, buf, rows, cfg, &grad);
      clip_grad_norm(grad, cfg.grad_clip);
      opt.apply(net.params(), grad, cfg.lr);
      loss_sum += ls.loss;
      ++loss_count;
      epoch_vloss += ls.value_loss;
      ++epoch_mb;
      ++st.minibatches;
      // divergence from the pre-update policy, measured after the step
      LossStats post = ppo_loss(net, buf, rows, cfg, nullptr);
      st.final_kl = post.approx_kl;
      if (post.approx_kl > cfg.target_kl) {
        st.kl_stopped = true;
        break;
      }
    }
    st.value_loss_per_epoch.push_back(
        epoch_mb > 0 ? epoch_vloss / epoch_mb : 0.0);
    if (!st.kl_stopped) ++st.epochs_completed;
  }
  st.mean_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
  return st;
}

bool early_stop(double reward_mean, double quality_mean, double prev_reward,
                double prev_quality, bool has_prev, const TrainerConfig& cfg) {
  if (!has_prev) return false;
  return reward_mean >= cfg.reward_threshold &&
         quality_mean >= cfg.quality_target &&
         std::abs(reward_mean - prev_reward) <= cfg.plateau_margin &&
         std::abs(quality_mean - prev_quality) <= cfg.plateau_margin;
}

TrainResult train(const SequentialEnv& env, const GameParams& game,
                  const TrainerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  game.validate();
  require(std::abs(env.score_min() - game.c_min) < 1e-12 &&
              std::abs(env.score_max() - game.c_max) < 1e-12,
          "env score range must match the game contribution range");
  int n = game.n;
  TrainResult out;
  out.stats = ContextStats(n);
  SplitMix64 init_rng = SplitMix64::child(seed, 0);
  out.policies.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    PolicyNet net(cfg.policy);
    net.init(init_rng);
    out.policies.push_back(std::move(net));
  }
  std::vector<AdamState> opts(static_cast<std::size_t>(n),
                              AdamState(PolicyNet::param_count(cfg.policy)));
  std::vector<ExperienceBuffer> bufs(static_cast<std::size_t>(n));
  std::vector<double> ep_rewards(static_cast<std::size_t>(n));
  std::vector<double> ep_scores(static_cast<std::size_t>(n));
  double win_r = 0.0, win_q = 0.0;
  int win_count = 0;
  double prev_r = 0.0, prev_q = 0.0;
  bool has_prev = false;
  double last_loss = 0.0, last_kl = 0.0;
  int update_index = 0;
  for (int ep = 0; ep < cfg.max_episodes; ++ep) {
    SplitMix64 rng = SplitMix64::child(seed, 1 + static_cast<std::uint64_t>(ep));
    auto traj = rollout_episode(env, out.policies, game, out.stats, cfg.belief,
                                rng);
    auto signals = compute_rewards(traj, game);
    for (int i = 0; i < n; ++i) {
      std::size_t ii = static_cast<std::size_t>(i);
      ep_rewards[ii] = signals[ii].reward;
      ep_scores[ii] = traj.steps[ii].score;
      bufs[ii].push(traj.steps[ii], signals[ii]);
    }
    out.stats.update(ep_rewards, ep_scores);
    out.episodes_run = ep + 1;
    double r_mean = std::accumulate(ep_rewards.begin(), ep_rewards.end(), 0.0) /
                    static_cast<double>(n);
    double q_mean = std::accumulate(ep_scores.begin(), ep_scores.end(), 0.0) /
                    static_cast<double>(n);
    if (static_cast<int>(bufs[0].size()) == cfg.buffer_size) {
      double loss_sum = 0.0, kl_sum = 0.0;
      for (int i = 0; i < n; ++i) {
        std::size_t ii = static_cast<std::size_t>(i);
        SplitMix64 urng = SplitMix64::child(
            seed, 0x100000u + static_cast<std::uint64_t>(update_index) *
                                  static_cast<std::uint64_t>(n) +
                      static_cast<std::uint64_t>(i));
        auto ust = ppo_update(out.policies[ii], opts[ii], bufs[ii], cfg, urng);
        loss_sum += ust.mean_loss;
        kl_sum += ust.final_kl;
        bufs[ii].clear();
      }
      last_loss = loss_sum / n;
      last_kl = kl_sum / n;
      ++update_index;
      out.updates_run = update_index;
    }
    win_r += r_mean;
    win_q += q_mean;
    ++win_count;
    if (win_count == cfg.curve_window) {
      double R = win_r / win_count;
      double Q = win_q / win_count;
      out.curves.episode.push_back(ep + 1);
      out.curves.mean_reward.push_back(R);
      out.curves.mean_quality.push_back(Q);
      out.curves.loss.push_back(last_loss);
      out.curves.kl.push_back(last_kl);
      if (early_stop(R, Q, prev_r, prev_q, has_prev, cfg)) {
        out.early_stopped = true;
        break;
      }
      prev_r = R;
      prev_q = Q;
      has_prev = true;
      win_r = 0.0;
      win_q = 0.0;
      win_count = 0;
    }
  }
  return out;
}

void save_checkpoint(const std::string& path,
                     std::span<const PolicyNet> policies,
                     const TrainerConfig& cfg) {
  require(!policies.empty(), "checkpoint needs at least one policy");
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["policy"] = {{"input_dim", cfg.policy.input_dim},
                 {"hidden_dim", cfg.policy.hidden_dim},
                 {"action_dim", cfg.policy.action_dim},
                 {"std_floor", cfg.policy.std_floor},
                 {"init_std", cfg.policy.init_std}};
  j["belief"] = {{"task", cfg.belief.task},
                 {"context", cfg.belief.context},
                 {"position", cfg.belief.position}};
  j["trainer"] = {{"lr", cfg.lr},
                  {"clip_ratio", cfg.clip_ratio},
                  {"value_coef", cfg.value_coef},
                  {"entropy_coef", cfg.entropy_coef},
                  {"entropy_bonus", cfg.entropy_bonus},
                  {"grad_clip", cfg.grad_clip},
                  {"discount", cfg.discount},
                  {"gae_lambda", cfg.gae_lambda},
                  {"target_kl", cfg.target_kl},
                  {"epochs", cfg.epochs},
                  {"minibatch_size", cfg.minibatch_size},
                  {"buffer_size", cfg.buffer_size},
                  {"max_episodes", cfg.max_episodes},
                  {"reward_threshold", cfg.reward_threshold},
                  {"quality_target", cfg.quality_target},
                  {"plateau_margin", cfg.plateau_margin},
                  {"curve_window", cfg.curve_window}};
  nlohmann::ordered_json agents = nlohmann::ordered_json::array();
  for (const auto& net : policies) agents.push_back(net.params());
  j["agents"] = std::move(agents);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint file: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint parse error: " + std::string(e.what()));
  }
  Checkpoint ck;
  ck.version = j.at("version").get<int>();
  if (ck.version != 1)
    throw std::runtime_error("unsupported checkpoint version");
  const auto& p = j.at("policy");
  ck.cfg.policy.input_dim = p.at("input_dim").get<int>();
  ck.cfg.policy.hidden_dim = p.at("hidden_dim").get<int>();
  ck.cfg.policy.action_dim = p.at("action_dim").get<int>();
  ck.cfg.policy.std_floor = p.at("std_floor").get<double>();
  ck.cfg.policy.init_std = p.at("init_std").get<double>();
  const auto& b = j.at("belief");
  ck.cfg.belief.task = b.at("task").get<int>();
  ck.cfg.belief.context = b.at("context").get<int>();
  ck.cfg.belief.position = b.at("position").get<int>();
  const auto& t = j.at("trainer");
  ck.cfg.lr = t.at("lr").get<double>();
  ck.cfg.clip_ratio = t.at("clip_ratio").get<double>();
  ck.cfg.value_coef = t.at("value_coef").get<double>();
  ck.cfg.entropy_coef = t.at("entropy_coef").get<double>();
  ck.cfg.entropy_bonus = t.at("entropy_bonus").get<bool>();
  ck.cfg.grad_clip = t.at("grad_clip").get<double>();
  ck.cfg.discount = t.at("discount").get<double>();
  ck.cfg.gae_lambda = t.at("gae_lambda").get<double>();
  ck.cfg.target_kl = t.at("target_kl").get<double>();
  ck.cfg.epochs = t.at("epochs").get<int>();
  ck.cfg.minibatch_size = t.at("minibatch_size").get<int>();
  ck.cfg.buffer_size = t.at("buffer_size").get<int>();
  ck.cfg.max_episodes = t.at("max_episodes").get<int>();
  ck.cfg.reward_threshold = t.at("reward_threshold").get<double>();
  ck.cfg.quality_target = t.at("quality_target").get<double>();
  ck.cfg.plateau_margin = t.at("plateau_margin").get<double>();
  ck.cfg.curve_window = t.at("curve_window").get<int>();
  ck.cfg.validate();
  for (const auto& arr : j.at("agents")) {
    PolicyNet net(ck.cfg.policy);
    auto params = arr.get<std::vector<double>>();
    if (params.size() != net.param_count())
      throw std::runtime_error("checkpoint parameter count mismatch");
    net.params() = std::move(params);
    ck.policies.push_back(std::move(net));
  }
  if (ck.policies.empty())
    throw std::runtime_error("checkpoint holds no policies");
  return ck;
}

}  // namespace spgg::rl
