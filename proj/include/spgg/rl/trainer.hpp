#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spgg/game.hpp"
#include "spgg/rl/belief.hpp"
#include "spgg/rl/env.hpp"
#include "spgg/rl/policy.hpp"
#include "spgg/rng.hpp"

namespace spgg::rl {

struct TrainerConfig {
  BeliefDims belief;
  PolicyConfig policy;

  double lr = 5e-4;
  double clip_ratio = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.02;
  bool entropy_bonus = true;  // false recovers the bare clipped objective
  double grad_clip = 0.5;
  double discount = 0.99;    // recorded; one-step episodes make it inert
  double gae_lambda = 0.95;  // recorded; one-step targets make it inert
  double target_kl = 0.015;  // 0 stops after the first minibatch
  int epochs = 4;
  int minibatch_size = 16;
  int buffer_size = 512;  // transitions per agent between updates
  int max_episodes = 200;

  // Early-stop thresholds. Running means are taken over windows of
  // curve_window episodes; training halts once both means clear their
  // thresholds and neither moved more than plateau_margin since the
  // previous window.
  double reward_threshold = 0.8;
  double quality_target = 0.85;
  double plateau_margin = 0.01;
  int curve_window = 10;  // episodes averaged per learning-curve point

  void validate() const;
};

// Reward parameters used by the bundled training config.
GameParams default_training_game();

// Per-agent running statistics carried across episodes; feeds the context
// block of the belief.
struct ContextStats {
  std::vector<double> reward_mean;
  std::vector<double> score_mean;
  std::int64_t episodes = 0;

  explicit ContextStats(int n_agents = 0)
      : reward_mean(n_agents, 0.0), score_mean(n_agents, 0.0) {}
  void update(std::span<const double> rewards, std::span<const double> scores);
};

// Digest of what one agent can see before acting, sized to dims.context.
std::vector<double> context_features(int agent, int n_agents,
                                     std::span<const double> visible,
                                     const ContextStats& stats,
                                     const BeliefDims& dims);

struct Transition {
  std::vector<double> belief;
  std::array<double, ConfigVector::kDim> action_raw{};
  ConfigVector config;
  double score = 0.0;
  double cost = 0.0;
  double logp = 0.0;
  double value = 0.0;
};

struct Trajectory {
  std::vector<Transition> steps;  // one per agent, in seating order
};

// Plays one episode: each agent builds its belief from the visible history
// (gated by the env's observation mode), samples a config, and the env
// scores it. Throws std::runtime_error if the env breaks its own
// score-range contract.
Trajectory rollout_episode(const SequentialEnv& env,
                           std::span<const PolicyNet> policies,
                           const GameParams& game, const ContextStats& stats,
                           const BeliefDims& dims, SplitMix64& rng);

// Scores the finished episode with the shared reward decomposition, using
// each step's env cost as the effort term. One-step targets: the return is
// the reward itself and the advantage is reward minus the stored value.
struct AgentSignal {
  double reward = 0.0;
  double advantage = 0.0;
};
std::vector<AgentSignal> compute_rewards(const Trajectory& traj,
                                         const GameParams& game);

struct ExperienceBuffer {
  std::vector<std::vector<double>> beliefs;
  std::vector<std::array<double, ConfigVector::kDim>> actions_raw;
  std::vector<double> logp_old;
  std::vector<double> returns;
  std::vector<double> advantages;
  void push(const Transition& t, const AgentSignal& s);
  void clear();
  std::size_t size() const { return returns.size(); }
};

struct LossStats {
  double loss = 0.0;        // full objective (minimized)
  double surrogate = 0.0;   // clipped policy term (maximized)
  double value_loss = 0.0;  // mean squared value error
  double entropy = 0.0;
  double approx_kl = 0.0;   // mean(logp_old - logp_new)
  double clip_fraction = 0.0;
};

// Evaluates the clipped-surrogate objective on the given buffer rows and, if
// grad is non-null, accumulates dLoss/dparams into it (grad is zeroed first).
LossStats ppo_loss(const PolicyNet& net, const ExperienceBuffer& buf,
                   std::span<const int> rows, const TrainerConfig& cfg,
                   std::vector<double>* grad);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
  // One update with the given (already clipped) gradient.
  void apply(std::vector<double>& params, const std::vector<double>& grad,
             double lr);
};

// Scales grad in place so its global L2 norm is at most max_norm; returns
// the pre-clip norm.
double clip_grad_norm(std::vector<double>& grad, double max_norm);

struct UpdateStats {
  double mean_loss = 0.0;
  double final_kl = 0.0;
  int minibatches = 0;
  int epochs_completed = 0;
  bool kl_stopped = false;
  std::vector<double> value_loss_per_epoch;
};

// Runs the epoch/minibatch loop over one agent's full buffer. Advantages are
// normalized in place across the buffer first. After each minibatch step the
// divergence from the pre-update policy is measured on that minibatch; once
// it exceeds cfg.target_kl the update stops early.
UpdateStats ppo_update(PolicyNet& net, AdamState& opt, ExperienceBuffer& buf,
                       const TrainerConfig& cfg, SplitMix64& rng);

// True when both window means clear their thresholds and neither moved more
// than plateau_margin since the previous window. Never fires without a
// previous window (pass has_prev = false for the first one).
bool early_stop(double reward_mean, double quality_mean, double prev_reward,
                double prev_quality, bool has_prev, const TrainerConfig& cfg);

struct LearningCurves {
  std::vector<int> episode;
  std::vector<double> mean_reward;
  std::vector<double> mean_quality;
  std::vector<double> loss;
  std::vector<double> kl;
};

struct TrainResult {
  std::vector<PolicyNet> policies;
  LearningCurves curves;
  int episodes_run = 0;
  int updates_run = 0;
  bool early_stopped = false;
  ContextStats stats{0};
};

// Full training loop: per-agent policies, buffers filled one transition per
// episode, a joint update every cfg.buffer_size episodes, curve points every
// cfg.curve_window episodes, and the plateau early-stop rule.
TrainResult train(const SequentialEnv& env, const GameParams& game,
                  const TrainerConfig& cfg, std::uint64_t seed);

// Versioned JSON checkpoints of every agent's parameter vector plus the
// trainer settings needed to resume.
void save_checkpoint(const std::string& path,
                     std::span<const PolicyNet> policies,
                     const TrainerConfig& cfg);
struct Checkpoint {
  std::vector<PolicyNet> policies;
  TrainerConfig cfg;
  int version = 0;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace spgg::rl
