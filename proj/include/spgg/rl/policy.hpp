#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spgg/rng.hpp"

namespace spgg::rl {

// Six sampling knobs an agent tunes per turn. Internally the policy acts in a
// normalized [-1, 1]^6 cube; physical() maps a coordinate to its native box.
struct ConfigVector {
  static constexpr int kDim = 6;
  static constexpr int kMaxTokens = 3;  // index of the length-budget knob

  std::array<double, kDim> normalized{};  // each in [-1, 1]

  static const std::array<const char*, kDim>& names();
  static double lo(int d);
  static double hi(int d);

  double physical(int d) const;
  // Length budget rescaled to [0, 1]; this is what spending is charged on.
  double budget01() const {
    return (normalized[kMaxTokens] + 1.0) / 2.0;
  }
};

struct PolicyConfig {
  int input_dim = 28;
  int hidden_dim = 64;
  int action_dim = ConfigVector::kDim;
  double std_floor = 1e-3;
  double init_std = 0.5;  // target stddev at zero hidden activation
  void validate() const;
};

// One tanh hidden layer feeding a diagonal-Gaussian actor (state-dependent
// stddev via softplus) and a scalar critic. Parameters live in one flat
// vector so the optimizer and checkpoints can treat the net as a single
// array.
class PolicyNet {
 public:
  PolicyNet() = default;
  explicit PolicyNet(const PolicyConfig& cfg);

  // Randomizes weights (small uniform); biases zero except the stddev head
  // bias, which is set so softplus(bias) == cfg.init_std.
  void init(SplitMix64& rng);

  struct Forward {
    std::vector<double> hidden;   // tanh activations
    std::vector<double> mean;     // action means
    std::vector<double> std_raw;  // pre-softplus stddev head
    std::vector<double> stddev;   // softplus(std_raw) + std_floor
    double value = 0.0;
  };

  Forward forward(std::span<const double> input) const;

  // Gaussian log-density of a raw (pre-clamp) action under fwd's heads.
  double log_prob(const Forward& fwd, std::span<const double> action) const;
  // Differential entropy of the diagonal Gaussian.
  double entropy(const Forward& fwd) const;

  // Accumulates dLoss/dparams into grad, given head gradients for one input.
  // d_mean and d_stddev are w.r.t. the post-softplus stddev; the softplus and
  // tanh Jacobians are applied internally. grad must have param_count()
  // entries and is added to, not overwritten.
  void backward(const Forward& fwd, std::span<const double> input,
                std::span<const double> d_mean,
                std::span<const double> d_stddev, double d_value,
                std::vector<double>& grad) const;

  const PolicyConfig& config() const { return cfg_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  static std::size_t param_count(const PolicyConfig& cfg);

 private:
  // Flat layout: [W1 (h x in), b1 (h), Wmu (a x h), bmu (a),
  //               Wsig (a x h), bsig (a), Wv (h), bv (1)].
  std::size_t o_w1() const { return 0; }
  std::size_t o_b1() const;
  std::size_t o_wmu() const;
  std::size_t o_bmu() const;
  std::size_t o_wsig() const;
  std::size_t o_bsig() const;
  std::size_t o_wv() const;
  std::size_t o_bv() const;

  PolicyConfig cfg_;
  std::vector<double> params_;
};

struct SampledAction {
  std::array<double, ConfigVector::kDim> raw{};  // pre-clamp Gaussian draw
  ConfigVector config;                           // clamped to the cube
  double logp = 0.0;                             // density at raw
  double value = 0.0;
};

SampledAction sample_action(const PolicyNet& net,
                            std::span<const double> belief, SplitMix64& rng);

// Deterministic variant: takes the mean action instead of sampling.
SampledAction mean_action(const PolicyNet& net, std::span<const double> belief);

}  // namespace spgg::rl
