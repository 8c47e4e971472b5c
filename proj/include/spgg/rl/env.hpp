#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spgg/rl/policy.hpp"

namespace spgg::rl {

enum class ObsMode {
  kPartial,  // agent sees only the immediate predecessor's score
  kFull,     // agent sees every earlier score
};

// A sequential task: each agent in turn submits a sampling config, the env
// scores it given the scores visible so far, and charges a resource cost.
// Scores must land in [score_min, score_max]; the rollout enforces this.
// The observation mode is a property of the env: it decides how much of the
// score history each agent (and the env surface itself) gets to see.
class SequentialEnv {
 public:
  virtual ~SequentialEnv() = default;
  virtual std::uint64_t task_id() const = 0;
  virtual ObsMode obs_mode() const = 0;
  virtual double score_min() const = 0;
  virtual double score_max() const = 0;
  // visible holds earlier agents' scores in order (possibly truncated by the
  // observation mode); its last entry, when present, is the predecessor.
  virtual double score(int agent, const ConfigVector& config,
                       std::span<const double> visible) const = 0;
  virtual double cost(const ConfigVector& config) const = 0;
};

// Closed-form stand-in for a real evaluation pipeline. Several response
// surfaces are available so tests can pick the shape they need.
class SyntheticEnv : public SequentialEnv {
 public:
  enum class Surface {
    // Squashed linear blend of the whole config plus carry-over from the
    // visible history. General-purpose default.
    kSigmoid,
    // Score depends linearly on the length budget alone, so in score space
    // the stage game has an exactly linear cost. Used when comparing trained
    // behavior against a closed-form equilibrium.
    kTokenLinear,
    // Linear in the mean of all knobs; maximized at the cube corner.
    kMeanLinear,
    // Ignores the config entirely.
    kConstant,
  };

  struct Params {
    std::uint64_t task_seed = 1;
    Surface surface = Surface::kSigmoid;
    ObsMode obs = ObsMode::kPartial;
    double score_lo = 0.0;
    double score_hi = 1.0;
    double synergy_weight = 0.3;  // pull from the predecessor's score
    double deep_weight = 0.0;     // pull from older visible scores (mean)
    double cost_scale = 0.2;      // spending per unit of length budget
    double constant_level = 0.5;  // kConstant only
    void validate() const;
  };

  explicit SyntheticEnv(const Params& p);

  std::uint64_t task_id() const override { return p_.task_seed; }
  ObsMode obs_mode() const override { return p_.obs; }
  double score_min() const override { return p_.score_lo; }
  double score_max() const override { return p_.score_hi; }
  double score(int agent, const ConfigVector& config,
               std::span<const double> visible) const override;
  double cost(const ConfigVector& config) const override;

  const Params& params() const { return p_; }

 private:
  Params p_;
  std::vector<double> blend_;  // per-knob weights for the sigmoid surface
};

}  // namespace spgg::rl
