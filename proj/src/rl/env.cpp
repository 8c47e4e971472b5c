#include "spgg/rl/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spgg/rng.hpp"

namespace spgg::rl {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void SyntheticEnv::Params::validate() const {
  if (!(score_hi > score_lo))
    throw std::invalid_argument("env score range must have score_hi > score_lo");
  if (cost_scale < 0.0)
    throw std::invalid_argument("env cost_scale must be >= 0");
  if (!std::isfinite(synergy_weight) || !std::isfinite(deep_weight) ||
      !std::isfinite(constant_level))
    throw std::invalid_argument("env surface weights must be finite");
}

SyntheticEnv::SyntheticEnv(const Params& p) : p_(p) {
  p_.validate();
  SplitMix64 rng = SplitMix64::child(p_.task_seed, 0x5109);
  blend_.resize(ConfigVector::kDim);
  for (auto& w : blend_) w = rng.uniform(-1.5, 1.5);
}

double SyntheticEnv::score(int agent, const ConfigVector& config,
                           std::span<const double> visible) const {
  (void)agent;
  double lo = p_.score_lo;
  double range = p_.score_hi - p_.score_lo;
  double base = lo;
  switch (p_.surface) {
    case Surface::kSigmoid: {
      double s = 0.0;
      for (int d = 0; d < ConfigVector::kDim; ++d)
        s += blend_[static_cast<std::size_t>(d)] *
             config.normalized[static_cast<std::size_t>(d)];
      base = lo + range * sigmoid(s);
      break;
    }
    case Surface::kTokenLinear:
      base = lo + range * config.budget01();
      break;
    case Surface::kMeanLinear: {
      double m = 0.0;
      for (double x : config.normalized) m += x;
      m /= ConfigVector::kDim;
      base = lo + range * (m + 1.0) / 2.0;
      break;
    }
    case Surface::kConstant:
      base = p_.constant_level;
      break;
  }
  double pull = 0.0;
  if (!visible.empty()) {
    pull += p_.synergy_weight * visible.back();
    if (visible.size() > 1) {
      double older = 0.0;
      for (std::size_t k = 0; k + 1 < visible.size(); ++k) older += visible[k];
      pull += p_.deep_weight * older / static_cast<double>(visible.size() - 1);
    }
  }
  return std::clamp(base + pull, p_.score_lo, p_.score_hi);
}

double SyntheticEnv::cost(const ConfigVector& config) const {
  return p_.cost_scale * config.budget01();
}

}  // namespace spgg::rl
