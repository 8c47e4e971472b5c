#include "spgg/rl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spgg::rl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

const std::array<const char*, ConfigVector::kDim>& ConfigVector::names() {
  static const std::array<const char*, kDim> kNames = {
      "temperature",        "top_p",          "top_k",
      "max_tokens",         "repetition_penalty", "presence_penalty"};
  return kNames;
}

double ConfigVector::lo(int d) {
  static constexpr std::array<double, kDim> kLo = {0.1, 0.1, 1.0,
                                                   16.0, 1.0, -2.0};
  return kLo[static_cast<std::size_t>(d)];
}

double ConfigVector::hi(int d) {
  static constexpr std::array<double, kDim> kHi = {2.0, 1.0, 200.0,
                                                   1024.0, 2.0, 2.0};
  return kHi[static_cast<std::size_t>(d)];
}

double ConfigVector::physical(int d) const {
  if (d < 0 || d >= kDim) throw std::out_of_range("config dim out of range");
  double t = (normalized[static_cast<std::size_t>(d)] + 1.0) / 2.0;
  return lo(d) + (hi(d) - lo(d)) * t;
}

void PolicyConfig::validate() const {
  require(input_dim > 0, "policy input_dim must be > 0");
  require(hidden_dim > 0, "policy hidden_dim must be > 0");
  require(action_dim > 0, "policy action_dim must be > 0");
  require(std_floor > 0.0, "policy std_floor must be > 0");
  require(init_std > std_floor, "policy init_std must exceed std_floor");
}

std::size_t PolicyNet::param_count(const PolicyConfig& cfg) {
  std::size_t in = static_cast<std::size_t>(cfg.input_dim);
  std::size_t h = static_cast<std::size_t>(cfg.hidden_dim);
  std::size_t a = static_cast<std::size_t>(cfg.action_dim);
  return h * in + h + 2 * (a * h + a) + h + 1;
}

PolicyNet::PolicyNet(const PolicyConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  params_.assign(param_count(cfg_), 0.0);
}

std::size_t PolicyNet::o_b1() const {
  return static_cast<std::size_t>(cfg_.hidden_dim) *
         static_cast<std::size_t>(cfg_.input_dim);
}
std::size_t PolicyNet::o_wmu() const {
  return o_b1() + static_cast<std::size_t>(cfg_.hidden_dim);
}
std::size_t PolicyNet::o_bmu() const {
  return o_wmu() + static_cast<std::size_t>(cfg_.action_dim) *
                       static_cast<std::size_t>(cfg_.hidden_dim);
}
std::size_t PolicyNet::o_wsig() const {
  return o_bmu() + static_cast<std::size_t>(cfg_.action_dim);
}
std::size_t PolicyNet::o_bsig() const {
  return o_wsig() + static_cast<std::size_t>(cfg_.action_dim) *
                        static_cast<std::size_t>(cfg_.hidden_dim);
}
std::size_t PolicyNet::o_wv() const {
  return o_bsig() + static_cast<std::size_t>(cfg_.action_dim);
}
std::size_t PolicyNet::o_bv() const {
  return o_wv() + static_cast<std::size_t>(cfg_.hidden_dim);
}

void PolicyNet::init(SplitMix64& rng) {
  if (params_.empty()) params_.assign(param_count(cfg_), 0.0);
  double in_scale = 1.0 / std::sqrt(static_cast<double>(cfg_.input_dim));
  double head_scale = 0.1 / std::sqrt(static_cast<double>(cfg_.hidden_dim));
  std::size_t i = 0;
  for (; i < o_b1(); ++i) params_[i] = rng.uniform(-in_scale, in_scale);
  for (; i < o_wmu(); ++i) params_[i] = 0.0;
  for (; i < o_bmu(); ++i) params_[i] = rng.uniform(-head_scale, head_scale);
  for (; i < o_wsig(); ++i) params_[i] = 0.0;
  for (; i < o_bsig(); ++i) params_[i] = rng.uniform(-head_scale, head_scale);
  // softplus(bias) + floor == init_std at zero hidden input
  double raw = std::log(std::expm1(cfg_.init_std - cfg_.std_floor));
  for (; i < o_wv(); ++i) params_[i] = raw;
  for (; i < o_bv(); ++i) params_[i] = rng.uniform(-head_scale, head_scale);
  params_[o_bv()] = 0.0;
}

PolicyNet::Forward PolicyNet::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != cfg_.input_dim)
    throw std::invalid_argument("policy input size mismatch");
  Forward f;
  int h = cfg_.hidden_dim;
  int a = cfg_.action_dim;
  int in = cfg_.input_dim;
  f.hidden.resize(static_cast<std::size_t>(h));
  const double* w1 = params_.data() + o_w1();
  const double* b1 = params_.data() + o_b1();
  for (int j = 0; j < h; ++j) {
    double s = b1[j];
    const double* row = w1 + static_cast<std::size_t>(j) * in;
    for (int k = 0; k < in; ++k) s += row[k] * input[static_cast<std::size_t>(k)];
    f.hidden[static_cast<std::size_t>(j)] = std::tanh(s);
  }
  f.mean.resize(static_cast<std::size_t>(a));
  f.std_raw.resize(static_cast<std::size_t>(a));
  f.stddev.resize(static_cast<std::size_t>(a));
  const double* wmu = params_.data() + o_wmu();
  const double* bmu = params_.data() + o_bmu();
  const double* wsig = params_.data() + o_wsig();
  const double* bsig = params_.data() + o_bsig();
  for (int d = 0; d < a; ++d) {
    double sm = bmu[d];
    double ss = bsig[d];
    const double* rm = wmu + static_cast<std::size_t>(d) * h;
    const double* rs = wsig + static_cast<std::size_t>(d) * h;
    for (int j = 0; j < h; ++j) {
      sm += rm[j] * f.hidden[static_cast<std::size_t>(j)];
      ss += rs[j] * f.hidden[static_cast<std::size_t>(j)];
    }
    f.mean[static_cast<std::size_t>(d)] = sm;
    f.std_raw[static_cast<std::size_t>(d)] = ss;
    f.stddev[static_cast<std::size_t>(d)] = softplus(ss) + cfg_.std_floor;
  }
  const double* wv = params_.data() + o_wv();
  double v = params_[o_bv()];
  for (int j = 0; j < h; ++j) v += wv[j] * f.hidden[static_cast<std::size_t>(j)];
  f.value = v;
  return f;
}

double PolicyNet::log_prob(const Forward& fwd,
                           std::span<const double> action) const {
  if (static_cast<int>(action.size()) != cfg_.action_dim)
    throw std::invalid_argument("action size mismatch");
  double lp = 0.0;
  for (int d = 0; d < cfg_.action_dim; ++d) {
    double sd = fwd.stddev[static_cast<std::size_t>(d)];
    double z = (action[static_cast<std::size_t>(d)] -
                fwd.mean[static_cast<std::size_t>(d)]) /
               sd;
    lp += -0.5 * z * z - std::log(sd) - 0.5 * kLog2Pi;
  }
  return lp;
}

double PolicyNet::entropy(const Forward& fwd) const {
  double e = 0.0;
  for (int d = 0; d < cfg_.action_dim; ++d)
    e += 0.5 * (kLog2Pi + 1.0) + std::log(fwd.stddev[static_cast<std::size_t>(d)]);
  return e;
}

void PolicyNet::backward(const Forward& fwd, std::span<const double> input,
                         std::span<const double> d_mean,
                         std::span<const double> d_stddev, double d_value,
                         std::vector<double>& grad) const {
  if (grad.size() != params_.size())
    throw std::invalid_argument("gradient size mismatch");
  int h = cfg_.hidden_dim;
  int a = cfg_.action_dim;
  int in = cfg_.input_dim;
  std::vector<double> dh(static_cast<std::size_t>(h), 0.0);
  const double* wmu = params_.data() + o_wmu();
  const double* wsig = params_.data() + o_wsig();
  const double* wv = params_.data() + o_wv();
  double* g_wmu = grad.data() + o_wmu();
  double* g_bmu = grad.data() + o_bmu();
  double* g_wsig = grad.data() + o_wsig();
  double* g_bsig = grad.data() + o_bsig();
  for (int d = 0; d < a; ++d) {
    double dm = d_mean[static_cast<std::size_t>(d)];
    // softplus' = sigmoid; the additive floor has zero derivative
    double ds = d_stddev[static_cast<std::size_t>(d)] *
                sigmoid(fwd.std_raw[static_cast<std::size_t>(d)]);
    const double* rm = wmu + static_cast<std::size_t>(d) * h;
    const double* rs = wsig + static_cast<std::size_t>(d) * h;
    double* gm = g_wmu + static_cast<std::size_t>(d) * h;
    double* gs = g_wsig + static_cast<std::size_t>(d) * h;
    for (int j = 0; j < h; ++j) {
      double hj = fwd.hidden[static_cast<std::size_t>(j)];
      gm[j] += dm * hj;
      gs[j] += ds * hj;
      dh[static_cast<std::size_t>(j)] += rm[j] * dm + rs[j] * ds;
    }
    g_bmu[d] += dm;
    g_bsig[d] += ds;
  }
  double* g_wv = grad.data() + o_wv();
  for (int j = 0; j < h; ++j) {
    g_wv[j] += d_value * fwd.hidden[static_cast<std::size_t>(j)];
    dh[static_cast<std::size_t>(j)] += wv[j] * d_value;
  }
  grad[o_bv()] += d_value;
  double* g_w1 = grad.data() + o_w1();
  double* g_b1 = grad.data() + o_b1();
  for (int j = 0; j < h; ++j) {
    double hj = fwd.hidden[static_cast<std::size_t>(j)];
    double dpre = dh[static_cast<std::size_t>(j)] * (1.0 - hj * hj);
    double* row = g_w1 + static_cast<std::size_t>(j) * in;
    for (int k = 0; k < in; ++k) row[k] += dpre * input[static_cast<std::size_t>(k)];
    g_b1[j] += dpre;
  }
}

namespace {

void check_finite(const PolicyNet::Forward& fwd) {
  bool ok = std::isfinite(fwd.value);
  for (double x : fwd.mean) ok = ok && std::isfinite(x);
  for (double x : fwd.stddev) ok = ok && std::isfinite(x);
  if (!ok) throw std::runtime_error("policy network produced non-finite output");
}

}  // namespace

SampledAction sample_action(const PolicyNet& net,
                            std::span<const double> belief, SplitMix64& rng) {
  auto fwd = net.forward(belief);
  check_finite(fwd);
  SampledAction out;
  for (int d = 0; d < ConfigVector::kDim; ++d) {
    double raw = fwd.mean[static_cast<std::size_t>(d)] +
                 fwd.stddev[static_cast<std::size_t>(d)] * rng.gaussian();
    out.raw[static_cast<std::size_t>(d)] = raw;
    out.config.normalized[static_cast<std::size_t>(d)] =
        std::clamp(raw, -1.0, 1.0);
  }
  out.logp = net.log_prob(fwd, out.raw);
  out.value = fwd.value;
  return out;
}

SampledAction mean_action(const PolicyNet& net,
                          std::span<const double> belief) {
  auto fwd = net.forward(belief);
  check_finite(fwd);
  SampledAction out;
  for (int d = 0; d < ConfigVector::kDim; ++d) {
    double raw = fwd.mean[static_cast<std::size_t>(d)];
    out.raw[static_cast<std::size_t>(d)] = raw;
    out.config.normalized[static_cast<std::size_t>(d)] =
        std::clamp(raw, -1.0, 1.0);
  }
  out.logp = net.log_prob(fwd, out.raw);
  out.value = fwd.value;
  return out;
}

}  // namespace spgg::rl
