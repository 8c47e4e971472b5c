#include "spgg/rl/belief.hpp"

#include <cmath>
#include <stdexcept>

#include "spgg/rng.hpp"

namespace spgg::rl {

std::vector<double> task_embedding(std::uint64_t task_seed, int dim) {
  if (dim <= 0) throw std::invalid_argument("task embedding dim must be > 0");
  SplitMix64 rng(task_seed);
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm2 = 0.0;
  for (auto& x : v) {
    x = rng.gaussian();
    norm2 += x * x;
  }
  double norm = std::sqrt(norm2);
  if (norm < 1e-12) {
    v.assign(v.size(), 0.0);
    v[0] = 1.0;
    return v;
  }
  for (auto& x : v) x /= norm;
  return v;
}

std::vector<double> position_embedding(int position, int dim) {
  if (dim <= 0)
    throw std::invalid_argument("position embedding dim must be > 0");
  if (position < 0) throw std::invalid_argument("position must be >= 0");
  std::vector<double> v(static_cast<std::size_t>(dim));
  for (int k = 0; 2 * k < dim; ++k) {
    double freq = std::pow(10000.0, -2.0 * k / dim);
    v[static_cast<std::size_t>(2 * k)] = std::sin(position * freq);
    if (2 * k + 1 < dim)
      v[static_cast<std::size_t>(2 * k + 1)] = std::cos(position * freq);
  }
  return v;
}

BeliefState build_belief(std::uint64_t task_seed,
                         std::span<const double> context, int position,
                         const BeliefDims& dims) {
  if (dims.task <= 0 || dims.context <= 0 || dims.position <= 0)
    throw std::invalid_argument("belief block dims must be > 0");
  BeliefState b;
  b.v.reserve(static_cast<std::size_t>(dims.total()));
  auto task = task_embedding(task_seed, dims.task);
  b.v.insert(b.v.end(), task.begin(), task.end());
  for (int j = 0; j < dims.context; ++j)
    b.v.push_back(j < static_cast<int>(context.size()) ? context[j] : 0.0);
  auto pos = position_embedding(position, dims.position);
  b.v.insert(b.v.end(), pos.begin(), pos.end());
  return b;
}

}  // namespace spgg::rl
