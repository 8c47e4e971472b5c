#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace spgg::rl {

struct BeliefDims {
  int task = 16;      // task embedding block
  int context = 8;    // observed-history digest block
  int position = 4;   // order-position block
  int total() const { return task + context + position; }
};

// Deterministic pseudo-random unit vector identifying a task.
std::vector<double> task_embedding(std::uint64_t task_seed, int dim);

// Sinusoidal position code; distinct per position, fixed dimension.
std::vector<double> position_embedding(int position, int dim);

struct BeliefState {
  std::vector<double> v;  // [task block; context block; position block]
};

// Concatenates the three blocks. The context features are passed in as-is
// (truncated or zero-padded to dims.context); zero context gives an all-zero
// context block.
BeliefState build_belief(std::uint64_t task_seed,
                         std::span<const double> context, int position,
                         const BeliefDims& dims);

}  // namespace spgg::rl
