#pragma once

#include <cstdint>
#include <map>

#include "prooflens/param_store.hpp"

namespace prooflens {

// Bias-corrected Adam over the trainable entries of a ParamStore.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;

  explicit AdamState(double lr = 1e-3) : learning_rate(lr) {}
};

// In-place update; grads must be keyed exactly like the store's trainable
// entries (KeyMismatch otherwise). Increments state.step.
void adam_step(ParamStore& params, const Gradients& grads, AdamState& state);

}  // namespace prooflens
