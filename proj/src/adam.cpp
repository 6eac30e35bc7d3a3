#include "prooflens/adam.hpp"

#include <cmath>

#include "prooflens/error.hpp"

namespace prooflens {

void adam_step(ParamStore& params, const Gradients& grads, AdamState& state) {
  std::vector<std::string> expected = params.trainable_names();
  if (grads.size() != expected.size())
    throw Error(ErrorCode::KeyMismatch, "gradient map size " + std::to_string(grads.size()) +
                                            " vs " + std::to_string(expected.size()) + " parameters");
  for (const std::string& name : expected)
    if (grads.find(name) == grads.end())
      throw Error(ErrorCode::KeyMismatch, "missing gradient for " + name);

  state.step += 1;
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (const std::string& name : expected) {
    Tensor& value = params.at(name);
    const Tensor& grad = grads.at(name);
    if (!grad.same_shape(value))
      throw Error(ErrorCode::KeyMismatch, "gradient shape mismatch for " + name);

    auto m_it = state.first_moment.find(name);
    if (m_it == state.first_moment.end()) {
      m_it = state.first_moment.emplace(name, Tensor::zeros_like(value)).first;
      state.second_moment.emplace(name, Tensor::zeros_like(value));
    }
    Tensor& m = m_it->second;
    Tensor& v = state.second_moment.at(name);

    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad.data()[i];
      m.data()[i] = state.beta1 * m.data()[i] + (1.0 - state.beta1) * g;
      v.data()[i] = state.beta2 * v.data()[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m.data()[i] / bias1;
      const double v_hat = v.data()[i] / bias2;
      value.data()[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace prooflens
