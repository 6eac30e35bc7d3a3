#include "prooflens/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "prooflens/error.hpp"

namespace prooflens {

namespace {
double eval_loss(const ForwardFn& forward, ParamStore& params, Mode mode) {
  Tape tape(&params, mode);
  ValueId loss = forward(tape);
  return tape.value(loss).at(0);
}

double max_grad_rel_error_mode(const Gradients& analytic, const ForwardFn& forward,
                               ParamStore& params, double eps, Mode mode) {
  // Snapshot everything: train-mode forwards fold batch stats into the
  // running buffers, and probing must not leave any of that behind.
  const ParamStore original = params;

  double worst = 0.0;
  for (const std::string& name : params.trainable_names()) {
    const Tensor& grad = analytic.at(name);
    Tensor& value = params.at(name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + eps;
      const double plus = eval_loss(forward, params, mode);
      value.data()[i] = saved - eps;
      const double minus = eval_loss(forward, params, mode);
      value.data()[i] = saved;

      const double fd = (plus - minus) / (2.0 * eps);
      const double ad = grad.data()[i];
      const double rel = std::abs(ad - fd) / std::max(1e-8, std::abs(ad) + std::abs(fd));
      worst = std::max(worst, rel);
    }
  }

  params = original;
  return worst;
}
}  // namespace

double max_grad_rel_error(const Gradients& analytic, const ForwardFn& forward, ParamStore& params,
                          double eps) {
  return max_grad_rel_error_mode(analytic, forward, params, eps, Mode::train);
}

double grad_check(const ForwardFn& forward, ParamStore& params, double eps, Mode mode) {
  const ParamStore original = params;
  Tape tape(&params, mode);
  ValueId loss = forward(tape);
  Gradients analytic = tape.backward(loss);
  params = original;  // drop running-stat updates from the analytic pass
  double worst = max_grad_rel_error_mode(analytic, forward, params, eps, mode);
  params = original;
  return worst;
}

}  // namespace prooflens
