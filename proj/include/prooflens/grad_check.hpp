#pragma once

#include <functional>

#include "prooflens/tape.hpp"

namespace prooflens {

// A model forward: records the computation on the given tape and returns the
// scalar loss node. Must be deterministic in the store contents.
using ForwardFn = std::function<ValueId(Tape&)>;

// Max over trainable entries of |analytic - central difference| /
// max(1e-8, |analytic| + |central difference|), probing with +-eps. The
// store is returned to its original state afterwards.
double max_grad_rel_error(const Gradients& analytic, const ForwardFn& forward, ParamStore& params,
                          double eps = 1e-6);

// Runs forward once for autodiff gradients, then compares against central
// finite differences entry by entry.
double grad_check(const ForwardFn& forward, ParamStore& params, double eps = 1e-6,
                  Mode mode = Mode::train);

}  // namespace prooflens
