#pragma once

#include <cstdint>

#include "prooflens/rng.hpp"
#include "prooflens/term_ast.hpp"

namespace prooflens {

// Nudges every feature entry by a small uniform offset. Gradient probes need
// this: one-hot rows that collide make batch-norm columns zero-variance,
// parking the ReLU inputs exactly on their kink where central differences
// are meaningless.
void jitter_graph_features(TermGraph& graph, Rng& rng, double amplitude = 0.01);

// End-to-end gradient fidelity checks on a tiny model (D=7, H=8, K=2, S=8):
// (a) GIN encoder + projection head + InfoNCE, (b) encoder + decoder +
// teacher-forced loss. Values are max relative errors against central finite
// differences; both should sit well below 1e-4.
struct GradCheckReport {
  double contrastive_error = 0.0;
  double decoder_error = 0.0;
};

GradCheckReport run_model_grad_checks(std::uint64_t seed = 7, double eps = 1e-6);

}  // namespace prooflens
