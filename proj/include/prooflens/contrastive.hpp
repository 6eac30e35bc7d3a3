#pragma once

#include <cstdint>

#include "prooflens/adam.hpp"
#include "prooflens/encoder.hpp"

namespace prooflens {

// Projection head H -> H -> Z: ReLU between the layers, no output activation,
// no batch norm. Discarded when the encoder moves on to fine-tuning.
struct ProjectionConfig {
  int input_dim = 256;   // H
  int output_dim = 256;  // Z
};

// Registers projection.{w1,b1,w2,b2}.
void register_projection_params(ParamStore& store, const ProjectionConfig& config, Rng& rng);

// z = w2 . relu(w1 . h + b1) + b2, shape {Z}.
ValueId project(Tape& tape, ValueId embedding, const ProjectionConfig& config);

// L = -log( exp(z_t.z_pos) / sum_i exp(z_t.z_pi) ), the sum running over the
// positive and every negative. Max-subtracted, so always finite and >= 0.
// Errors: NonFiniteInput, EmptyCandidates (no negatives).
ValueId info_nce(Tape& tape, ValueId z_theorem, ValueId z_positive,
                 const std::vector<ValueId>& z_negatives);

// One pre-training example: theorem, one positive premise, 1..10 negatives.
struct PremiseInstance {
  TermAst theorem;
  TermAst positive;
  std::vector<TermAst> negatives;
};

struct PretrainConfig {
  int epochs = 20;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  int layers = 5;    // K
  int hidden = 256;  // H
  int proj_dim = 256;  // Z
  EncoderKind encoder = EncoderKind::gin;
};

struct EpochMetrics {
  int epoch = 0;
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

struct PretrainResult {
  ParamStore params;
  NodeVocab vocab;
  EncoderConfig encoder;
  ProjectionConfig projection;
  std::vector<EpochMetrics> metrics;
};

// argmax_i z_t . z_pi over the candidates, ties broken by lowest index.
// Runs in eval mode against a frozen store. Errors: EmptyCandidates.
int select_premise(const TermAst& theorem, const std::vector<TermAst>& premises,
                   ParamStore& params, const NodeVocab& vocab, const EncoderConfig& encoder,
                   const ProjectionConfig& projection);

// Fraction of instances whose positive wins the argmax. Errors: EmptyDataset.
double eval_premise(const std::vector<PremiseInstance>& dataset, ParamStore& params,
                    const NodeVocab& vocab, const EncoderConfig& encoder,
                    const ProjectionConfig& projection);

// Per-instance Adam on the InfoNCE objective, encoder and projection jointly,
// with a seeded shuffle every epoch. Deterministic for a fixed seed.
// Errors: EmptyDataset.
PretrainResult pretrain(const std::vector<PremiseInstance>& dataset, const PretrainConfig& config);

}  // namespace prooflens
