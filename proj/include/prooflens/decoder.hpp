#pragma once

#include <cstdint>
#include <functional>

#include "prooflens/contrastive.hpp"
#include "prooflens/encoder.hpp"
#include "prooflens/grammar.hpp"

namespace prooflens {

// Recurrent expansion controller: s_{t+1} = tanh(W_s s_t + W_a e_t + b) with
// s_0 = tanh(W_init h_goal). e_t is the chosen production's embedding row;
// premise-argument actions share one dedicated action embedding. Production
// choices score as U s_t masked to the frontier's productions; premise
// choices as (W_p s_t) . h_premise.
struct DecoderConfig {
  int action_dim = 64;       // A
  int state_dim = 256;       // S
  int hidden = 256;          // H, encoder output width
  int num_productions = 0;   // P, from the grammar
};

// Registers decoder.{embed,premise_embed,w_init,w_state,w_action,b,u,w_premise}.
void register_decoder_params(ParamStore& store, const DecoderConfig& config, Rng& rng);

ValueId decoder_init_state(Tape& tape, ValueId goal_embedding, const DecoderConfig& config);
ValueId decoder_advance(Tape& tape, ValueId state, bool premise_action, int action,
                        const DecoderConfig& config);
ValueId production_logits(Tape& tape, ValueId state, const DecoderConfig& config);  // {P}
ValueId premise_logits(Tape& tape, ValueId state, const std::vector<ValueId>& premise_embeddings,
                       const DecoderConfig& config);  // {N}

// One expansion of `frontier_symbol`: the probability vector over productions
// (masked to matching lhs) or over candidate premises, plus the state after
// taking `forced_action` (argmax with lowest-index tie-break when < 0).
// Errors: NoValidProductions, NoPremises.
struct DecodeStepResult {
  std::vector<double> probabilities;
  int chosen = -1;
  ValueId next_state = -1;
};
DecodeStepResult decode_step(Tape& tape, ValueId state, int frontier_symbol, const Grammar& grammar,
                             const std::vector<ValueId>& premise_embeddings,
                             const DecoderConfig& config, int forced_action = -1);

// One fine-tuning example; gold is the leftmost derivation sequence and the
// premise indices it mentions point into `premises`.
struct ProofStep {
  std::string file;
  int position = 0;
  TermAst goal;
  std::vector<TermAst> premises;
  std::vector<int> gold;
};

struct ProofStepView {
  const ProofStep* step = nullptr;
  TermView goal;
  std::vector<TermView> premises;
};

ProofStepView make_step_view(const ProofStep& step, const NodeVocab& vocab,
                             const EncoderConfig& encoder);

// L = (1/T) sum_t -log p(gold_t), teacher forcing: gold actions drive the
// state no matter what the model prefers. Errors: GoldInvalid, NoPremises.
ValueId teacher_forced_loss(Tape& tape, const ProofStepView& view, const Grammar& grammar,
                            const NodeVocab& vocab, const EncoderConfig& encoder,
                            const DecoderConfig& decoder);

// Expands the leftmost frontier with the argmax action until the derivation
// completes; the result is grammar-valid by construction.
// Errors: MaxStepsExceeded, NoPremises.
TacticAst greedy_decode(const TermAst& goal, const std::vector<TermAst>& premises,
                        ParamStore& params, const Grammar& grammar, const NodeVocab& vocab,
                        const EncoderConfig& encoder, const DecoderConfig& decoder,
                        int max_steps = 64);

// Fraction of gold positions where the model's argmax equals the gold action
// under teacher forcing (eval mode).
double teacher_forced_accuracy(const std::vector<ProofStep>& dataset, const Grammar& grammar,
                               ParamStore& params, const NodeVocab& vocab,
                               const EncoderConfig& encoder, const DecoderConfig& decoder);

struct FinetuneConfig {
  int epochs = 5;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  EncoderKind encoder = EncoderKind::gin;
  int layers = 5;    // K
  int hidden = 256;  // H
  int action_dim = 64;
  int state_dim = 256;
};

struct FinetuneResult {
  ParamStore params;
  NodeVocab vocab;
  EncoderConfig encoder;
  DecoderConfig decoder;
  std::vector<EpochMetrics> metrics;  // accuracy = teacher-forced per-position
};

// Joint Adam training of encoder + decoder on the teacher-forced objective.
// When init_encoder is given, every encoder.* entry is copied bit-exactly
// from it (projection.* and everything else is ignored); init_vocab must then
// be the vocabulary the checkpoint was trained with.
// Errors: EmptyDataset, CheckpointMismatch.
FinetuneResult finetune(const std::vector<ProofStep>& dataset, const Grammar& grammar,
                        const FinetuneConfig& config, const ParamStore* init_encoder = nullptr,
                        const NodeVocab* init_vocab = nullptr);

// Greedy-decode every step and compare against the gold tree exactly;
// per-file counts, sorted by group name.
struct GroupResult {
  std::string group;
  int correct = 0;
  int total = 0;
};
std::vector<GroupResult> eval_tactic(const std::vector<ProofStep>& dataset, const Grammar& grammar,
                                     ParamStore& params, const NodeVocab& vocab,
                                     const EncoderConfig& encoder, const DecoderConfig& decoder);

}  // namespace prooflens
