#include "prooflens/decoder.hpp"

#include <numeric>

#include "prooflens/adam.hpp"
#include "prooflens/error.hpp"

namespace prooflens {

void register_decoder_params(ParamStore& store, const DecoderConfig& config, Rng& rng) {
  store.add("decoder.embed", glorot_init(config.num_productions, config.action_dim, rng));
  store.add("decoder.premise_embed", glorot_init(1, config.action_dim, rng));
  store.add("decoder.w_init", glorot_init(config.hidden, config.state_dim, rng));
  store.add("decoder.w_state", glorot_init(config.state_dim, config.state_dim, rng));
  store.add("decoder.w_action", glorot_init(config.action_dim, config.state_dim, rng));
  store.add("decoder.b", Tensor({config.state_dim}));
  store.add("decoder.u", glorot_init(config.state_dim, config.num_productions, rng));
  store.add("decoder.w_premise", glorot_init(config.state_dim, config.hidden, rng));
}

ValueId decoder_init_state(Tape& tape, ValueId goal_embedding, const DecoderConfig& config) {
  ValueId h = tape.reshape(goal_embedding, {1, config.hidden});
  return tape.tanh(tape.matmul(h, tape.param("decoder.w_init")));
}

ValueId decoder_advance(Tape& tape, ValueId state, bool premise_action, int action,
                        const DecoderConfig& config) {
  ValueId e = premise_action ? tape.param("decoder.premise_embed")
                             : tape.select_row(tape.param("decoder.embed"), action);
  ValueId pre = tape.add(tape.matmul(state, tape.param("decoder.w_state")),
                         tape.matmul(e, tape.param("decoder.w_action")));
  (void)config;
  return tape.tanh(tape.add_rowvec(pre, tape.param("decoder.b")));
}

ValueId production_logits(Tape& tape, ValueId state, const DecoderConfig& config) {
  return tape.reshape(tape.matmul(state, tape.param("decoder.u")), {config.num_productions});
}

ValueId premise_logits(Tape& tape, ValueId state, const std::vector<ValueId>& premise_embeddings,
                       const DecoderConfig& config) {
  if (premise_embeddings.empty())
    throw Error(ErrorCode::NoPremises, "premise scoring with an empty local context");
  ValueId query = tape.reshape(tape.matmul(state, tape.param("decoder.w_premise")), {config.hidden});
  std::vector<ValueId> scores;
  scores.reserve(premise_embeddings.size());
  for (ValueId h : premise_embeddings) scores.push_back(tape.dot(query, h));
  return tape.stack_scalars(scores);
}

namespace {

std::vector<char> production_mask(const Grammar& grammar, int frontier_symbol) {
  std::vector<char> valid(grammar.num_productions(), 0);
  for (int p : grammar.productions_for(frontier_symbol)) valid[p] = 1;
  return valid;
}

int argmax_valid(const std::vector<double>& probs, const std::vector<char>& valid) {
  int best = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!valid[i]) continue;
    if (best < 0 || probs[i] > probs[best]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

DecodeStepResult decode_step(Tape& tape, ValueId state, int frontier_symbol, const Grammar& grammar,
                             const std::vector<ValueId>& premise_embeddings,
                             const DecoderConfig& config, int forced_action) {
  DecodeStepResult result;
  bool premise_action = (frontier_symbol == grammar.premise_arg);
  if (!premise_action && !grammar.is_nonterminal(frontier_symbol))
    throw Error(ErrorCode::InvalidTree,
                "cannot expand terminal " + grammar.symbol_name(frontier_symbol));

  if (premise_action) {
    ValueId logits = premise_logits(tape, state, premise_embeddings, config);
    std::vector<char> valid(premise_embeddings.size(), 1);
    result.probabilities = masked_softmax_probs(tape.value(logits).data(), valid);
    result.chosen = forced_action >= 0 ? forced_action : argmax_valid(result.probabilities, valid);
  } else {
    if (grammar.productions_for(frontier_symbol).empty())
      throw Error(ErrorCode::NoValidProductions,
                  "no productions for " + grammar.symbol_name(frontier_symbol));
    ValueId logits = production_logits(tape, state, config);
    std::vector<char> valid = production_mask(grammar, frontier_symbol);
    result.probabilities = masked_softmax_probs(tape.value(logits).data(), valid);
    result.chosen = forced_action >= 0 ? forced_action : argmax_valid(result.probabilities, valid);
  }
  result.next_state = decoder_advance(tape, state, premise_action, result.chosen, config);
  return result;
}

ProofStepView make_step_view(const ProofStep& step, const NodeVocab& vocab,
                             const EncoderConfig& encoder) {
  ProofStepView view;
  view.step = &step;
  view.goal = make_term_view(step.goal, vocab, encoder);
  view.premises.reserve(step.premises.size());
  for (const TermAst& p : step.premises) view.premises.push_back(make_term_view(p, vocab, encoder));
  return view;
}

namespace {

// Walks the gold sequence in leftmost order, invoking the callback once per
// expansion position with the logits node, the validity mask and the gold
// action. Premises are encoded lazily on the first PREMISE_ARG position.
void replay_positions(Tape& tape, const ProofStepView& view, const Grammar& grammar,
                      const NodeVocab& vocab, const EncoderConfig& encoder,
                      const DecoderConfig& decoder,
                      const std::function<void(bool, ValueId, const std::vector<char>&, int)>& cb) {
  const std::vector<int>& gold = view.step->gold;
  if (gold.empty()) throw Error(ErrorCode::GoldInvalid, "empty gold sequence");

  ValueId h_goal = encode_term(tape, view.goal, vocab, encoder);
  ValueId state = decoder_init_state(tape, h_goal, decoder);

  std::vector<ValueId> premise_embeds;
  bool premises_encoded = false;

  std::vector<int> frontier{grammar.start_symbol};
  std::size_t cursor = 0;
  while (!frontier.empty()) {
    int symbol = frontier.back();
    frontier.pop_back();
    bool premise_action = (symbol == grammar.premise_arg);
    if (!premise_action && !grammar.is_nonterminal(symbol)) continue;

    if (cursor >= gold.size())
      throw Error(ErrorCode::GoldInvalid, "gold ends with frontier " + grammar.symbol_name(symbol));
    int action = gold[cursor++];

    if (premise_action) {
      if (view.premises.empty())
        throw Error(ErrorCode::NoPremises, "PREMISE_ARG with an empty local context");
      if (!premises_encoded) {
        for (const TermView& p : view.premises)
          premise_embeds.push_back(encode_term(tape, p, vocab, encoder));
        premises_encoded = true;
      }
      if (action < 0 || action >= static_cast<int>(premise_embeds.size()))
        throw Error(ErrorCode::GoldInvalid, "premise index " + std::to_string(action) + " out of range");
      ValueId logits = premise_logits(tape, state, premise_embeds, decoder);
      std::vector<char> valid(premise_embeds.size(), 1);
      cb(true, logits, valid, action);
    } else {
      if (action < 0 || action >= grammar.num_productions() ||
          grammar.productions[action].lhs != symbol)
        throw Error(ErrorCode::GoldInvalid, "production " + std::to_string(action) +
                                                " cannot expand " + grammar.symbol_name(symbol));
      ValueId logits = production_logits(tape, state, decoder);
      cb(false, logits, production_mask(grammar, symbol), action);
      const std::vector<int>& rhs = grammar.productions[action].rhs;
      for (auto it = rhs.rbegin(); it != rhs.rend(); ++it) frontier.push_back(*it);
    }
    state = decoder_advance(tape, state, premise_action, action, decoder);
  }
  if (cursor != gold.size())
    throw Error(ErrorCode::GoldInvalid,
                "gold has " + std::to_string(gold.size() - cursor) + " trailing actions");
}

}  // namespace

ValueId teacher_forced_loss(Tape& tape, const ProofStepView& view, const Grammar& grammar,
                            const NodeVocab& vocab, const EncoderConfig& encoder,
                            const DecoderConfig& decoder) {
  std::vector<ValueId> losses;
  replay_positions(tape, view, grammar, vocab, encoder, decoder,
                   [&](bool, ValueId logits, const std::vector<char>& valid, int gold_action) {
                     losses.push_back(tape.masked_softmax_nll(logits, valid, gold_action));
                   });
  ValueId total = losses[0];
  for (std::size_t i = 1; i < losses.size(); ++i) total = tape.add(total, losses[i]);
  return tape.scale(total, 1.0 / static_cast<double>(losses.size()));
}

TacticAst greedy_decode(const TermAst& goal, const std::vector<TermAst>& premises,
                        ParamStore& params, const Grammar& grammar, const NodeVocab& vocab,
                        const EncoderConfig& encoder, const DecoderConfig& decoder, int max_steps) {
  Tape tape(&params, Mode::eval);
  TermView goal_view = make_term_view(goal, vocab, encoder);
  std::vector<TermView> premise_views;
  premise_views.reserve(premises.size());
  for (const TermAst& p : premises) premise_views.push_back(make_term_view(p, vocab, encoder));

  ValueId state = decoder_init_state(tape, encode_term(tape, goal_view, vocab, encoder), decoder);
  std::vector<ValueId> premise_embeds;
  bool premises_encoded = false;
  int actions = 0;

  // Recursion follows the leftmost derivation, threading the state through.
  std::function<TacticAst::Node(int)> expand = [&](int symbol) -> TacticAst::Node {
    TacticAst::Node node;
    node.symbol = symbol;
    bool premise_action = (symbol == grammar.premise_arg);
    if (!premise_action && !grammar.is_nonterminal(symbol)) return node;

    if (++actions > max_steps)
      throw Error(ErrorCode::MaxStepsExceeded,
                  "decode exceeded " + std::to_string(max_steps) + " expansions");
    if (premise_action && !premises_encoded) {
      if (premise_views.empty())
        throw Error(ErrorCode::NoPremises, "PREMISE_ARG with an empty local context");
      for (const TermView& p : premise_views)
        premise_embeds.push_back(encode_term(tape, p, vocab, encoder));
      premises_encoded = true;
    }
    DecodeStepResult step = decode_step(tape, state, symbol, grammar, premise_embeds, decoder);
    state = step.next_state;
    if (premise_action) {
      node.premise = step.chosen;
      return node;
    }
    node.production = step.chosen;
    for (int rhs_symbol : grammar.productions[step.chosen].rhs)
      node.children.push_back(expand(rhs_symbol));
    return node;
  };

  TacticAst tactic;
  tactic.root = expand(grammar.start_symbol);
  return tactic;
}

double teacher_forced_accuracy(const std::vector<ProofStep>& dataset, const Grammar& grammar,
                               ParamStore& params, const NodeVocab& vocab,
                               const EncoderConfig& encoder, const DecoderConfig& decoder) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "accuracy on empty dataset");
  long long hits = 0, positions = 0;
  for (const ProofStep& step : dataset) {
    Tape tape(&params, Mode::eval);
    ProofStepView view = make_step_view(step, vocab, encoder);
    replay_positions(tape, view, grammar, vocab, encoder, decoder,
                     [&](bool, ValueId logits, const std::vector<char>& valid, int gold_action) {
                       std::vector<double> probs =
                           masked_softmax_probs(tape.value(logits).data(), valid);
                       if (argmax_valid(probs, valid) == gold_action) ++hits;
                       ++positions;
                     });
  }
  return static_cast<double>(hits) / static_cast<double>(positions);
}

FinetuneResult finetune(const std::vector<ProofStep>& dataset, const Grammar& grammar,
                        const FinetuneConfig& config, const ParamStore* init_encoder,
                        const NodeVocab* init_vocab) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "finetune on empty dataset");

  FinetuneResult result;
  if (init_vocab) {
    result.vocab = *init_vocab;
  } else {
    std::vector<const TermAst*> corpus;
    for (const ProofStep& step : dataset) {
      corpus.push_back(&step.goal);
      for (const TermAst& p : step.premises) corpus.push_back(&p);
    }
    result.vocab = NodeVocab::from_corpus(corpus);
  }
  result.encoder =
      EncoderConfig{config.encoder, config.layers, result.vocab.dimension(), config.hidden};
  result.decoder =
      DecoderConfig{config.action_dim, config.state_dim, config.hidden, grammar.num_productions()};

  Rng rng(config.seed);
  register_encoder_params(result.params, result.encoder, rng);
  register_decoder_params(result.params, result.decoder, rng);

  if (init_encoder) {
    // Every encoder.* entry of the model and of the checkpoint must pair up
    // with identical shapes; values transfer bit-exactly.
    for (const std::string& name : init_encoder->names())
      if (name.rfind("encoder.", 0) == 0 && !result.params.has(name))
        throw Error(ErrorCode::CheckpointMismatch, "checkpoint entry " + name + " not in model");
    for (const std::string& name : result.params.names()) {
      if (name.rfind("encoder.", 0) != 0) continue;
      if (!init_encoder->has(name))
        throw Error(ErrorCode::CheckpointMismatch, "model entry " + name + " not in checkpoint");
      const Tensor& source = init_encoder->at(name);
      if (!source.same_shape(result.params.at(name)))
        throw Error(ErrorCode::CheckpointMismatch, "shape mismatch for " + name);
      result.params.at(name) = source;
    }
  }

  std::vector<ProofStepView> views;
  views.reserve(dataset.size());
  for (const ProofStep& step : dataset)
    views.push_back(make_step_view(step, result.vocab, result.encoder));

  AdamState adam(config.learning_rate);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      Tape tape(&result.params, Mode::train);
      ValueId loss =
          teacher_forced_loss(tape, views[idx], grammar, result.vocab, result.encoder, result.decoder);
      loss_sum += tape.value(loss).at(0);
      Gradients grads = tape.backward(loss);
      adam_step(result.params, grads, adam);
    }
    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.mean_loss = loss_sum / static_cast<double>(dataset.size());
    metrics.accuracy = teacher_forced_accuracy(dataset, grammar, result.params, result.vocab,
                                               result.encoder, result.decoder);
    result.metrics.push_back(metrics);
  }
  return result;
}

std::vector<GroupResult> eval_tactic(const std::vector<ProofStep>& dataset, const Grammar& grammar,
                                     ParamStore& params, const NodeVocab& vocab,
                                     const EncoderConfig& encoder, const DecoderConfig& decoder) {
  std::map<std::string, GroupResult> groups;
  for (const ProofStep& step : dataset) {
    GroupResult& group = groups[step.file];
    group.group = step.file;
    group.total += 1;
    TacticAst gold = replay_gold(grammar, step.gold, static_cast<int>(step.premises.size()));
    try {
      TacticAst predicted =
          greedy_decode(step.goal, step.premises, params, grammar, vocab, encoder, decoder);
      if (predicted == gold) group.correct += 1;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MaxStepsExceeded && e.code() != ErrorCode::NoPremises) throw;
    }
  }
  std::vector<GroupResult> out;
  out.reserve(groups.size());
  for (auto& [name, group] : groups) out.push_back(group);
  return out;
}

}  // namespace prooflens
