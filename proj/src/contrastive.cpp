#include "prooflens/contrastive.hpp"

#include <limits>
#include <numeric>

#include "prooflens/error.hpp"

namespace prooflens {

void register_projection_params(ParamStore& store, const ProjectionConfig& config, Rng& rng) {
  store.add("projection.w1", glorot_init(config.input_dim, config.input_dim, rng));
  store.add("projection.b1", Tensor({config.input_dim}));
  store.add("projection.w2", glorot_init(config.input_dim, config.output_dim, rng));
  store.add("projection.b2", Tensor({config.output_dim}));
}

ValueId project(Tape& tape, ValueId embedding, const ProjectionConfig& config) {
  ValueId h = tape.reshape(embedding, {1, config.input_dim});
  ValueId z = tape.add_rowvec(tape.matmul(h, tape.param("projection.w1")), tape.param("projection.b1"));
  z = tape.add_rowvec(tape.matmul(tape.relu(z), tape.param("projection.w2")), tape.param("projection.b2"));
  return tape.reshape(z, {config.output_dim});
}

ValueId info_nce(Tape& tape, ValueId z_theorem, ValueId z_positive,
                 const std::vector<ValueId>& z_negatives) {
  if (z_negatives.empty()) throw Error(ErrorCode::EmptyCandidates, "info_nce needs >= 1 negative");
  if (!tape.value(z_theorem).all_finite() || !tape.value(z_positive).all_finite())
    throw Error(ErrorCode::NonFiniteInput, "info_nce input is not finite");
  for (ValueId z : z_negatives)
    if (!tape.value(z).all_finite()) throw Error(ErrorCode::NonFiniteInput, "info_nce input is not finite");

  std::vector<ValueId> dots;
  dots.reserve(z_negatives.size() + 1);
  dots.push_back(tape.dot(z_theorem, z_positive));
  for (ValueId z : z_negatives) dots.push_back(tape.dot(z_theorem, z));
  ValueId logits = tape.stack_scalars(dots);
  std::vector<char> valid(dots.size(), 1);
  return tape.masked_softmax_nll(logits, std::move(valid), 0);
}

namespace {

// Scores every candidate in eval mode and returns the argmax index.
int argmax_candidate(const TermAst& theorem, const std::vector<const TermAst*>& candidates,
                     ParamStore& params, const NodeVocab& vocab, const EncoderConfig& encoder,
                     const ProjectionConfig& projection) {
  Tape tape(&params, Mode::eval);
  TermView theorem_view = make_term_view(theorem, vocab, encoder);
  ValueId z_t = project(tape, encode_term(tape, theorem_view, vocab, encoder), projection);

  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<TermView> views(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    views[i] = make_term_view(*candidates[i], vocab, encoder);
    ValueId z_p = project(tape, encode_term(tape, views[i], vocab, encoder), projection);
    double score = tape.value(tape.dot(z_t, z_p)).at(0);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

int select_premise(const TermAst& theorem, const std::vector<TermAst>& premises,
                   ParamStore& params, const NodeVocab& vocab, const EncoderConfig& encoder,
                   const ProjectionConfig& projection) {
  if (premises.empty()) throw Error(ErrorCode::EmptyCandidates, "no premises to select from");
  std::vector<const TermAst*> candidates;
  candidates.reserve(premises.size());
  for (const TermAst& p : premises) candidates.push_back(&p);
  return argmax_candidate(theorem, candidates, params, vocab, encoder, projection);
}

double eval_premise(const std::vector<PremiseInstance>& dataset, ParamStore& params,
                    const NodeVocab& vocab, const EncoderConfig& encoder,
                    const ProjectionConfig& projection) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "eval_premise on empty dataset");
  int correct = 0;
  for (const PremiseInstance& instance : dataset) {
    std::vector<const TermAst*> candidates;
    candidates.reserve(instance.negatives.size() + 1);
    candidates.push_back(&instance.positive);
    for (const TermAst& n : instance.negatives) candidates.push_back(&n);
    if (argmax_candidate(instance.theorem, candidates, params, vocab, encoder, projection) == 0)
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

PretrainResult pretrain(const std::vector<PremiseInstance>& dataset, const PretrainConfig& config) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "pretrain on empty dataset");

  std::vector<const TermAst*> corpus;
  for (const PremiseInstance& instance : dataset) {
    corpus.push_back(&instance.theorem);
    corpus.push_back(&instance.positive);
    for (const TermAst& n : instance.negatives) corpus.push_back(&n);
  }

  PretrainResult result;
  result.vocab = NodeVocab::from_corpus(corpus);
  result.encoder =
      EncoderConfig{config.encoder, config.layers, result.vocab.dimension(), config.hidden};
  result.projection = ProjectionConfig{config.hidden, config.proj_dim};

  Rng rng(config.seed);
  register_encoder_params(result.params, result.encoder, rng);
  register_projection_params(result.params, result.projection, rng);

  // Graphs are rebuilt only here, not per step.
  struct InstanceViews {
    TermView theorem, positive;
    std::vector<TermView> negatives;
  };
  std::vector<InstanceViews> views(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const PremiseInstance& instance = dataset[i];
    views[i].theorem = make_term_view(instance.theorem, result.vocab, result.encoder);
    views[i].positive = make_term_view(instance.positive, result.vocab, result.encoder);
    for (const TermAst& n : instance.negatives)
      views[i].negatives.push_back(make_term_view(n, result.vocab, result.encoder));
  }

  AdamState adam(config.learning_rate);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      Tape tape(&result.params, Mode::train);
      ValueId h_t = encode_term(tape, views[idx].theorem, result.vocab, result.encoder);
      ValueId z_t = project(tape, h_t, result.projection);
      ValueId z_pos = project(
          tape, encode_term(tape, views[idx].positive, result.vocab, result.encoder), result.projection);
      std::vector<ValueId> z_negs;
      z_negs.reserve(views[idx].negatives.size());
      for (const TermView& view : views[idx].negatives)
        z_negs.push_back(project(tape, encode_term(tape, view, result.vocab, result.encoder),
                                 result.projection));
      ValueId loss = info_nce(tape, z_t, z_pos, z_negs);
      loss_sum += tape.value(loss).at(0);
      Gradients grads = tape.backward(loss);
      adam_step(result.params, grads, adam);
    }
    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.mean_loss = loss_sum / static_cast<double>(dataset.size());
    metrics.accuracy =
        eval_premise(dataset, result.params, result.vocab, result.encoder, result.projection);
    result.metrics.push_back(metrics);
  }
  return result;
}

}  // namespace prooflens
