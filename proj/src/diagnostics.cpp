#include "prooflens/diagnostics.hpp"

#include "prooflens/datagen.hpp"
#include "prooflens/grad_check.hpp"

namespace prooflens {

void jitter_graph_features(TermGraph& graph, Rng& rng, double amplitude) {
  for (std::size_t i = 0; i < graph.features.size(); ++i)
    graph.features.data()[i] += rng.uniform(-amplitude, amplitude);
}

namespace {

NodeVocab tiny_vocab() {
  // six observed labels plus UNK: D = 7
  return NodeVocab::from_labels({"App", "Case", "Lam", "Prod", "Sort", "Var"});
}

std::vector<TermAst> tiny_terms() {
  std::vector<TermAst> terms;
  terms.push_back(parse_term("(App (Lam x (Var y)) (Sort s))"));
  terms.push_back(parse_term("(Prod (App f (Var y)) (Case c))"));
  terms.push_back(parse_term("(Case (Sort u) (Lam z))"));
  terms.push_back(parse_term("(Lam (Var q) (Prod w))"));
  return terms;
}

}  // namespace

GradCheckReport run_model_grad_checks(std::uint64_t seed, double eps) {
  GradCheckReport report;
  const NodeVocab vocab = tiny_vocab();
  const std::vector<TermAst> terms = tiny_terms();
  const EncoderConfig encoder{EncoderKind::gin, /*layers=*/2, vocab.dimension(), /*hidden=*/8};

  {
    const ProjectionConfig projection{8, 8};
    ParamStore params;
    Rng rng(seed);
    register_encoder_params(params, encoder, rng);
    register_projection_params(params, projection, rng);

    std::vector<TermView> views;
    for (const TermAst& t : terms) views.push_back(make_term_view(t, vocab, encoder));
    for (TermView& view : views) jitter_graph_features(view.graph, rng);

    ForwardFn forward = [&](Tape& tape) {
      ValueId z_t = project(tape, encode_term(tape, views[0], vocab, encoder), projection);
      ValueId z_pos = project(tape, encode_term(tape, views[1], vocab, encoder), projection);
      std::vector<ValueId> z_negs = {
          project(tape, encode_term(tape, views[2], vocab, encoder), projection),
          project(tape, encode_term(tape, views[3], vocab, encoder), projection)};
      return info_nce(tape, z_t, z_pos, z_negs);
    };
    report.contrastive_error = grad_check(forward, params, eps);
  }

  {
    const Grammar grammar = parse_grammar(default_grammar_text());
    const DecoderConfig decoder{/*action_dim=*/8, /*state_dim=*/8, /*hidden=*/8,
                                grammar.num_productions()};
    ParamStore params;
    Rng rng(seed + 1);
    register_encoder_params(params, encoder, rng);
    register_decoder_params(params, decoder, rng);

    ProofStep step;
    step.file = "diag";
    step.goal = terms[0];
    step.premises = {terms[1], terms[2]};
    // seq(apply s1, reflexivity): production, production, premise, production
    step.gold = {5, 3, 1, 1};
    ProofStepView view = make_step_view(step, vocab, encoder);
    jitter_graph_features(view.goal.graph, rng);
    for (TermView& premise : view.premises) jitter_graph_features(premise.graph, rng);

    ForwardFn forward = [&](Tape& tape) {
      return teacher_forced_loss(tape, view, grammar, vocab, encoder, decoder);
    };
    report.decoder_error = grad_check(forward, params, eps);
  }
  return report;
}

}  // namespace prooflens
