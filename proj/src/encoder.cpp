#include "prooflens/encoder.hpp"

#include "prooflens/error.hpp"

namespace prooflens {

namespace {
std::string layer_prefix(int k) { return "encoder.layer" + std::to_string(k); }
}  // namespace

void register_gin_params(ParamStore& store, const GinConfig& config, Rng& rng) {
  for (int k = 0; k < config.layers; ++k) {
    const int in = (k == 0) ? config.input_dim : config.hidden;
    const int h = config.hidden;
    const std::string prefix = layer_prefix(k);
    store.add(prefix + ".w1", glorot_init(in, h, rng));
    store.add(prefix + ".b1", Tensor({h}));
    register_batchnorm(store, prefix + ".bn1", h);
    store.add(prefix + ".w2", glorot_init(h, h, rng));
    store.add(prefix + ".b2", Tensor({h}));
    register_batchnorm(store, prefix + ".bn2", h);
  }
}

ValueId gin_layer(Tape& tape, ValueId node_states, const TermGraph& graph, int layer_index,
                  const GinConfig& config) {
  if (layer_index < 0 || layer_index >= config.layers)
    throw Error(ErrorCode::ShapeMismatch, "gin layer index " + std::to_string(layer_index));
  const std::string prefix = layer_prefix(layer_index);
  ValueId agg = tape.graph_aggregate(node_states, graph);
  ValueId z = tape.add_rowvec(tape.matmul(agg, tape.param(prefix + ".w1")), tape.param(prefix + ".b1"));
  z = tape.relu(tape.batchnorm(z, prefix + ".bn1"));
  z = tape.add_rowvec(tape.matmul(z, tape.param(prefix + ".w2")), tape.param(prefix + ".b2"));
  return tape.relu(tape.batchnorm(z, prefix + ".bn2"));
}

ValueId gin_encode(Tape& tape, const TermGraph& graph, const GinConfig& config) {
  if (graph.features.cols() != config.input_dim)
    throw Error(ErrorCode::ShapeMismatch, "graph features " + graph.features.shape_str() +
                                              " vs input_dim " + std::to_string(config.input_dim));
  ValueId states = tape.constant(graph.features);
  ValueId readout = -1;
  for (int k = 0; k < config.layers; ++k) {
    states = gin_layer(tape, states, graph, k, config);
    ValueId pooled = tape.mean_rows(states);
    readout = (k == 0) ? pooled : tape.add(readout, pooled);
  }
  return tape.scale(readout, 1.0 / config.layers);
}

void register_treelstm_params(ParamStore& store, const TreeLstmConfig& config, Rng& rng) {
  const int d = config.input_dim, h = config.hidden;
  for (const char* gate : {"i", "f", "o", "u"}) {
    store.add(std::string("encoder.w") + gate, glorot_init(d, h, rng));
    store.add(std::string("encoder.u") + gate, glorot_init(h, h, rng));
    store.add(std::string("encoder.b") + gate, Tensor({h}));
  }
}

namespace {

struct TreeLstmCell {
  Tape& tape;
  const TermAst& ast;
  const NodeVocab& vocab;
  const TreeLstmConfig& config;

  ValueId gate(const char* w, const char* u, const char* b, ValueId x, ValueId h) const {
    ValueId pre = tape.add(tape.matmul(x, tape.param(std::string("encoder.w") + w)),
                           tape.matmul(h, tape.param(std::string("encoder.u") + u)));
    return tape.add_rowvec(pre, tape.param(std::string("encoder.b") + b));
  }

  // returns (hidden, cell), each {1,H}
  std::pair<ValueId, ValueId> run(int node_id) const {
    const TermAst::Node& node = ast.nodes[node_id];

    Tensor onehot({1, vocab.dimension()});
    onehot.at(0, vocab.index_of(node.label)) = 1.0;
    ValueId x = tape.constant(std::move(onehot));

    std::vector<std::pair<ValueId, ValueId>> child_states;
    child_states.reserve(node.children.size());
    for (int child : node.children) child_states.push_back(run(child));

    ValueId h_sum;
    if (child_states.empty()) {
      h_sum = tape.constant(Tensor({1, config.hidden}));
    } else {
      h_sum = child_states[0].first;
      for (std::size_t i = 1; i < child_states.size(); ++i)
        h_sum = tape.add(h_sum, child_states[i].first);
    }

    ValueId in_gate = tape.sigmoid(gate("i", "i", "i", x, h_sum));
    ValueId out_gate = tape.sigmoid(gate("o", "o", "o", x, h_sum));
    ValueId update = tape.tanh(gate("u", "u", "u", x, h_sum));

    ValueId cell = tape.mul(in_gate, update);
    for (const auto& [child_h, child_c] : child_states) {
      ValueId forget = tape.sigmoid(gate("f", "f", "f", x, child_h));
      cell = tape.add(cell, tape.mul(forget, child_c));
    }
    return {tape.mul(out_gate, tape.tanh(cell)), cell};
  }
};

}  // namespace

ValueId treelstm_encode(Tape& tape, const TermAst& ast, const NodeVocab& vocab,
                        const TreeLstmConfig& config) {
  if (vocab.dimension() != config.input_dim)
    throw Error(ErrorCode::ShapeMismatch, "vocab dimension " + std::to_string(vocab.dimension()) +
                                              " vs input_dim " + std::to_string(config.input_dim));
  TreeLstmCell cell{tape, ast, vocab, config};
  auto [hidden, cell_state] = cell.run(ast.root);
  (void)cell_state;
  return tape.reshape(hidden, {config.hidden});
}

EncoderKind parse_encoder_kind(const std::string& name) {
  if (name == "gin") return EncoderKind::gin;
  if (name == "treelstm") return EncoderKind::treelstm;
  throw Error(ErrorCode::KeyMismatch, "unknown encoder '" + name + "' (expected gin or treelstm)");
}

void register_encoder_params(ParamStore& store, const EncoderConfig& config, Rng& rng) {
  if (config.kind == EncoderKind::gin)
    register_gin_params(store, config.gin(), rng);
  else
    register_treelstm_params(store, config.treelstm(), rng);
}

TermView make_term_view(const TermAst& ast, const NodeVocab& vocab, const EncoderConfig& config) {
  TermView view;
  view.ast = &ast;
  if (config.kind == EncoderKind::gin) view.graph = ast_to_graph(ast, vocab);
  return view;
}

ValueId encode_term(Tape& tape, const TermView& view, const NodeVocab& vocab,
                    const EncoderConfig& config) {
  if (config.kind == EncoderKind::gin) return gin_encode(tape, view.graph, config.gin());
  return treelstm_encode(tape, *view.ast, vocab, config.treelstm());
}

}  // namespace prooflens
