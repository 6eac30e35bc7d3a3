#pragma once

#include "prooflens/rng.hpp"
#include "prooflens/tape.hpp"
#include "prooflens/term_ast.hpp"

namespace prooflens {

// GIN encoder: K message-passing layers, each an MLP over the un-scaled
// self-plus-neighbor sum, followed by a per-iteration mean-pool readout
// averaged over the K iterations. Layer 0 consumes the D-dim one-hot
// features; later layers are H to H.
struct GinConfig {
  int layers = 5;
  int input_dim = 0;  // D, from the vocabulary
  int hidden = 256;   // H
};

// Registers encoder.layer{k}.{w1,b1,bn1.*,w2,b2,bn2.*}, k = 0..layers-1.
// Weights are Glorot-uniform in registration order, biases zero.
void register_gin_params(ParamStore& store, const GinConfig& config, Rng& rng);

// One update: h_v <- MLP_k(h_v + sum_{u in N(v)} h_u) where MLP_k is
// Linear -> BN -> ReLU -> Linear -> BN -> ReLU and the BN batch is the nodes
// of this graph.
ValueId gin_layer(Tape& tape, ValueId node_states, const TermGraph& graph, int layer_index,
                  const GinConfig& config);

// Whole-graph embedding, shape {H}.
ValueId gin_encode(Tape& tape, const TermGraph& graph, const GinConfig& config);

// Child-Sum TreeLSTM baseline: shared input/output/update gates over the
// child-state sum, per-child forget gates, root hidden state as embedding.
struct TreeLstmConfig {
  int input_dim = 0;  // D
  int hidden = 256;   // H
};

// Registers encoder.{wi,ui,bi,wf,uf,bf,wo,uo,bo,wu,uu,bu}.
void register_treelstm_params(ParamStore& store, const TreeLstmConfig& config, Rng& rng);

// Whole-tree embedding, shape {H}.
ValueId treelstm_encode(Tape& tape, const TermAst& ast, const NodeVocab& vocab,
                        const TreeLstmConfig& config);

enum class EncoderKind { gin, treelstm };

EncoderKind parse_encoder_kind(const std::string& name);  // "gin" | "treelstm"

struct EncoderConfig {
  EncoderKind kind = EncoderKind::gin;
  int layers = 5;     // GIN only
  int input_dim = 0;  // D
  int hidden = 256;   // H

  GinConfig gin() const { return GinConfig{layers, input_dim, hidden}; }
  TreeLstmConfig treelstm() const { return TreeLstmConfig{input_dim, hidden}; }
};

void register_encoder_params(ParamStore& store, const EncoderConfig& config, Rng& rng);

// A term plus its cached graph form, so repeated encodes (and the
// graph_aggregate backward pass) never rebuild or dangle.
struct TermView {
  const TermAst* ast = nullptr;
  TermGraph graph;  // populated for the GIN encoder only
};

TermView make_term_view(const TermAst& ast, const NodeVocab& vocab, const EncoderConfig& config);

ValueId encode_term(Tape& tape, const TermView& view, const NodeVocab& vocab,
                    const EncoderConfig& config);

}  // namespace prooflens
