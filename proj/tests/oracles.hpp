#pragma once

// Brute-force reference implementations, written independently of the tape
// engine. They read the same ParamStore tensors but evaluate with plain
// loops over std::vector<double>, so any agreement with the library is
// evidence rather than tautology.

#include <vector>

#include "prooflens/param_store.hpp"
#include "prooflens/term_ast.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

Vec tensor_row(const prooflens::Tensor& t, int row);
double dot(const Vec& a, const Vec& b);
Vec vec_matmul(const Vec& x, const prooflens::Tensor& w);  // x (in), w {in,out}
Vec affine(const Vec& x, const prooflens::Tensor& w, const prooflens::Tensor& b);

// Masked softmax over valid entries; masked entries get probability 0.
Vec softmax_masked(const Vec& logits, const std::vector<char>& valid);

// -log softmax(dots)[0]; dots[0] is the positive.
double info_nce_from_dots(const Vec& dots);

// GIN forward with per-graph batch-norm statistics (train) or the stored
// running statistics (eval); never mutates the store.
Mat gin_layer(const Mat& states, const prooflens::TermGraph& graph,
              const prooflens::ParamStore& params, int layer_index, bool train_mode);
Vec gin_encode(const prooflens::TermGraph& graph, const prooflens::ParamStore& params, int layers,
               bool train_mode);

// Child-Sum TreeLSTM forward.
Vec treelstm_encode(const prooflens::TermAst& ast, const prooflens::NodeVocab& vocab,
                    const prooflens::ParamStore& params, int hidden);

// Projection head z = w2 . relu(w1 h + b1) + b2.
Vec project(const Vec& h, const prooflens::ParamStore& params);

// Decoder controller pieces.
Vec decoder_init_state(const Vec& h_goal, const prooflens::ParamStore& params);
Vec decoder_advance(const Vec& state, bool premise_action, int action,
                    const prooflens::ParamStore& params);
Vec production_probs(const Vec& state, const prooflens::ParamStore& params,
                     const std::vector<char>& valid);
Vec premise_probs(const Vec& state, const std::vector<Vec>& premise_embeddings,
                  const prooflens::ParamStore& params);

}  // namespace oracle
