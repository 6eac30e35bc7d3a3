#pragma once

#include <map>
#include <string>
#include <vector>

#include "prooflens/param_store.hpp"
#include "prooflens/tensor.hpp"
#include "prooflens/term_ast.hpp"

namespace prooflens {

enum class Mode { train, eval };

using ValueId = int;

// Softmax over the valid entries (max-subtracted); masked entries get
// probability exactly 0. Shared by the tape op and the decoder's inference
// path so the two can never drift apart.
std::vector<double> masked_softmax_probs(const double* logits, const std::vector<char>& valid);

// Registers gamma=1, beta=0 (trainable) and running_mean=0, running_var=1
// (buffers) under `prefix`.
void register_batchnorm(ParamStore& store, const std::string& prefix, int dim);

// Eager reverse-mode tape over Tensors. Values are computed at record time;
// backward() walks the recorded graph once. Every forward op verifies its
// output is finite. One tape records one loss; training builds a fresh tape
// per step.
class Tape {
 public:
  explicit Tape(ParamStore* store = nullptr, Mode mode = Mode::train)
      : store_(store), mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Mode mode() const { return mode_; }
  ParamStore& store() { return *store_; }

  ValueId constant(Tensor value);
  // Leaf bound to a trainable store entry; memoized per name so gradients
  // from every use accumulate on one node.
  ValueId param(const std::string& name);

  ValueId matmul(ValueId a, ValueId b);          // {n,k}x{k,m} -> {n,m}
  ValueId add(ValueId a, ValueId b);             // same shape
  ValueId add_rowvec(ValueId x, ValueId row);    // {n,m} + {m} -> {n,m}
  ValueId mul(ValueId a, ValueId b);             // elementwise
  ValueId scale(ValueId x, double factor);
  ValueId relu(ValueId x);
  ValueId tanh(ValueId x);
  ValueId sigmoid(ValueId x);
  ValueId mean_rows(ValueId x);                  // {n,m} -> {m}
  ValueId sum_rows(ValueId x);                   // {n,m} -> {m}
  ValueId sum_all(ValueId x);                    // -> {1}
  ValueId dot(ValueId a, ValueId b);             // {m}.{m} -> {1}
  ValueId reshape(ValueId x, std::vector<int> shape);
  ValueId stack_scalars(const std::vector<ValueId>& scalars);  // -> {k}
  ValueId select_row(ValueId matrix, int row);   // {p,a} -> {1,a}

  // out_v = h_v + sum_{u in N(v)} h_u, neighbors in ascending order. The
  // aggregation matrix is symmetric, so backward reuses the same op.
  ValueId graph_aggregate(ValueId node_states, const TermGraph& graph);

  // -log softmax(logits over valid entries)[target]. Exact 0 when target is
  // the only valid entry with any finite logit pattern that makes p=1.
  ValueId masked_softmax_nll(ValueId logits, std::vector<char> valid, int target);

  // y = gamma * (x - mu)/sqrt(var + 1e-5) + beta over the rows of x.
  // Train mode uses batch statistics and folds them into prefix.running_*
  // with momentum 0.1; eval mode normalizes by the stored running stats.
  ValueId batchnorm(ValueId x, const std::string& prefix);

  const Tensor& value(ValueId id) const { return nodes_[id].value; }

  // Gradients of a scalar loss for every trainable store entry; entries off
  // the recorded path get zeros. Errors: NotAScalar.
  Gradients backward(ValueId loss);

 private:
  enum class Op {
    constant,
    param,
    matmul,
    add,
    add_rowvec,
    mul,
    scale_op,
    relu,
    tanh_op,
    sigmoid,
    mean_rows,
    sum_rows,
    sum_all,
    dot,
    reshape,
    stack,
    select_row,
    graph_agg,
    softmax_nll,
    batchnorm,
  };

  struct Node {
    Op op;
    std::vector<ValueId> inputs;
    Tensor value;
    double factor = 0.0;               // scale
    int index = -1;                    // select_row row / nll target
    bool train_mode = false;           // batchnorm
    std::vector<char> mask;            // nll valid mask
    std::vector<double> aux;           // nll probs; batchnorm mean & inv_std
    const TermGraph* graph = nullptr;  // graph_agg
    std::string name;                  // param leaf
  };

  ValueId push(Node node);
  Tensor& grad_of(std::vector<Tensor>& grads, ValueId id);

  ParamStore* store_ = nullptr;
  Mode mode_ = Mode::train;
  std::vector<Node> nodes_;
  std::map<std::string, ValueId> param_ids_;
};

}  // namespace prooflens
