#include "prooflens/tape.hpp"

#include <cmath>
#include <limits>

#include "prooflens/error.hpp"

namespace prooflens {

namespace {
constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorCode::ShapeMismatch,
              std::string(op) + " on shapes " + a.shape_str() + " and " + b.shape_str());
}
}  // namespace

std::vector<double> masked_softmax_probs(const double* logits, const std::vector<char>& valid) {
  const std::size_t n = valid.size();
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (valid[i] && logits[i] > max_logit) max_logit = logits[i];
  if (!std::isfinite(max_logit))
    throw Error(ErrorCode::NoValidProductions, "softmax mask admits no entries");

  std::vector<double> probs(n, 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    probs[i] = std::exp(logits[i] - max_logit);
    denom += probs[i];
  }
  for (std::size_t i = 0; i < n; ++i)
    if (valid[i]) probs[i] /= denom;
  return probs;
}

void register_batchnorm(ParamStore& store, const std::string& prefix, int dim) {
  Tensor ones({dim});
  for (int i = 0; i < dim; ++i) ones.at(i) = 1.0;
  store.add(prefix + ".gamma", ones, true);
  store.add(prefix + ".beta", Tensor({dim}), true);
  store.add(prefix + ".running_mean", Tensor({dim}), false);
  store.add(prefix + ".running_var", ones, false);
}

ValueId Tape::push(Node node) {
  // inputs (constants, params) are exempt; every computing op must stay finite
  if (node.op != Op::constant && node.op != Op::param && !node.value.all_finite())
    throw Error(ErrorCode::NonFiniteValue, "non-finite value produced by forward op");
  nodes_.push_back(std::move(node));
  return static_cast<ValueId>(nodes_.size() - 1);
}

ValueId Tape::constant(Tensor value) {
  Node node;
  node.op = Op::constant;
  node.value = std::move(value);
  return push(std::move(node));
}

ValueId Tape::param(const std::string& name) {
  auto it = param_ids_.find(name);
  if (it != param_ids_.end()) return it->second;
  if (store_ == nullptr) throw Error(ErrorCode::KeyMismatch, "tape has no parameter store");
  if (!store_->trainable(name))
    throw Error(ErrorCode::KeyMismatch, name + " is a buffer, not a trainable parameter");
  Node node;
  node.op = Op::param;
  node.name = name;
  node.value = store_->at(name);
  ValueId id = push(std::move(node));
  param_ids_.emplace(name, id);
  return id;
}

ValueId Tape::matmul(ValueId a, ValueId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (ta.shape().size() != 2 || tb.shape().size() != 2 || ta.cols() != tb.rows())
    shape_error("matmul", ta, tb);
  const int n = ta.rows(), k = ta.cols(), m = tb.cols();
  Tensor out({n, m});
  for (int i = 0; i < n; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      const double aik = ta.at(i, kk);
      if (aik == 0.0) continue;
      const double* brow = tb.data() + static_cast<std::size_t>(kk) * m;
      double* orow = out.data() + static_cast<std::size_t>(i) * m;
      for (int j = 0; j < m; ++j) orow[j] += aik * brow[j];
    }
  }
  Node node;
  node.op = Op::matmul;
  node.inputs = {a, b};
  node.value = std::move(out);
  return push(std::move(node));
}

ValueId Tape::add(ValueId a, ValueId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (!ta.same_shape(tb)) shape_error("add", ta, tb);
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += tb.data()[i];
  Node node;
  node.op = Op::add;
  node.inputs = {a, b};
  node.value = std::move(out);
  return push(std::move(node));
}

ValueId Tape::add_rowvec(ValueId x, ValueId row) {
  const Tensor& tx = nodes_[x].value;
  const Tensor& tr = nodes_[row].value;
  if (tr.shape().size() != 1 || tx.cols() != tr.cols()) shape_error("add_rowvec", tx, tr);
  Tensor out = tx;
  const int n = tx.rows(), m = tx.cols();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out.at(i, j) += tr.at(j);
  Node node;
  node.op = Op::add_rowvec;
  node.inputs = {x, row};
  node.value = std::move(out);
  return push(std::move(node));
}

ValueId Tape::mul(ValueId a, ValueId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (!ta.same_shape(tb)) shape_error("mul", ta, tb);
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= tb.data()[i];
  Node node;
  node.op = Op::mul;
  node.inputs = {a, b};
  node.value = std::move(out);
  return push(std::move(node));
}

ValueId Tape::scale(ValueId x, double factor) {
  Tensor out = nodes_[x].value;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= factor;
  Node node;
  node.op = Op::scale_op;
  node.inputs = {x};
  node.factor = factor;
  node.value = std::move(out);
  return push(std::move(node));
}

ValueId Tape::relu(ValueId x) {
  Tensor out = nodes_[x].value;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out.data()[i] < 0.0) out.data()[i] = 0.0;
  Node node;
  node.op = Op::relu;
  node.inputs = {x};
  node.value = std::move(out);
  return push(std::move(node));
}

ValueId Tape::tanh(ValueId x) {
  Tensor out = nodes_[x].value;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::tanh(out.data()[i]);
  Node node;
  node.op = Op::tanh_op;
  node.inputs = {x};
  node.value = std::move(out);
  return push(std::move(node));
}

ValueId Tape::sigmoid(ValueId x) {
  Tensor out = nodes_[x].value;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = 1.0 / (1.0 + std::exp(-out.data()[i]));
  Node node;
  node.op = Op::sigmoid;
  node.inputs = {x};
  node.value = std::move(out);
  return push(std::move(node));
}

ValueId Tape::mean_rows(ValueId x) {
  const Tensor& tx = nodes_[x].value;
  if (tx.shape().size() != 2) throw Error(ErrorCode::ShapeMismatch, "mean_rows needs rank 2");
  const int n = tx.rows(), m = tx.cols();
  Tensor out({m});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out.at(j) += tx.at(i, j);
  for (int j = 0; j < m; ++j) out.at(j) /= n;
  Node node;
  node.op = Op::mean_rows;
  node.inputs = {x};
  node.value = std::move(out);
  return push(std::move(node));
}

ValueId Tape::sum_rows(ValueId x) {
  const Tensor& tx = nodes_[x].value;
  if (tx.shape().size() != 2) throw Error(ErrorCode::ShapeMismatch, "sum_rows needs rank 2");
  const int n = tx.rows(), m = tx.cols();
  Tensor out({m});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out.at(j) += tx.at(i, j);
  Node node;
  node.op = Op::sum_rows;
  node.inputs = {x};
  node.value = std::move(out);
  return push(std::move(node));
}

ValueId Tape::sum_all(ValueId x) {
  const Tensor& tx = nodes_[x].value;
  double total = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) total += tx.data()[i];
  Node node;
  node.op = Op::sum_all;
  node.inputs = {x};
  node.value = Tensor::scalar(total);
  return push(std::move(node));
}

ValueId Tape::dot(ValueId a, ValueId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (ta.shape().size() != 1 || !ta.same_shape(tb)) shape_error("dot", ta, tb);
  double total = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) total += ta.data()[i] * tb.data()[i];
  Node node;
  node.op = Op::dot;
  node.inputs = {a, b};
  node.value = Tensor::scalar(total);
  return push(std::move(node));
}

ValueId Tape::reshape(ValueId x, std::vector<int> shape) {
  const Tensor& tx = nodes_[x].value;
  Tensor out(std::move(shape), tx.vec());
  Node node;
  node.op = Op::reshape;
  node.inputs = {x};
  node.value = std::move(out);
  return push(std::move(node));
}

ValueId Tape::stack_scalars(const std::vector<ValueId>& scalars) {
  Tensor out({static_cast<int>(scalars.size())});
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    const Tensor& t = nodes_[scalars[i]].value;
    if (!t.is_scalar()) throw Error(ErrorCode::ShapeMismatch, "stack_scalars input " + t.shape_str());
    out.at(static_cast<int>(i)) = t.at(0);
  }
  Node node;
  node.op = Op::stack;
  node.inputs = scalars;
  node.value = std::move(out);
  return push(std::move(node));
}

ValueId Tape::select_row(ValueId matrix, int row) {
  const Tensor& tm = nodes_[matrix].value;
  if (tm.shape().size() != 2 || row < 0 || row >= tm.rows())
    throw Error(ErrorCode::ShapeMismatch, "select_row " + std::to_string(row) + " from " + tm.shape_str());
  const int m = tm.cols();
  Tensor out({1, m});
  for (int j = 0; j < m; ++j) out.at(0, j) = tm.at(row, j);
  Node node;
  node.op = Op::select_row;
  node.inputs = {matrix};
  node.index = row;
  node.value = std::move(out);
  return push(std::move(node));
}

namespace {
Tensor aggregate_with_neighbors(const Tensor& h, const TermGraph& graph) {
  const int n = h.rows(), m = h.cols();
  Tensor out = h;
  for (int v = 0; v < n; ++v)
    for (int u : graph.neighbors[v])
      for (int j = 0; j < m; ++j) out.at(v, j) += h.at(u, j);
  return out;
}
}  // namespace

ValueId Tape::graph_aggregate(ValueId node_states, const TermGraph& graph) {
  const Tensor& th = nodes_[node_states].value;
  if (th.rows() != graph.num_nodes)
    throw Error(ErrorCode::ShapeMismatch,
                "graph_aggregate: " + std::to_string(graph.num_nodes) + " nodes vs " + th.shape_str());
  Node node;
  node.op = Op::graph_agg;
  node.inputs = {node_states};
  node.graph = &graph;
  node.value = aggregate_with_neighbors(th, graph);
  return push(std::move(node));
}

ValueId Tape::masked_softmax_nll(ValueId logits, std::vector<char> valid, int target) {
  const Tensor& tl = nodes_[logits].value;
  if (tl.shape().size() != 1 || tl.size() != valid.size())
    throw Error(ErrorCode::ShapeMismatch, "softmax_nll mask length vs logits " + tl.shape_str());
  if (target < 0 || target >= static_cast<int>(valid.size()) || !valid[target])
    throw Error(ErrorCode::GoldInvalid, "softmax_nll target " + std::to_string(target) + " is masked");

  // loss = -(x_t - M) + log(sum exp(x_i - M)); exact 0 for a lone valid entry
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < valid.size(); ++i)
    if (valid[i] && tl.at(static_cast<int>(i)) > max_logit) max_logit = tl.at(static_cast<int>(i));
  double denom = 0.0;
  for (std::size_t i = 0; i < valid.size(); ++i)
    if (valid[i]) denom += std::exp(tl.at(static_cast<int>(i)) - max_logit);
  double loss = -(tl.at(target) - max_logit) + std::log(denom);

  std::vector<double> probs = masked_softmax_probs(tl.data(), valid);
  Node node;
  node.op = Op::softmax_nll;
  node.inputs = {logits};
  node.index = target;
  node.mask = std::move(valid);
  node.aux = std::move(probs);
  node.value = Tensor::scalar(loss);
  return push(std::move(node));
}

ValueId Tape::batchnorm(ValueId x, const std::string& prefix) {
  // param() may grow the node vector, so bind it before taking value refs
  ValueId gamma = param(prefix + ".gamma");
  ValueId beta = param(prefix + ".beta");
  const Tensor& tx = nodes_[x].value;
  const Tensor& tg = nodes_[gamma].value;
  if (tx.shape().size() != 2 || tx.rows() < 1)
    throw Error(ErrorCode::ShapeMismatch, "batchnorm needs rank-2 input, got " + tx.shape_str());
  if (tg.cols() != tx.cols()) shape_error("batchnorm", tx, tg);

  const int n = tx.rows(), m = tx.cols();
  std::vector<double> mean(m, 0.0), var(m, 0.0);
  if (mode_ == Mode::train) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) mean[j] += tx.at(i, j);
    for (int j = 0; j < m; ++j) mean[j] /= n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        double d = tx.at(i, j) - mean[j];
        var[j] += d * d;
      }
    for (int j = 0; j < m; ++j) var[j] /= n;

    Tensor& run_mean = store_->at(prefix + ".running_mean");
    Tensor& run_var = store_->at(prefix + ".running_var");
    for (int j = 0; j < m; ++j) {
      run_mean.at(j) = (1.0 - kBnMomentum) * run_mean.at(j) + kBnMomentum * mean[j];
      run_var.at(j) = (1.0 - kBnMomentum) * run_var.at(j) + kBnMomentum * var[j];
    }
  } else {
    const Tensor& run_mean = store_->at(prefix + ".running_mean");
    const Tensor& run_var = store_->at(prefix + ".running_var");
    for (int j = 0; j < m; ++j) {
      mean[j] = run_mean.at(j);
      var[j] = run_var.at(j);
    }
  }

  std::vector<double> aux(2 * m);
  Tensor out({n, m});
  const Tensor& tb = nodes_[beta].value;
  for (int j = 0; j < m; ++j) {
    aux[j] = mean[j];
    aux[m + j] = 1.0 / std::sqrt(var[j] + kBnEps);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      out.at(i, j) = tg.at(j) * ((tx.at(i, j) - aux[j]) * aux[m + j]) + tb.at(j);

  Node node;
  node.op = Op::batchnorm;
  node.inputs = {x, gamma, beta};
  node.train_mode = (mode_ == Mode::train);
  node.aux = std::move(aux);
  node.value = std::move(out);
  return push(std::move(node));
}

Tensor& Tape::grad_of(std::vector<Tensor>& grads, ValueId id) {
  if (grads[id].size() == 0) grads[id] = Tensor::zeros_like(nodes_[id].value);
  return grads[id];
}

Gradients Tape::backward(ValueId loss) {
  if (!nodes_[loss].value.is_scalar())
    throw Error(ErrorCode::NotAScalar, "backward on shape " + nodes_[loss].value.shape_str());

  std::vector<Tensor> grads(nodes_.size());
  grads[loss] = Tensor::scalar(1.0);

  for (ValueId id = loss; id >= 0; --id) {
    if (grads[id].size() == 0) continue;
    const Node& node = nodes_[id];
    const Tensor& g = grads[id];
    switch (node.op) {
      case Op::constant:
      case Op::param:
        break;
      case Op::matmul: {
        const Tensor& a = nodes_[node.inputs[0]].value;
        const Tensor& b = nodes_[node.inputs[1]].value;
        Tensor& da = grad_of(grads, node.inputs[0]);
        Tensor& db = grad_of(grads, node.inputs[1]);
        const int n = a.rows(), k = a.cols(), m = b.cols();
        // dA = g . B^T ; dB = A^T . g
        for (int i = 0; i < n; ++i)
          for (int kk = 0; kk < k; ++kk) {
            double acc = 0.0;
            for (int j = 0; j < m; ++j) acc += g.at(i, j) * b.at(kk, j);
            da.at(i, kk) += acc;
          }
        for (int kk = 0; kk < k; ++kk)
          for (int i = 0; i < n; ++i) {
            const double aik = a.at(i, kk);
            if (aik == 0.0) continue;
            for (int j = 0; j < m; ++j) db.at(kk, j) += aik * g.at(i, j);
          }
        break;
      }
      case Op::add: {
        for (int side = 0; side < 2; ++side) {
          Tensor& d = grad_of(grads, node.inputs[side]);
          for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] += g.data()[i];
        }
        break;
      }
      case Op::add_rowvec: {
        Tensor& dx = grad_of(grads, node.inputs[0]);
        Tensor& dr = grad_of(grads, node.inputs[1]);
        const int n = node.value.rows(), m = node.value.cols();
        for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += g.data()[i];
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < m; ++j) dr.at(j) += g.at(i, j);
        break;
      }
      case Op::mul: {
        const Tensor& a = nodes_[node.inputs[0]].value;
        const Tensor& b = nodes_[node.inputs[1]].value;
        Tensor& da = grad_of(grads, node.inputs[0]);
        Tensor& db = grad_of(grads, node.inputs[1]);
        for (std::size_t i = 0; i < a.size(); ++i) {
          da.data()[i] += g.data()[i] * b.data()[i];
          db.data()[i] += g.data()[i] * a.data()[i];
        }
        break;
      }
      case Op::scale_op: {
        Tensor& dx = grad_of(grads, node.inputs[0]);
        for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += node.factor * g.data()[i];
        break;
      }
      case Op::relu: {
        const Tensor& x = nodes_[node.inputs[0]].value;
        Tensor& dx = grad_of(grads, node.inputs[0]);
        for (std::size_t i = 0; i < dx.size(); ++i)
          if (x.data()[i] > 0.0) dx.data()[i] += g.data()[i];
        break;
      }
      case Op::tanh_op: {
        Tensor& dx = grad_of(grads, node.inputs[0]);
        for (std::size_t i = 0; i < dx.size(); ++i) {
          const double y = node.value.data()[i];
          dx.data()[i] += g.data()[i] * (1.0 - y * y);
        }
        break;
      }
      case Op::sigmoid: {
        Tensor& dx = grad_of(grads, node.inputs[0]);
        for (std::size_t i = 0; i < dx.size(); ++i) {
          const double y = node.value.data()[i];
          dx.data()[i] += g.data()[i] * y * (1.0 - y);
        }
        break;
      }
      case Op::mean_rows: {
        Tensor& dx = grad_of(grads, node.inputs[0]);
        const int n = dx.rows(), m = dx.cols();
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < m; ++j) dx.at(i, j) += g.at(j) / n;
        break;
      }
      case Op::sum_rows: {
        Tensor& dx = grad_of(grads, node.inputs[0]);
        const int n = dx.rows(), m = dx.cols();
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < m; ++j) dx.at(i, j) += g.at(j);
        break;
      }
      case Op::sum_all: {
        Tensor& dx = grad_of(grads, node.inputs[0]);
        for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += g.at(0);
        break;
      }
      case Op::dot: {
        const Tensor& a = nodes_[node.inputs[0]].value;
        const Tensor& b = nodes_[node.inputs[1]].value;
        Tensor& da = grad_of(grads, node.inputs[0]);
        Tensor& db = grad_of(grads, node.inputs[1]);
        for (std::size_t i = 0; i < a.size(); ++i) {
          da.data()[i] += g.at(0) * b.data()[i];
          db.data()[i] += g.at(0) * a.data()[i];
        }
        break;
      }
      case Op::reshape: {
        Tensor& dx = grad_of(grads, node.inputs[0]);
        for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += g.data()[i];
        break;
      }
      case Op::stack: {
        for (std::size_t i = 0; i < node.inputs.size(); ++i)
          grad_of(grads, node.inputs[i]).at(0) += g.at(static_cast<int>(i));
        break;
      }
      case Op::select_row: {
        Tensor& dm = grad_of(grads, node.inputs[0]);
        const int m = node.value.cols();
        for (int j = 0; j < m; ++j) dm.at(node.index, j) += g.at(0, j);
        break;
      }
      case Op::graph_agg: {
        Tensor& dh = grad_of(grads, node.inputs[0]);
        Tensor back = aggregate_with_neighbors(g, *node.graph);
        for (std::size_t i = 0; i < dh.size(); ++i) dh.data()[i] += back.data()[i];
        break;
      }
      case Op::softmax_nll: {
        Tensor& dl = grad_of(grads, node.inputs[0]);
        const double gs = g.at(0);
        for (std::size_t i = 0; i < node.mask.size(); ++i) {
          if (!node.mask[i]) continue;
          double y = (static_cast<int>(i) == node.index) ? 1.0 : 0.0;
          dl.at(static_cast<int>(i)) += gs * (node.aux[i] - y);
        }
        break;
      }
      case Op::batchnorm: {
        const Tensor& x = nodes_[node.inputs[0]].value;
        const Tensor& gamma = nodes_[node.inputs[1]].value;
        Tensor& dx = grad_of(grads, node.inputs[0]);
        Tensor& dgamma = grad_of(grads, node.inputs[1]);
        Tensor& dbeta = grad_of(grads, node.inputs[2]);
        const int n = x.rows(), m = x.cols();
        const double* mean = node.aux.data();
        const double* inv = node.aux.data() + m;
        for (int j = 0; j < m; ++j) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (int i = 0; i < n; ++i) {
            const double xhat = (x.at(i, j) - mean[j]) * inv[j];
            sum_g += g.at(i, j);
            sum_gx += g.at(i, j) * xhat;
          }
          dgamma.at(j) += sum_gx;
          dbeta.at(j) += sum_g;
          if (node.train_mode) {
            // batch statistics depend on x:
            // dx = gamma*inv*(g - mean_i(g) - xhat * mean_i(g*xhat))
            for (int i = 0; i < n; ++i) {
              const double xhat = (x.at(i, j) - mean[j]) * inv[j];
              dx.at(i, j) += gamma.at(j) * inv[j] * (g.at(i, j) - sum_g / n - xhat * sum_gx / n);
            }
          } else {
            for (int i = 0; i < n; ++i) dx.at(i, j) += gamma.at(j) * inv[j] * g.at(i, j);
          }
        }
        break;
      }
    }
  }

  Gradients out = store_ ? store_->zero_gradients() : Gradients{};
  for (const auto& [name, id] : param_ids_) {
    if (grads[id].size() == 0) continue;
    out[name] = std::move(grads[id]);
  }
  return out;
}

}  // namespace prooflens
