#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace oracle {

using prooflens::ParamStore;
using prooflens::Tensor;

Vec tensor_row(const Tensor& t, int row) {
  Vec out(t.cols());
  for (int j = 0; j < t.cols(); ++j) out[j] = t.shape().size() == 2 ? t.at(row, j) : t.at(j);
  return out;
}

double dot(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

Vec vec_matmul(const Vec& x, const Tensor& w) {
  Vec out(w.shape()[1], 0.0);
  for (int i = 0; i < w.shape()[0]; ++i)
    for (int j = 0; j < w.shape()[1]; ++j) out[j] += x[i] * w.at(i, j);
  return out;
}

Vec affine(const Vec& x, const Tensor& w, const Tensor& b) {
  Vec out = vec_matmul(x, w);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += b.at(static_cast<int>(j));
  return out;
}

Vec softmax_masked(const Vec& logits, const std::vector<char>& valid) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (valid[i] && logits[i] > hi) hi = logits[i];
  Vec probs(logits.size(), 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!valid[i]) continue;
    probs[i] = std::exp(logits[i] - hi);
    denom += probs[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) probs[i] /= denom;
  return probs;
}

double info_nce_from_dots(const Vec& dots) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double d : dots) hi = std::max(hi, d);
  double denom = 0.0;
  for (double d : dots) denom += std::exp(d - hi);
  return -(dots[0] - hi) + std::log(denom);
}

namespace {

Mat batchnorm(const Mat& x, const ParamStore& params, const std::string& prefix, bool train_mode) {
  const double eps = 1e-5;
  const std::size_t n = x.size(), m = x[0].size();
  Vec mean(m, 0.0), var(m, 0.0);
  if (train_mode) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) mean[j] += x[i][j];
    for (std::size_t j = 0; j < m; ++j) mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) var[j] += (x[i][j] - mean[j]) * (x[i][j] - mean[j]);
    for (std::size_t j = 0; j < m; ++j) var[j] /= static_cast<double>(n);
  } else {
    const Tensor& rm = params.at(prefix + ".running_mean");
    const Tensor& rv = params.at(prefix + ".running_var");
    for (std::size_t j = 0; j < m; ++j) {
      mean[j] = rm.at(static_cast<int>(j));
      var[j] = rv.at(static_cast<int>(j));
    }
  }
  const Tensor& gamma = params.at(prefix + ".gamma");
  const Tensor& beta = params.at(prefix + ".beta");
  Mat out(n, Vec(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      out[i][j] = gamma.at(static_cast<int>(j)) * (x[i][j] - mean[j]) / std::sqrt(var[j] + eps) +
                  beta.at(static_cast<int>(j));
  return out;
}

Mat relu_rows(Mat x) {
  for (auto& row : x)
    for (double& v : row) v = std::max(0.0, v);
  return x;
}

}  // namespace

Mat gin_layer(const Mat& states, const prooflens::TermGraph& graph, const ParamStore& params,
              int layer_index, bool train_mode) {
  const std::string prefix = "encoder.layer" + std::to_string(layer_index);
  const std::size_t n = states.size();

  Mat agg(n);
  for (std::size_t v = 0; v < n; ++v) {
    agg[v] = states[v];
    for (int u : graph.neighbors[v])
      for (std::size_t j = 0; j < states[u].size(); ++j) agg[v][j] += states[u][j];
  }

  Mat z1(n);
  for (std::size_t v = 0; v < n; ++v)
    z1[v] = affine(agg[v], params.at(prefix + ".w1"), params.at(prefix + ".b1"));
  z1 = relu_rows(batchnorm(z1, params, prefix + ".bn1", train_mode));

  Mat z2(n);
  for (std::size_t v = 0; v < n; ++v)
    z2[v] = affine(z1[v], params.at(prefix + ".w2"), params.at(prefix + ".b2"));
  return relu_rows(batchnorm(z2, params, prefix + ".bn2", train_mode));
}

Vec gin_encode(const prooflens::TermGraph& graph, const ParamStore& params, int layers,
               bool train_mode) {
  Mat states(graph.num_nodes);
  for (int v = 0; v < graph.num_nodes; ++v) states[v] = tensor_row(graph.features, v);

  Vec readout;
  for (int k = 0; k < layers; ++k) {
    states = gin_layer(states, graph, params, k, train_mode);
    Vec pooled(states[0].size(), 0.0);
    for (const Vec& row : states)
      for (std::size_t j = 0; j < row.size(); ++j) pooled[j] += row[j];
    for (double& v : pooled) v /= static_cast<double>(states.size());
    if (readout.empty())
      readout = pooled;
    else
      for (std::size_t j = 0; j < readout.size(); ++j) readout[j] += pooled[j];
  }
  for (double& v : readout) v /= static_cast<double>(layers);
  return readout;
}

namespace {

struct LstmState {
  Vec h, c;
};

LstmState treelstm_node(const prooflens::TermAst& ast, int node_id,
                        const prooflens::NodeVocab& vocab, const ParamStore& params, int hidden) {
  const auto& node = ast.nodes[node_id];
  Vec x(vocab.dimension(), 0.0);
  x[static_cast<std::size_t>(vocab.index_of(node.label))] = 1.0;

  std::vector<LstmState> children;
  for (int child : node.children) children.push_back(treelstm_node(ast, child, vocab, params, hidden));

  Vec h_sum(hidden, 0.0);
  for (const LstmState& child : children)
    for (int j = 0; j < hidden; ++j) h_sum[j] += child.h[j];

  auto gate = [&](const char* w, const char* u, const char* b, const Vec& h_in) {
    Vec out = vec_matmul(x, params.at(std::string("encoder.w") + w));
    Vec uh = vec_matmul(h_in, params.at(std::string("encoder.u") + u));
    const Tensor& bias = params.at(std::string("encoder.b") + b);
    for (int j = 0; j < hidden; ++j) out[j] += uh[j] + bias.at(j);
    return out;
  };
  auto sig = [](Vec v) {
    for (double& e : v) e = 1.0 / (1.0 + std::exp(-e));
    return v;
  };
  auto tanh_v = [](Vec v) {
    for (double& e : v) e = std::tanh(e);
    return v;
  };

  Vec i = sig(gate("i", "i", "i", h_sum));
  Vec o = sig(gate("o", "o", "o", h_sum));
  Vec u = tanh_v(gate("u", "u", "u", h_sum));

  LstmState out;
  out.c.resize(hidden);
  for (int j = 0; j < hidden; ++j) out.c[j] = i[j] * u[j];
  for (const LstmState& child : children) {
    Vec f = sig(gate("f", "f", "f", child.h));
    for (int j = 0; j < hidden; ++j) out.c[j] += f[j] * child.c[j];
  }
  out.h.resize(hidden);
  for (int j = 0; j < hidden; ++j) out.h[j] = o[j] * std::tanh(out.c[j]);
  return out;
}

}  // namespace

Vec treelstm_encode(const prooflens::TermAst& ast, const prooflens::NodeVocab& vocab,
                    const ParamStore& params, int hidden) {
  return treelstm_node(ast, ast.root, vocab, params, hidden).h;
}

Vec project(const Vec& h, const ParamStore& params) {
  Vec z = affine(h, params.at("projection.w1"), params.at("projection.b1"));
  for (double& v : z) v = std::max(0.0, v);
  return affine(z, params.at("projection.w2"), params.at("projection.b2"));
}

Vec decoder_init_state(const Vec& h_goal, const ParamStore& params) {
  Vec s = vec_matmul(h_goal, params.at("decoder.w_init"));
  for (double& v : s) v = std::tanh(v);
  return s;
}

Vec decoder_advance(const Vec& state, bool premise_action, int action, const ParamStore& params) {
  Vec e = premise_action ? tensor_row(params.at("decoder.premise_embed"), 0)
                         : tensor_row(params.at("decoder.embed"), action);
  Vec s = vec_matmul(state, params.at("decoder.w_state"));
  Vec a = vec_matmul(e, params.at("decoder.w_action"));
  const Tensor& b = params.at("decoder.b");
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = std::tanh(s[j] + a[j] + b.at(static_cast<int>(j)));
  return s;
}

Vec production_probs(const Vec& state, const ParamStore& params, const std::vector<char>& valid) {
  return softmax_masked(vec_matmul(state, params.at("decoder.u")), valid);
}

Vec premise_probs(const Vec& state, const std::vector<Vec>& premise_embeddings,
                  const ParamStore& params) {
  Vec query = vec_matmul(state, params.at("decoder.w_premise"));
  Vec logits;
  logits.reserve(premise_embeddings.size());
  for (const Vec& h : premise_embeddings) logits.push_back(dot(query, h));
  return softmax_masked(logits, std::vector<char>(premise_embeddings.size(), 1));
}

}  // namespace oracle
