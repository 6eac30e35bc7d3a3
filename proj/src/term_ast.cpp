#include "prooflens/term_ast.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "prooflens/error.hpp"

namespace prooflens {

bool TermAst::operator==(const TermAst& other) const {
  if (root != other.root || nodes.size() != other.nodes.size()) return false;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& a = nodes[i];
    const Node& b = other.nodes[i];
    if (a.label != b.label || a.ident != b.ident || a.children != b.children) return false;
  }
  return true;
}

namespace {

int build_ast(const SExpr& s, TermAst& out) {
  int id = static_cast<int>(out.nodes.size());
  out.nodes.emplace_back();
  if (s.is_atom) {
    out.nodes[id].label = kIdentLabel;
    out.nodes[id].ident = s.atom;
    return id;
  }
  if (s.children.empty()) throw Error(ErrorCode::EmptyList, "empty list has no constructor");
  if (!s.children[0].is_atom) throw Error(ErrorCode::NonAtomHead, "list head must be an atom");
  out.nodes[id].label = s.children[0].atom;
  for (std::size_t i = 1; i < s.children.size(); ++i) {
    int child = build_ast(s.children[i], out);
    out.nodes[id].children.push_back(child);
  }
  return id;
}

bool subtree_equal(const TermAst& a, int ia, const TermAst& b, int ib) {
  const TermAst::Node& na = a.nodes[ia];
  const TermAst::Node& nb = b.nodes[ib];
  if (na.label != nb.label || na.ident != nb.ident) return false;
  if (na.children.size() != nb.children.size()) return false;
  for (std::size_t k = 0; k < na.children.size(); ++k)
    if (!subtree_equal(a, na.children[k], b, nb.children[k])) return false;
  return true;
}

}  // namespace

TermAst sexpr_to_ast(const SExpr& s) {
  TermAst ast;
  ast.root = build_ast(s, ast);
  return ast;
}

namespace {
SExpr node_to_sexpr(const TermAst& ast, int id) {
  const TermAst::Node& node = ast.nodes[id];
  if (node.label == kIdentLabel && node.ident && node.children.empty())
    return SExpr::make_atom(*node.ident);
  std::vector<SExpr> items;
  items.push_back(SExpr::make_atom(node.label));
  for (int child : node.children) items.push_back(node_to_sexpr(ast, child));
  return SExpr::make_list(std::move(items));
}
}  // namespace

SExpr ast_to_sexpr(const TermAst& ast) { return node_to_sexpr(ast, ast.root); }

bool contains_subtree(const TermAst& haystack, const TermAst& needle) {
  for (int id = 0; id < haystack.size(); ++id)
    if (subtree_equal(haystack, id, needle, needle.root)) return true;
  return false;
}

NodeVocab NodeVocab::from_corpus(const std::vector<const TermAst*>& asts) {
  std::set<std::string> seen;
  for (const TermAst* ast : asts)
    for (const TermAst::Node& node : ast->nodes) seen.insert(node.label);
  seen.erase(kUnkLabel);  // UNK is reserved, never an observed label
  NodeVocab vocab;
  vocab.labels_.assign(seen.begin(), seen.end());
  vocab.labels_.push_back(kUnkLabel);
  return vocab;
}

NodeVocab NodeVocab::from_labels(std::vector<std::string> sorted_labels_without_unk) {
  NodeVocab vocab;
  vocab.labels_ = std::move(sorted_labels_without_unk);
  vocab.labels_.push_back(kUnkLabel);
  return vocab;
}

int NodeVocab::index_of(const std::string& label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end() - 1, label);
  if (it != labels_.end() - 1 && *it == label) return static_cast<int>(it - labels_.begin());
  return unk_index();
}

TermGraph ast_to_graph(const TermAst& ast, const NodeVocab& vocab) {
  TermGraph graph;
  graph.num_nodes = ast.size();
  graph.neighbors.resize(ast.nodes.size());
  for (int id = 0; id < ast.size(); ++id) {
    for (int child : ast.nodes[id].children) {
      graph.edges.emplace_back(id, child);
      graph.edges.emplace_back(child, id);
      graph.neighbors[id].push_back(child);
      graph.neighbors[child].push_back(id);
    }
  }
  for (auto& adjacency : graph.neighbors) std::sort(adjacency.begin(), adjacency.end());

  const int dim = vocab.dimension();
  graph.features = Tensor({graph.num_nodes, dim});
  for (int id = 0; id < ast.size(); ++id)
    graph.features.at(id, vocab.index_of(ast.nodes[id].label)) = 1.0;
  return graph;
}

void save_vocab(const NodeVocab& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileMissing, "cannot open " + path + " for writing");
  for (const std::string& label : vocab.labels()) out << label << '\n';
}

NodeVocab load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileMissing, "cannot open " + path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) labels.push_back(line);
  if (labels.empty() || labels.back() != kUnkLabel)
    throw Error(ErrorCode::CorruptValue, path + ": vocabulary must end with UNK");
  labels.pop_back();
  return NodeVocab::from_labels(std::move(labels));
}

}  // namespace prooflens
