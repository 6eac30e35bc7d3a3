#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prooflens/sexpr.hpp"
#include "prooflens/tensor.hpp"

namespace prooflens {

// Name identifier atoms collapse to; their text never enters node features.
inline constexpr const char* kIdentLabel = "IDENT";
inline constexpr const char* kUnkLabel = "UNK";

// A kernel-level term as a labeled tree. Ids are assigned in pre-order, so a
// node's id is smaller than every descendant's.
struct TermAst {
  struct Node {
    std::string label;
    std::optional<std::string> ident;  // only on IDENT leaves
    std::vector<int> children;
  };

  std::vector<Node> nodes;
  int root = 0;

  int size() const { return static_cast<int>(nodes.size()); }
  bool operator==(const TermAst& other) const;
};

// List heads become node labels; non-head atoms become IDENT leaves carrying
// the atom text. Errors: EmptyList, NonAtomHead.
TermAst sexpr_to_ast(const SExpr& s);

// Inverse of sexpr_to_ast: IDENT leaves render as bare atoms, every other
// node as a parenthesized list (even childless ones, so "(Prop)" survives).
SExpr ast_to_sexpr(const TermAst& ast);

inline TermAst parse_term(const std::string& text) { return sexpr_to_ast(parse_sexpr(text)); }
inline std::string render_term(const TermAst& ast) { return render_sexpr(ast_to_sexpr(ast)); }

// True when `needle` occurs as an exact subtree of `haystack` (labels, idents
// and structure all equal).
bool contains_subtree(const TermAst& haystack, const TermAst& needle);

// Syntactic-role vocabulary: sorted unique labels plus a reserved trailing
// UNK bucket for labels unseen at training time.
class NodeVocab {
 public:
  static NodeVocab from_corpus(const std::vector<const TermAst*>& asts);
  static NodeVocab from_labels(std::vector<std::string> sorted_labels_without_unk);

  int dimension() const { return static_cast<int>(labels_.size()); }
  int unk_index() const { return dimension() - 1; }
  int index_of(const std::string& label) const;
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;  // sorted observed labels, then UNK
};

// Undirected-graph view of a tree: one edge per parent-child pair stored in
// both directions, plus a one-hot feature row per node.
struct TermGraph {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;   // directed records, both ways
  std::vector<std::vector<int>> neighbors;  // ascending adjacency lists
  Tensor features;                          // num_nodes x D, one-hot rows

  int undirected_edge_count() const { return static_cast<int>(edges.size()) / 2; }
};

TermGraph ast_to_graph(const TermAst& ast, const NodeVocab& vocab);

// One label per line, vocabulary order (UNK last).
void save_vocab(const NodeVocab& vocab, const std::string& path);
NodeVocab load_vocab(const std::string& path);

}  // namespace prooflens
