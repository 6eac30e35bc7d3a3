#pragma once

#include <string>
#include <vector>

namespace prooflens {

inline constexpr const char* kPremiseArg = "PREMISE_ARG";

// Context-free tactic grammar. Nonterminals are uppercase-initial symbols;
// PREMISE_ARG is a reserved terminal despite its spelling. Production ids are
// their file order and never change.
struct Grammar {
  struct Production {
    int lhs = -1;
    std::vector<int> rhs;
  };

  std::vector<std::string> symbols;  // id -> name
  std::vector<bool> nonterminal;     // per symbol
  std::vector<Production> productions;
  std::vector<std::vector<int>> productions_by_lhs;  // per symbol
  int start_symbol = -1;
  int premise_arg = -1;  // -1 when the grammar never mentions it

  int num_productions() const { return static_cast<int>(productions.size()); }
  int symbol_id(const std::string& name) const;
  const std::string& symbol_name(int id) const { return symbols[id]; }
  bool is_nonterminal(int id) const { return nonterminal[id]; }
  const std::vector<int>& productions_for(int sym) const { return productions_by_lhs[sym]; }
};

// One production per line, "LHS -> sym sym ..."; '#' starts a comment; blank
// lines are skipped. The first production's lhs is the start symbol.
// Errors: GrammarInvalid.
Grammar parse_grammar(const std::string& text);

// Errors: FileMissing, GrammarInvalid.
Grammar load_grammar_file(const std::string& path);

// The built-in mini tactic grammar, identical to grammars/mini.grammar.
const char* default_grammar_text();

// A grammar-complete derivation tree: internal nodes carry the chosen
// production, PREMISE_ARG leaves carry a premise index into the local
// context, plain terminal leaves carry nothing.
struct TacticAst {
  struct Node {
    int symbol = -1;
    int production = -1;  // >= 0 iff internal
    int premise = -1;     // >= 0 iff PREMISE_ARG leaf
    std::vector<Node> children;
  };
  Node root;

  bool operator==(const TacticAst& other) const;
};

// Depth-first leftmost production order; PREMISE_ARG expansions emit the
// premise index. Validates the tree against the grammar (InvalidTree).
std::vector<int> derivation_sequence(const Grammar& grammar, const TacticAst& tactic);

// Inverse of derivation_sequence. Each consumed integer is a production id
// or premise index depending on the frontier at that point. num_premises < 0
// disables the premise bound check. Errors: GoldInvalid.
TacticAst replay_gold(const Grammar& grammar, const std::vector<int>& gold, int num_premises = -1);

// Premise indices referenced by PREMISE_ARG leaves, first-use order, deduped.
std::vector<int> premise_indices_used(const TacticAst& tactic);

// Renders "apply H1"-style flat text for reports and debugging.
std::string render_tactic(const Grammar& grammar, const TacticAst& tactic,
                          const std::vector<std::string>& premise_names);

}  // namespace prooflens
