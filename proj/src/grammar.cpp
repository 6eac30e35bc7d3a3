#include "prooflens/grammar.hpp"

#include <fstream>
#include <sstream>

#include "prooflens/error.hpp"

namespace prooflens {

int Grammar::symbol_id(const std::string& name) const {
  for (std::size_t i = 0; i < symbols.size(); ++i)
    if (symbols[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

bool symbol_is_nonterminal(const std::string& name) {
  if (name == kPremiseArg) return false;
  return !name.empty() && name[0] >= 'A' && name[0] <= 'Z';
}

int intern_symbol(Grammar& grammar, const std::string& name) {
  int id = grammar.symbol_id(name);
  if (id >= 0) return id;
  grammar.symbols.push_back(name);
  grammar.nonterminal.push_back(symbol_is_nonterminal(name));
  if (name == kPremiseArg) grammar.premise_arg = static_cast<int>(grammar.symbols.size()) - 1;
  return static_cast<int>(grammar.symbols.size()) - 1;
}

}  // namespace

Grammar parse_grammar(const std::string& text) {
  Grammar grammar;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    std::string token;
    while (fields >> token) tokens.push_back(token);
    if (tokens.empty()) continue;
    if (tokens.size() < 3 || tokens[1] != "->")
      throw Error(ErrorCode::GrammarInvalid,
                  "line " + std::to_string(line_no) + ": expected 'LHS -> sym ...'");
    if (!symbol_is_nonterminal(tokens[0]))
      throw Error(ErrorCode::GrammarInvalid,
                  "line " + std::to_string(line_no) + ": lhs '" + tokens[0] + "' is not a nonterminal");

    Grammar::Production production;
    production.lhs = intern_symbol(grammar, tokens[0]);
    for (std::size_t i = 2; i < tokens.size(); ++i)
      production.rhs.push_back(intern_symbol(grammar, tokens[i]));
    if (grammar.start_symbol < 0) grammar.start_symbol = production.lhs;
    grammar.productions.push_back(std::move(production));
  }
  if (grammar.productions.empty()) throw Error(ErrorCode::GrammarInvalid, "no productions");

  grammar.productions_by_lhs.assign(grammar.symbols.size(), {});
  for (int p = 0; p < grammar.num_productions(); ++p)
    grammar.productions_by_lhs[grammar.productions[p].lhs].push_back(p);
  for (std::size_t s = 0; s < grammar.symbols.size(); ++s)
    if (grammar.nonterminal[s] && grammar.productions_by_lhs[s].empty())
      throw Error(ErrorCode::GrammarInvalid, "nonterminal " + grammar.symbols[s] + " has no productions");
  return grammar;
}

Grammar load_grammar_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileMissing, "cannot open grammar file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_grammar(text.str());
}

const char* default_grammar_text() {
  return "# mini tactic grammar\n"
         "T -> intro\n"
         "T -> reflexivity\n"
         "T -> split\n"
         "T -> apply PREMISE_ARG\n"
         "T -> rewrite PREMISE_ARG\n"
         "T -> seq T T\n";
}

bool TacticAst::operator==(const TacticAst& other) const {
  struct Cmp {
    static bool equal(const Node& a, const Node& b) {
      if (a.symbol != b.symbol || a.production != b.production || a.premise != b.premise) return false;
      if (a.children.size() != b.children.size()) return false;
      for (std::size_t i = 0; i < a.children.size(); ++i)
        if (!equal(a.children[i], b.children[i])) return false;
      return true;
    }
  };
  return Cmp::equal(root, other.root);
}

namespace {

void emit_sequence(const Grammar& grammar, const TacticAst::Node& node, std::vector<int>& out) {
  if (node.symbol == grammar.premise_arg) {
    if (node.premise < 0) throw Error(ErrorCode::InvalidTree, "PREMISE_ARG leaf without premise index");
    out.push_back(node.premise);
    return;
  }
  if (!grammar.is_nonterminal(node.symbol)) {
    if (!node.children.empty()) throw Error(ErrorCode::InvalidTree, "terminal with children");
    return;
  }
  if (node.production < 0 || node.production >= grammar.num_productions())
    throw Error(ErrorCode::InvalidTree, "unexpanded nonterminal " + grammar.symbol_name(node.symbol));
  const Grammar::Production& production = grammar.productions[node.production];
  if (production.lhs != node.symbol)
    throw Error(ErrorCode::InvalidTree, "production lhs does not match node symbol");
  if (production.rhs.size() != node.children.size())
    throw Error(ErrorCode::InvalidTree, "children do not match production rhs");
  for (std::size_t i = 0; i < node.children.size(); ++i)
    if (node.children[i].symbol != production.rhs[i])
      throw Error(ErrorCode::InvalidTree, "child symbol does not match production rhs");
  out.push_back(node.production);
  for (const TacticAst::Node& child : node.children) emit_sequence(grammar, child, out);
}

TacticAst::Node replay_node(const Grammar& grammar, int symbol, const std::vector<int>& gold,
                            std::size_t& cursor, int num_premises) {
  TacticAst::Node node;
  node.symbol = symbol;
  if (symbol == grammar.premise_arg) {
    if (cursor >= gold.size()) throw Error(ErrorCode::GoldInvalid, "gold ends before PREMISE_ARG");
    int premise = gold[cursor++];
    if (premise < 0 || (num_premises >= 0 && premise >= num_premises))
      throw Error(ErrorCode::GoldInvalid, "premise index " + std::to_string(premise) + " out of range");
    node.premise = premise;
    return node;
  }
  if (!grammar.is_nonterminal(symbol)) return node;

  if (cursor >= gold.size())
    throw Error(ErrorCode::GoldInvalid, "gold ends with unexpanded " + grammar.symbol_name(symbol));
  int production = gold[cursor++];
  if (production < 0 || production >= grammar.num_productions() ||
      grammar.productions[production].lhs != symbol)
    throw Error(ErrorCode::GoldInvalid, "production " + std::to_string(production) +
                                            " cannot expand " + grammar.symbol_name(symbol));
  node.production = production;
  for (int rhs_symbol : grammar.productions[production].rhs)
    node.children.push_back(replay_node(grammar, rhs_symbol, gold, cursor, num_premises));
  return node;
}

void collect_premises(const TacticAst::Node& node, std::vector<int>& out) {
  if (node.premise >= 0) {
    bool seen = false;
    for (int p : out) seen = seen || (p == node.premise);
    if (!seen) out.push_back(node.premise);
  }
  for (const TacticAst::Node& child : node.children) collect_premises(child, out);
}

void render_node(const Grammar& grammar, const TacticAst::Node& node,
                 const std::vector<std::string>& premise_names, std::string& out) {
  if (node.premise >= 0) {
    if (!out.empty()) out += ' ';
    out += (node.premise < static_cast<int>(premise_names.size()))
               ? premise_names[node.premise]
               : "?" + std::to_string(node.premise);
    return;
  }
  if (node.children.empty() && !grammar.is_nonterminal(node.symbol)) {
    if (!out.empty()) out += ' ';
    out += grammar.symbol_name(node.symbol);
    return;
  }
  for (const TacticAst::Node& child : node.children) render_node(grammar, child, premise_names, out);
}

}  // namespace

std::vector<int> derivation_sequence(const Grammar& grammar, const TacticAst& tactic) {
  std::vector<int> out;
  emit_sequence(grammar, tactic.root, out);
  return out;
}

TacticAst replay_gold(const Grammar& grammar, const std::vector<int>& gold, int num_premises) {
  if (gold.empty()) throw Error(ErrorCode::GoldInvalid, "empty gold sequence");
  std::size_t cursor = 0;
  TacticAst tactic;
  tactic.root = replay_node(grammar, grammar.start_symbol, gold, cursor, num_premises);
  if (cursor != gold.size())
    throw Error(ErrorCode::GoldInvalid, "gold has " + std::to_string(gold.size() - cursor) +
                                            " trailing actions");
  return tactic;
}

std::vector<int> premise_indices_used(const TacticAst& tactic) {
  std::vector<int> out;
  collect_premises(tactic.root, out);
  return out;
}

std::string render_tactic(const Grammar& grammar, const TacticAst& tactic,
                          const std::vector<std::string>& premise_names) {
  std::string out;
  render_node(grammar, tactic.root, premise_names, out);
  return out;
}

}  // namespace prooflens
