#pragma once

#include <memory>
#include <string>
#include <vector>

namespace prooflens {

// An s-expression: an atom or an ordered list of s-expressions.
// "()" survives parsing; AST conversion rejects it.
struct SExpr {
  bool is_atom = false;
  std::string atom;             // set when is_atom
  std::vector<SExpr> children;  // set when !is_atom

  static SExpr make_atom(std::string text) {
    SExpr s;
    s.is_atom = true;
    s.atom = std::move(text);
    return s;
  }
  static SExpr make_list(std::vector<SExpr> items) {
    SExpr s;
    s.children = std::move(items);
    return s;
  }

  bool operator==(const SExpr& other) const;
};

// Parses a single s-expression. Whitespace (space/tab/newline/CR) separates
// atoms; atoms are maximal runs of non-whitespace, non-paren characters.
// Errors: EmptyInput, UnbalancedParens, TrailingContent.
SExpr parse_sexpr(const std::string& text);

// Canonical text form: atoms verbatim, lists parenthesized, single spaces.
// render_sexpr(parse_sexpr(t)) reparses to a structurally identical SExpr.
std::string render_sexpr(const SExpr& s);

}  // namespace prooflens
