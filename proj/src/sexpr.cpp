#include "prooflens/sexpr.hpp"

#include "prooflens/error.hpp"

namespace prooflens {

bool SExpr::operator==(const SExpr& other) const {
  if (is_atom != other.is_atom) return false;
  if (is_atom) return atom == other.atom;
  if (children.size() != other.children.size()) return false;
  for (std::size_t i = 0; i < children.size(); ++i)
    if (!(children[i] == other.children[i])) return false;
  return true;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
bool is_delim(char c) { return is_space(c) || c == '(' || c == ')'; }

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < text.size() && is_space(text[pos])) ++pos;
  }
  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
};

SExpr parse_one(Cursor& cur) {
  cur.skip_space();
  if (cur.done()) throw Error(ErrorCode::UnbalancedParens, "unexpected end of input");
  char c = cur.peek();
  if (c == ')') throw Error(ErrorCode::UnbalancedParens, "unexpected ')'");
  if (c == '(') {
    ++cur.pos;
    std::vector<SExpr> items;
    for (;;) {
      cur.skip_space();
      if (cur.done()) throw Error(ErrorCode::UnbalancedParens, "missing ')'");
      if (cur.peek() == ')') {
        ++cur.pos;
        return SExpr::make_list(std::move(items));
      }
      items.push_back(parse_one(cur));
    }
  }
  std::size_t start = cur.pos;
  while (cur.pos < cur.text.size() && !is_delim(cur.text[cur.pos])) ++cur.pos;
  return SExpr::make_atom(cur.text.substr(start, cur.pos - start));
}

}  // namespace

SExpr parse_sexpr(const std::string& text) {
  Cursor cur{text};
  cur.skip_space();
  if (cur.done()) throw Error(ErrorCode::EmptyInput, "no s-expression in input");
  SExpr result = parse_one(cur);
  cur.skip_space();
  if (!cur.done()) throw Error(ErrorCode::TrailingContent, "content after s-expression at offset " + std::to_string(cur.pos));
  return result;
}

std::string render_sexpr(const SExpr& s) {
  if (s.is_atom) return s.atom;
  std::string out = "(";
  for (std::size_t i = 0; i < s.children.size(); ++i) {
    if (i) out += ' ';
    out += render_sexpr(s.children[i]);
  }
  out += ')';
  return out;
}

}  // namespace prooflens
