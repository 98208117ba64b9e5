#include <cctype>
#include <charconv>
#include <limits>

#include "operators.hpp"
#include "slr/logic.hpp"

namespace slr {

SyntaxError::SyntaxError(std::size_t offset, std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error("syntax error at " + std::to_string(line) + ":" + std::to_string(column) + ": " +
                         message),
      offset_(offset),
      line_(line),
      column_(column),
      message_(message) {}

namespace {

using detail::infix_op;
using detail::left_max;
using detail::prefix_op;
using detail::right_max;

enum class Tok { name, var, integer, punct, end, eof };

struct Token {
  Tok kind;
  std::string text;
  std::int64_t value = 0;
  std::size_t offset = 0;
  bool layout_before = false;
};

bool is_symbol_char(char c) {
  switch (c) {
    case '+': case '-': case '*': case '/': case '\\': case '^': case '<': case '>':
    case '=': case '~': case ':': case '.': case '?': case '@': case '#': case '&': case '$':
      return true;
    default:
      return false;
  }
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      bool layout = skip_layout();
      if (pos_ >= text_.size()) {
        out.push_back(Token{Tok::eof, "", 0, pos_, layout});
        return out;
      }
      Token t = lex_one();
      t.layout_before = layout;
      out.push_back(std::move(t));
    }
  }

  [[noreturn]] void fail(std::size_t offset, const std::string& msg) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SyntaxError(offset, line, col, msg);
  }

 private:
  bool skip_layout() {
    bool any = false;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
        any = true;
      } else if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        any = true;
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
        auto close = text_.find("*/", pos_ + 2);
        if (close == std::string_view::npos) fail(pos_, "unterminated block comment");
        pos_ = close + 2;
        any = true;
      } else {
        break;
      }
    }
    return any;
  }

  Token lex_one() {
    const std::size_t start = pos_;
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
      if (ec != std::errc()) fail(start, "integer literal out of range");
      if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        fail(pos_, "malformed number");
      return Token{Tok::integer, std::string(text_.substr(start, pos_ - start)), v, start};
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      while (pos_ < text_.size() && is_alnum(text_[pos_])) ++pos_;
      return Token{Tok::name, std::string(text_.substr(start, pos_ - start)), 0, start};
    }
    if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < text_.size() && is_alnum(text_[pos_])) ++pos_;
      return Token{Tok::var, std::string(text_.substr(start, pos_ - start)), 0, start};
    }
    if (c == '\'') return lex_quoted();
    if (c == '(' || c == ')' || c == '[' || c == ']' || c == '|' || c == ',') {
      ++pos_;
      return Token{Tok::punct, std::string(1, c), 0, start};
    }
    if (c == '!' || c == ';') {
      ++pos_;
      return Token{Tok::name, std::string(1, c), 0, start};
    }
    if (c == '.') {
      const bool at_end = pos_ + 1 >= text_.size();
      const char next = at_end ? ' ' : text_[pos_ + 1];
      if (at_end || std::isspace(static_cast<unsigned char>(next)) || next == '%') {
        ++pos_;
        return Token{Tok::end, ".", 0, start};
      }
    }
    if (is_symbol_char(c)) {
      while (pos_ < text_.size() && is_symbol_char(text_[pos_])) {
        // A trailing '.' followed by layout terminates the clause.
        if (text_[pos_] == '.' && pos_ > start &&
            (pos_ + 1 >= text_.size() || std::isspace(static_cast<unsigned char>(text_[pos_ + 1])) ||
             text_[pos_ + 1] == '%'))
          break;
        ++pos_;
      }
      return Token{Tok::name, std::string(text_.substr(start, pos_ - start)), 0, start};
    }
    fail(start, std::string("unexpected character '") + c + "'");
  }

  Token lex_quoted() {
    const std::size_t start = pos_++;
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail(start, "unterminated quoted atom");
      char c = text_[pos_++];
      if (c == '\'') {
        if (pos_ < text_.size() && text_[pos_] == '\'') {
          out.push_back('\'');
          ++pos_;
          continue;
        }
        break;
      }
      if (c == '\\' && pos_ < text_.size()) {
        out.push_back(text_[pos_++]);
        continue;
      }
      if (c == '\n') fail(start, "newline in quoted atom");
      out.push_back(c);
    }
    return Token{Tok::name, out, 0, start};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text), tokens_(lexer_.run()) {}

  Program program() {
    Program p;
    while (peek().kind != Tok::eof) p.clauses.push_back(clause());
    return p;
  }

  Clause clause() {
    const std::size_t start = peek().offset;
    Term t = parse(1200).first;
    expect_end();
    try {
      return to_clause(t);
    } catch (const std::invalid_argument& e) {
      lexer_.fail(start, e.what());
    }
  }

  Term single_term() {
    Term t = parse(1200).first;
    if (peek().kind == Tok::end) ++idx_;
    if (peek().kind != Tok::eof) lexer_.fail(peek().offset, "unexpected trailing input");
    return t;
  }

 private:
  static Clause to_clause(const Term& t) {
    Clause c;
    if (const auto* comp = std::get_if<Compound>(&t.node); comp && comp->functor == ":-") {
      if (comp->args.size() != 2) throw std::invalid_argument("directives are not supported");
      c.head = head_atom(comp->args[0]);
      const Term& body = comp->args[1];
      if (const auto* b = std::get_if<Compound>(&body.node); b && b->functor == "," && b->args.size() == 2) {
        auto conj = std::get<Conjunction>(term_to_goal(body).node);
        c.body = std::move(conj.goals);
      } else {
        c.body.push_back(term_to_goal(body));
      }
      return c;
    }
    c.head = head_atom(t);
    return c;
  }

  static Atom head_atom(const Term& t) {
    Atom a = term_to_atom(t);
    if (a.predicate == "," || a.predicate == ";" || a.predicate == "\\+" || a.predicate == ":-" ||
        is_builtin(a.predicate, a.arity()))
      throw std::invalid_argument("cannot define control construct or builtin " + a.key());
    return a;
  }

  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(idx_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() { return tokens_[std::min(idx_++, tokens_.size() - 1)]; }

  bool is_punct(const Token& t, char c) const { return t.kind == Tok::punct && t.text.size() == 1 && t.text[0] == c; }

  void expect_punct(char c) {
    const Token& t = next();
    if (!is_punct(t, c)) {
      lexer_.fail(t.offset, std::string("expected '") + c + "'" + describe(t));
    }
  }

  void expect_end() {
    const Token& t = next();
    if (t.kind != Tok::end) lexer_.fail(t.offset, "expected '.' at end of clause" + describe(t));
  }

  static std::string describe(const Token& t) {
    if (t.kind == Tok::eof) return " but reached end of input";
    return " but found '" + t.text + "'";
  }

  bool can_start_term(const Token& t) const {
    switch (t.kind) {
      case Tok::integer:
      case Tok::var:
        return true;
      case Tok::name:
        return !infix_op(t.text) || prefix_op(t.text);
      case Tok::punct:
        return is_punct(t, '(') || is_punct(t, '[');
      default:
        return false;
    }
  }

  std::vector<Term> arg_list(char close) {
    std::vector<Term> args;
    args.push_back(parse(999).first);
    while (is_punct(peek(), ',')) {
      ++idx_;
      args.push_back(parse(999).first);
    }
    expect_punct(close);
    return args;
  }

  std::pair<Term, int> primary(int max_prec) {
    const Token& t = next();
    switch (t.kind) {
      case Tok::integer:
        return {Term::integer(t.value), 0};
      case Tok::var:
        return {Term::var(t.text), 0};
      case Tok::punct:
        if (t.text == "(") {
          Term inner = parse(1200).first;
          expect_punct(')');
          return {std::move(inner), 0};
        }
        if (t.text == "[") {
          if (is_punct(peek(), ']')) {
            ++idx_;
            return {Term::list({}), 0};
          }
          std::vector<Term> items;
          items.push_back(parse(999).first);
          while (is_punct(peek(), ',')) {
            ++idx_;
            items.push_back(parse(999).first);
          }
          std::shared_ptr<const Term> tail;
          if (is_punct(peek(), '|')) {
            ++idx_;
            tail = std::make_shared<const Term>(parse(999).first);
          }
          expect_punct(']');
          return {Term::list(std::move(items), std::move(tail)), 0};
        }
        lexer_.fail(t.offset, "unexpected '" + t.text + "'");
      case Tok::name: {
        const std::string name = t.text;
        const Token& after = peek();
        if (is_punct(after, '(') && !after.layout_before) {
          ++idx_;
          return {Term::compound(name, arg_list(')')), 0};
        }
        if (name == "-" && after.kind == Tok::integer && !after.layout_before) {
          ++idx_;
          if (after.value == std::numeric_limits<std::int64_t>::min()) lexer_.fail(after.offset, "integer overflow");
          return {Term::integer(-after.value), 0};
        }
        if (auto op = prefix_op(name); op && can_start_term(after)) {
          int prec = op->priority;
          int arg_max = right_max(*op);
          if (prec > max_prec) {
            prec = 999;
            arg_max = 999;
          }
          Term arg = parse(arg_max).first;
          return {Term::compound(name, {std::move(arg)}), prec};
        }
        return {Term::constant(name), 0};
      }
      case Tok::end:
        lexer_.fail(t.offset, "unexpected end of clause");
      case Tok::eof:
        lexer_.fail(t.offset, "unexpected end of input");
    }
    lexer_.fail(t.offset, "unexpected token");
  }

  std::pair<Term, int> parse(int max_prec) {
    auto [left, left_prec] = primary(max_prec);
    while (true) {
      const Token& t = peek();
      std::string name;
      if (is_punct(t, ',')) {
        name = ",";
      } else if (t.kind == Tok::name && infix_op(t.text)) {
        name = t.text;
      } else {
        break;
      }
      auto op = *infix_op(name);
      if (op.priority > max_prec || left_prec > left_max(op)) break;
      ++idx_;
      Term right = parse(right_max(op)).first;
      left = Term::compound(name, {std::move(left), std::move(right)});
      left_prec = op.priority;
    }
    return {std::move(left), left_prec};
  }

  Lexer lexer_;
  std::vector<Token> tokens_;
  std::size_t idx_ = 0;
};

}  // namespace

Program parse_program(std::string_view text) { return Parser(text).program(); }

Clause parse_clause(std::string_view text) {
  Program p = parse_program(text);
  if (p.clauses.size() != 1)
    throw SyntaxError(0, 1, 1, "expected exactly one clause, found " + std::to_string(p.clauses.size()));
  return std::move(p.clauses.front());
}

Term parse_term(std::string_view text) { return Parser(text).single_term(); }

Atom parse_atom(std::string_view text) {
  Term t = parse_term(text);
  try {
    return term_to_atom(t);
  } catch (const std::invalid_argument& e) {
    throw SyntaxError(0, 1, 1, e.what());
  }
}

}  // namespace slr
