#include <cctype>
#include <sstream>

#include "operators.hpp"
#include "slr/logic.hpp"

namespace slr {

namespace {

using detail::infix_op;
using detail::left_max;
using detail::prefix_op;
using detail::right_max;

bool is_plain_name(const std::string& s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

bool is_symbol_name(const std::string& s) {
  if (s.empty()) return false;
  if (s == "!" || s == ";") return true;
  for (char c : s)
    if (std::string_view("+-*/\\^<>=~:.?@#&$").find(c) == std::string_view::npos) return false;
  return true;
}

std::string atom_text(const std::string& name) {
  if (is_plain_name(name) || is_symbol_name(name)) return name;
  std::string out = "'";
  for (char c : name) {
    if (c == '\'' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

void write(std::ostream& os, const Term& t, int max_prec);

void write_args(std::ostream& os, const std::vector<Term>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) os << ", ";
    write(os, args[i], 999);
  }
}

void write(std::ostream& os, const Term& t, int max_prec) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Constant>) {
          const bool op_atom = infix_op(n.name) || prefix_op(n.name);
          if (op_atom && n.name != "!" && max_prec < 1200) {
            os << '(' << atom_text(n.name) << ')';
          } else {
            os << atom_text(n.name);
          }
        } else if constexpr (std::is_same_v<N, Variable>) {
          os << n.name;
        } else if constexpr (std::is_same_v<N, IntLiteral>) {
          os << n.value;
        } else if constexpr (std::is_same_v<N, ListTerm>) {
          os << '[';
          write_args(os, n.items);
          if (n.tail) {
            os << '|';
            write(os, *n.tail, 999);
          }
          os << ']';
        } else {
          if (n.args.size() == 2) {
            if (auto op = infix_op(n.functor)) {
              const bool parens = op->priority > max_prec;
              if (parens) os << '(';
              write(os, n.args[0], left_max(*op));
              if (n.functor == ",") {
                os << ", ";
              } else {
                os << ' ' << n.functor << ' ';
              }
              write(os, n.args[1], right_max(*op));
              if (parens) os << ')';
              return;
            }
          }
          if (n.args.size() == 1 && n.functor == "\\+") {
            auto op = *prefix_op(n.functor);
            const bool parens = op.priority > max_prec;
            if (parens) os << '(';
            os << "\\+ ";
            write(os, n.args[0], right_max(op));
            if (parens) os << ')';
            return;
          }
          os << atom_text(n.functor) << '(';
          write_args(os, n.args);
          os << ')';
        }
      },
      t.node);
}

}  // namespace

std::string render(const Term& term) {
  std::ostringstream os;
  write(os, term, 999);
  return os.str();
}

std::string render(const Atom& atom) { return render(atom_to_term(atom)); }

std::string render(const BodyGoal& goal) { return render(goal_to_term(goal)); }

std::string render(const Clause& clause) {
  std::ostringstream os;
  write(os, atom_to_term(clause.head), 999);
  if (!clause.body.empty()) {
    os << " :- ";
    for (std::size_t i = 0; i < clause.body.size(); ++i) {
      if (i) os << ", ";
      write(os, goal_to_term(clause.body[i]), 999);
    }
  }
  os << '.';
  return os.str();
}

std::string render(const Program& program) {
  std::string out;
  for (const auto& c : program.clauses) {
    out += render(c);
    out += '\n';
  }
  return out;
}

}  // namespace slr
