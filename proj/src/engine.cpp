#include "slr/engine.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <unordered_map>

namespace slr {

namespace {

// Heap cells. A structure is a functor cell followed by `arity` argument
// cells. A ref cell whose value is its own index is an unbound variable;
// any other ref points at another cell.
enum class Tag : std::uint8_t { ref, atom, integer, functor };

struct Cell {
  Tag tag = Tag::ref;
  std::uint32_t arity = 0;
  std::int64_t value = 0;
};

// Relocatable term: ref values are offsets into `cells`.
struct Segment {
  std::vector<Cell> cells;
  std::uint32_t root = 0;
};

// Sub-searches recurse on the C++ stack; this bounds that recursion.
constexpr unsigned kMaxNesting = 2000;
constexpr std::size_t kMaxHeapCells = std::size_t{1} << 25;
// Bytes reserved by the heap, trail, frame and choicepoint stacks together.
constexpr std::size_t kMaxSearchBytes = std::size_t{128} << 20;

struct Abort {
  std::string reason;
};

class Symbols {
 public:
  std::uint32_t intern(const std::string& name) {
    auto [it, inserted] = ids_.try_emplace(name, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
  }
  const std::string& name(std::int64_t id) const { return names_[static_cast<std::size_t>(id)]; }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> names_;
};

std::uint64_t pred_key(std::int64_t sym, std::size_t arity) {
  return (static_cast<std::uint64_t>(sym) << 32) | static_cast<std::uint64_t>(arity);
}

enum class Op {
  conj, disj, neg, succeed, findall, forall, unify, not_unify, identical, is,
  arith_eq, arith_ne, lt, gt, ge, le, length, sort, member, max_list, min_list,
};

using FirstArgKey = std::pair<int, std::int64_t>;

struct CompiledClause {
  bool ground_fact = false;
  std::uint32_t static_head = 0;  // ground facts live in the static heap area
  Segment seg;
  std::uint32_t head = 0;
  std::int64_t body = -1;
};

struct Predicate {
  std::vector<std::uint32_t> all;
  std::vector<std::uint32_t> wild;  // first head argument not atomic
  std::map<FirstArgKey, std::vector<std::uint32_t>> by_first;
};

struct Frame {
  std::uint32_t goal;
  std::uint32_t depth;
  std::int32_t next;
};

struct ChoicePoint {
  bool alternative;
  std::uint32_t goal;
  std::uint32_t depth;
  std::int32_t cont;
  const std::vector<std::uint32_t>* cands;
  std::uint32_t next;
  std::size_t heap_mark, trail_mark, frames_mark;
};

struct Marks {
  std::size_t heap, trail, frames;
};

}  // namespace

struct Engine::Impl {
  Symbols syms;
  std::unordered_map<std::uint64_t, Op> ops;
  std::unordered_map<std::uint64_t, Predicate> preds;
  std::vector<CompiledClause> clauses;

  std::int64_t sym_nil, sym_dot, sym_member, sym_plus, sym_minus, sym_times, sym_intdiv, sym_div,
      sym_mod, sym_abs, sym_min, sym_max;

  std::vector<Cell> heap;
  std::size_t static_size = 0;
  std::vector<std::uint32_t> trail;
  std::vector<Frame> frames;
  std::vector<ChoicePoint> cps;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> ustack;

  std::uint64_t steps = 0, polls = 0, max_steps = 0, max_depth = 0;
  std::chrono::steady_clock::time_point deadline;
  unsigned nesting = 0;

  explicit Impl(const Program& program);

  // ---- building terms -------------------------------------------------
  using VarMap = std::unordered_map<std::string, std::uint32_t>;

  Cell build_cell(const Term& t, Segment& s, VarMap& vars) {
    return std::visit(
        [&](const auto& n) -> Cell {
          using N = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<N, Constant>) {
            return Cell{Tag::atom, 0, syms.intern(n.name)};
          } else if constexpr (std::is_same_v<N, IntLiteral>) {
            return Cell{Tag::integer, 0, n.value};
          } else if constexpr (std::is_same_v<N, Variable>) {
            if (n.name != "_") {
              if (auto it = vars.find(n.name); it != vars.end()) return Cell{Tag::ref, 0, it->second};
            }
            const auto pos = static_cast<std::uint32_t>(s.cells.size());
            s.cells.push_back(Cell{Tag::ref, 0, pos});
            if (n.name != "_") vars.emplace(n.name, pos);
            return Cell{Tag::ref, 0, pos};
          } else if constexpr (std::is_same_v<N, Compound>) {
            const auto h = s.cells.size();
            s.cells.push_back(Cell{Tag::functor, static_cast<std::uint32_t>(n.args.size()), syms.intern(n.functor)});
            s.cells.resize(h + 1 + n.args.size());
            for (std::size_t i = 0; i < n.args.size(); ++i) {
              Cell c = build_cell(n.args[i], s, vars);
              s.cells[h + 1 + i] = c;
            }
            return Cell{Tag::ref, 0, static_cast<std::int64_t>(h)};
          } else {
            Cell tail = n.tail ? build_cell(*n.tail, s, vars) : Cell{Tag::atom, 0, sym_nil};
            for (auto it = n.items.rbegin(); it != n.items.rend(); ++it) {
              const auto h = s.cells.size();
              s.cells.push_back(Cell{Tag::functor, 2, sym_dot});
              s.cells.resize(h + 3);
              Cell head = build_cell(*it, s, vars);
              s.cells[h + 1] = head;
              s.cells[h + 2] = tail;
              tail = Cell{Tag::ref, 0, static_cast<std::int64_t>(h)};
            }
            return tail;
          }
        },
        t.node);
  }

  std::uint32_t add_root(Segment& s, Cell c) {
    s.cells.push_back(c);
    return static_cast<std::uint32_t>(s.cells.size() - 1);
  }

  std::uint32_t implant(const Segment& s) {
    const auto base = heap.size();
    if (base + s.cells.size() > kMaxHeapCells) throw Abort{"memory"};
    for (Cell c : s.cells) {
      if (c.tag == Tag::ref) c.value += static_cast<std::int64_t>(base);
      heap.push_back(c);
    }
    return static_cast<std::uint32_t>(base + s.root);
  }

  std::uint32_t push_cell(Cell c) {
    if (heap.size() >= kMaxHeapCells) throw Abort{"memory"};
    heap.push_back(c);
    return static_cast<std::uint32_t>(heap.size() - 1);
  }

  std::uint32_t fresh_var() {
    const auto i = static_cast<std::int64_t>(heap.size());
    return push_cell(Cell{Tag::ref, 0, i});
  }

  std::uint32_t make_list(const std::vector<std::uint32_t>& items, std::uint32_t tail) {
    for (auto it = items.rbegin(); it != items.rend(); ++it) {
      const auto h = push_cell(Cell{Tag::functor, 2, sym_dot});
      push_cell(Cell{Tag::ref, 0, *it});
      push_cell(Cell{Tag::ref, 0, tail});
      tail = h;
    }
    return tail;
  }

  // ---- heap primitives ----------------------------------------------------
  std::uint32_t deref(std::uint32_t i) const {
    while (heap[i].tag == Tag::ref && heap[i].value != i) i = static_cast<std::uint32_t>(heap[i].value);
    return i;
  }

  bool unbound(std::uint32_t i) const { return heap[i].tag == Tag::ref; }  // i dereferenced

  bool is_atom(std::uint32_t i, std::int64_t sym) const {
    return heap[i].tag == Tag::atom && heap[i].value == sym;
  }

  bool is_cons(std::uint32_t i) const {
    return heap[i].tag == Tag::functor && heap[i].arity == 2 && heap[i].value == sym_dot;
  }

  void bind(std::uint32_t var, std::uint32_t target) {
    heap[var].value = target;
    trail.push_back(var);
  }

  bool unify(std::uint32_t a, std::uint32_t b) {
    ustack.clear();
    ustack.emplace_back(a, b);
    while (!ustack.empty()) {
      auto [x, y] = ustack.back();
      ustack.pop_back();
      x = deref(x);
      y = deref(y);
      if (x == y) continue;
      const Cell cx = heap[x];
      const Cell cy = heap[y];
      const bool vx = cx.tag == Tag::ref, vy = cy.tag == Tag::ref;
      if (vx && vy) {
        if (x < y) bind(y, x); else bind(x, y);
        continue;
      }
      if (vx) { bind(x, y); continue; }
      if (vy) { bind(y, x); continue; }
      if (cx.tag != cy.tag || cx.value != cy.value || cx.arity != cy.arity) return false;
      for (std::uint32_t i = 1; i <= cx.arity; ++i) ustack.emplace_back(x + i, y + i);
    }
    return true;
  }

  Marks mark() const { return Marks{heap.size(), trail.size(), frames.size()}; }

  void restore(std::size_t heap_mark, std::size_t trail_mark, std::size_t frames_mark) {
    while (trail.size() > trail_mark) {
      const auto v = trail.back();
      trail.pop_back();
      if (v < heap.size()) heap[v].value = v;
    }
    heap.resize(heap_mark);
    frames.resize(frames_mark);
  }
  void restore(const Marks& m) { restore(m.heap, m.trail, m.frames); }

  int compare(std::uint32_t a, std::uint32_t b) const {
    a = deref(a);
    b = deref(b);
    if (a == b) return 0;
    auto rank = [](Tag t) {
      switch (t) {
        case Tag::ref: return 0;
        case Tag::integer: return 1;
        case Tag::atom: return 2;
        default: return 3;
      }
    };
    const Cell ca = heap[a], cb = heap[b];
    if (rank(ca.tag) != rank(cb.tag)) return rank(ca.tag) < rank(cb.tag) ? -1 : 1;
    switch (ca.tag) {
      case Tag::ref: return a < b ? -1 : 1;
      case Tag::integer: return ca.value < cb.value ? -1 : (ca.value > cb.value ? 1 : 0);
      case Tag::atom: return syms.name(ca.value).compare(syms.name(cb.value)) < 0 ? -1 : (ca.value == cb.value ? 0 : 1);
      case Tag::functor: {
        if (ca.arity != cb.arity) return ca.arity < cb.arity ? -1 : 1;
        if (ca.value != cb.value) return syms.name(ca.value) < syms.name(cb.value) ? -1 : 1;
        for (std::uint32_t i = 1; i <= ca.arity; ++i)
          if (int c = compare(a + i, b + i); c != 0) return c;
        return 0;
      }
    }
    return 0;
  }

  // Copies a heap term into a relocatable segment (findall results).
  Cell extract_cell(std::uint32_t i, Segment& s, std::unordered_map<std::uint32_t, std::uint32_t>& vars) const {
    i = deref(i);
    const Cell c = heap[i];
    switch (c.tag) {
      case Tag::ref: {
        if (auto it = vars.find(i); it != vars.end()) return Cell{Tag::ref, 0, it->second};
        const auto pos = static_cast<std::uint32_t>(s.cells.size());
        s.cells.push_back(Cell{Tag::ref, 0, pos});
        vars.emplace(i, pos);
        return Cell{Tag::ref, 0, pos};
      }
      case Tag::functor: {
        const auto h = s.cells.size();
        s.cells.push_back(c);
        s.cells.resize(h + 1 + c.arity);
        for (std::uint32_t k = 1; k <= c.arity; ++k) {
          Cell arg = extract_cell(i + k, s, vars);
          s.cells[h + k] = arg;
        }
        return Cell{Tag::ref, 0, static_cast<std::int64_t>(h)};
      }
      default:
        return c;
    }
  }

  Segment extract(std::uint32_t i) const {
    Segment s;
    std::unordered_map<std::uint32_t, std::uint32_t> vars;
    Cell root = extract_cell(i, s, vars);
    s.cells.push_back(root);
    s.root = static_cast<std::uint32_t>(s.cells.size() - 1);
    return s;
  }

  Term to_term(std::uint32_t i) const {
    i = deref(i);
    const Cell c = heap[i];
    switch (c.tag) {
      case Tag::ref: return Term::var("_G" + std::to_string(i));
      case Tag::integer: return Term::integer(c.value);
      case Tag::atom: return c.value == sym_nil ? Term::list({}) : Term::constant(syms.name(c.value));
      case Tag::functor: break;
    }
    if (is_cons(i)) {
      std::vector<Term> items;
      while (is_cons(i)) {
        items.push_back(to_term(i + 1));
        i = deref(i + 2);
      }
      if (is_atom(i, sym_nil)) return Term::list(std::move(items));
      return Term::list(std::move(items), std::make_shared<const Term>(to_term(i)));
    }
    std::vector<Term> args;
    for (std::uint32_t k = 1; k <= c.arity; ++k) args.push_back(to_term(i + k));
    return Term::compound(syms.name(c.value), std::move(args));
  }

  // ---- limits ---------------------------------------------------------------
  void reset(const ResourceLimits& limits) {
    limits.validate();
    heap.resize(static_size);
    trail.clear();
    frames.clear();
    cps.clear();
    steps = polls = 0;
    nesting = 0;
    max_steps = limits.max_steps;
    max_depth = limits.max_depth;
    deadline = std::chrono::steady_clock::now() + limits.wall_timeout;
  }

  void check_clock() {
    if (std::chrono::steady_clock::now() > deadline) throw Abort{"timeout"};
    const std::size_t bytes = heap.capacity() * sizeof(Cell) + trail.capacity() * sizeof(std::uint32_t) +
                              frames.capacity() * sizeof(Frame) + cps.capacity() * sizeof(ChoicePoint) +
                              ustack.capacity() * sizeof(ustack[0]);
    if (bytes > kMaxSearchBytes) throw Abort{"memory"};
  }

  void tick() {
    if (++steps > max_steps) throw Abort{"steps"};
    if ((steps & 1023) == 0) check_clock();
  }

  void poll() {
    if ((++polls & 4095) == 0) check_clock();
  }

  // ---- arithmetic -------------------------------------------------------------
  std::int64_t eval(std::uint32_t i) {
    i = deref(i);
    const Cell c = heap[i];
    if (c.tag == Tag::integer) return c.value;
    if (c.tag == Tag::ref) throw Abort{"instantiation"};
    if (c.tag == Tag::atom) throw Abort{"type_error"};
    std::int64_t r = 0;
    auto overflow = [] { throw Abort{"evaluation_error"}; };
    if (c.arity == 1) {
      const std::int64_t x = eval(i + 1);
      if (c.value == sym_minus) {
        if (__builtin_sub_overflow(std::int64_t{0}, x, &r)) overflow();
        return r;
      }
      if (c.value == sym_abs) {
        if (x < 0 && __builtin_sub_overflow(std::int64_t{0}, x, &r)) overflow();
        return x < 0 ? r : x;
      }
      if (c.value == sym_plus) return x;
      throw Abort{"type_error"};
    }
    if (c.arity != 2) throw Abort{"type_error"};
    const std::int64_t x = eval(i + 1);
    const std::int64_t y = eval(i + 2);
    if (c.value == sym_plus) {
      if (__builtin_add_overflow(x, y, &r)) overflow();
    } else if (c.value == sym_minus) {
      if (__builtin_sub_overflow(x, y, &r)) overflow();
    } else if (c.value == sym_times) {
      if (__builtin_mul_overflow(x, y, &r)) overflow();
    } else if (c.value == sym_intdiv || c.value == sym_div) {
      if (y == 0 || (x == INT64_MIN && y == -1)) throw Abort{"evaluation_error"};
      r = x / y;
    } else if (c.value == sym_mod) {
      if (y == 0) throw Abort{"evaluation_error"};
      if (y == -1) return 0;
      r = x % y;
      if (r != 0 && ((r < 0) != (y < 0))) r += y;
    } else if (c.value == sym_min) {
      r = std::min(x, y);
    } else if (c.value == sym_max) {
      r = std::max(x, y);
    } else {
      throw Abort{"type_error"};
    }
    return r;
  }

  // ---- lists ------------------------------------------------------------------
  // Collects list elements; returns the dereferenced tail.
  std::uint32_t read_list(std::uint32_t l, std::vector<std::uint32_t>& items) const {
    l = deref(l);
    while (is_cons(l)) {
      items.push_back(l + 1);
      l = deref(l + 2);
    }
    return l;
  }

  // Proper list or an error: open lists are instantiation errors, other
  // tails are type errors.
  std::vector<std::uint32_t> proper_list(std::uint32_t l) const {
    std::vector<std::uint32_t> items;
    const auto tail = read_list(l, items);
    if (unbound(tail)) throw Abort{"instantiation"};
    if (!is_atom(tail, sym_nil)) throw Abort{"type_error"};
    return items;
  }

  std::int64_t int_element(std::uint32_t i) const {
    i = deref(i);
    if (unbound(i)) throw Abort{"instantiation"};
    if (heap[i].tag != Tag::integer) throw Abort{"type_error"};
    return heap[i].value;
  }

  // ---- search -------------------------------------------------------------------
  std::int32_t push_frame(std::uint32_t goal, std::uint32_t depth, std::int32_t next) {
    frames.push_back(Frame{goal, depth, next});
    return static_cast<std::int32_t>(frames.size() - 1);
  }

  void push_choice(bool alternative, std::uint32_t goal, std::uint32_t depth, std::int32_t cont,
                   const std::vector<std::uint32_t>* cands) {
    cps.push_back(ChoicePoint{alternative, goal, depth, cont, cands, 0, heap.size(), trail.size(), frames.size()});
  }

  bool try_clause(std::uint32_t goal, std::uint32_t ci, std::uint32_t depth, std::int32_t cont, std::int32_t& goals) {
    poll();
    const CompiledClause& cl = clauses[ci];
    if (cl.ground_fact) {
      if (!unify(goal, cl.static_head)) return false;
      goals = cont;
      return true;
    }
    const auto base = static_cast<std::uint32_t>(heap.size());
    implant(cl.seg);
    if (!unify(goal, base + cl.head)) return false;
    goals = cl.body < 0 ? cont : push_frame(base + static_cast<std::uint32_t>(cl.body), depth + 1, cont);
    return true;
  }

  bool backtrack(std::size_t cp_base, std::int32_t& goals) {
    while (cps.size() > cp_base) {
      const std::size_t top = cps.size() - 1;
      {
        const ChoicePoint& cp = cps[top];
        restore(cp.heap_mark, cp.trail_mark, cp.frames_mark);
        if (cp.alternative) {
          const ChoicePoint alt = cp;
          cps.pop_back();
          goals = push_frame(alt.goal, alt.depth, alt.cont);
          return true;
        }
      }
      while (true) {
        ChoicePoint& cp = cps[top];
        if (cp.next >= cp.cands->size()) {
          cps.pop_back();
          break;
        }
        const std::uint32_t ci = (*cp.cands)[cp.next++];
        const ChoicePoint snapshot = cp;
        const bool last = snapshot.next == snapshot.cands->size();
        if (last) cps.pop_back();
        if (try_clause(snapshot.goal, ci, snapshot.depth, snapshot.cont, goals)) return true;
        if (last) break;
        restore(snapshot.heap_mark, snapshot.trail_mark, snapshot.frames_mark);
      }
    }
    return false;
  }

  // Runs `goal` to exhaustion, calling on_solution for each proof; stops
  // early when it returns false. Returns true iff stopped early.
  bool solve(std::uint32_t goal, std::uint32_t depth, const std::function<bool()>& on_solution) {
    if (++nesting > kMaxNesting) throw Abort{"depth"};
    struct Guard {
      unsigned& n;
      ~Guard() { --n; }
    } guard{nesting};
    const std::size_t cp_base = cps.size();
    std::int32_t goals = push_frame(goal, depth, -1);
    while (true) {
      if (goals < 0) {
        if (!on_solution()) {
          cps.resize(cp_base);
          return true;
        }
        if (!backtrack(cp_base, goals)) return false;
        continue;
      }
      const Frame f = frames[static_cast<std::size_t>(goals)];
      goals = f.next;
      if (!step(f, goals) && !backtrack(cp_base, goals)) return false;
    }
  }

  bool provable(std::uint32_t goal, std::uint32_t depth) {
    const Marks m = mark();
    const bool found = solve(goal, depth, [] { return false; });
    restore(m);
    return found;
  }

  const std::vector<std::uint32_t>* candidates(const Predicate& p, std::uint32_t goal) const {
    if (p.by_first.empty() || heap[goal].tag != Tag::functor) return &p.all;
    const auto a = deref(goal + 1);
    FirstArgKey key;
    if (heap[a].tag == Tag::atom) {
      key = {0, heap[a].value};
    } else if (heap[a].tag == Tag::integer) {
      key = {1, heap[a].value};
    } else {
      return &p.all;
    }
    if (auto it = p.by_first.find(key); it != p.by_first.end()) return &it->second;
    return &p.wild;
  }

  bool step(const Frame& f, std::int32_t& goals) {
    tick();
    if (f.depth > max_depth) throw Abort{"depth"};
    const auto g = deref(f.goal);
    const Cell c = heap[g];
    if (c.tag == Tag::ref) throw Abort{"instantiation"};
    if (c.tag == Tag::integer) throw Abort{"type_error"};
    const std::uint32_t arity = c.tag == Tag::functor ? c.arity : 0;
    const std::uint64_t key = pred_key(c.value, arity);
    const std::uint32_t d = f.depth;
    const std::uint32_t a0 = g + 1, a1 = g + 2, a2 = g + 3;

    if (auto it = ops.find(key); it != ops.end()) {
      switch (it->second) {
        case Op::succeed:
          return true;
        case Op::conj:
          goals = push_frame(a1, d, goals);
          goals = push_frame(a0, d, goals);
          return true;
        case Op::disj:
          push_choice(true, a1, d, goals, nullptr);
          goals = push_frame(a0, d, goals);
          return true;
        case Op::neg:
          return !provable(a0, d + 1);
        case Op::findall: {
          std::vector<Segment> results;
          const Marks m = mark();
          solve(a1, d + 1, [&] {
            results.push_back(extract(a0));
            return true;
          });
          restore(m);
          std::vector<std::uint32_t> items;
          items.reserve(results.size());
          for (const auto& s : results) items.push_back(implant(s));
          const auto nil = push_cell(Cell{Tag::atom, 0, sym_nil});
          return unify(a2, make_list(items, nil));
        }
        case Op::forall: {
          bool violated = false;
          const Marks m = mark();
          solve(a0, d + 1, [&] {
            if (provable(a1, d + 1)) return true;
            violated = true;
            return false;
          });
          restore(m);
          return !violated;
        }
        case Op::unify:
          return unify(a0, a1);
        case Op::not_unify: {
          const Marks m = mark();
          const bool unified = unify(a0, a1);
          restore(m);
          return !unified;
        }
        case Op::identical:
          return compare(a0, a1) == 0;
        case Op::is: {
          const auto v = push_cell(Cell{Tag::integer, 0, eval(a1)});
          return unify(a0, v);
        }
        case Op::arith_eq: return eval(a0) == eval(a1);
        case Op::arith_ne: return eval(a0) != eval(a1);
        case Op::lt: return eval(a0) < eval(a1);
        case Op::gt: return eval(a0) > eval(a1);
        case Op::ge: return eval(a0) >= eval(a1);
        case Op::le: return eval(a0) <= eval(a1);
        case Op::length: return builtin_length(a0, a1);
        case Op::sort: {
          auto items = proper_list(a0);
          std::stable_sort(items.begin(), items.end(),
                           [&](std::uint32_t x, std::uint32_t y) { return compare(x, y) < 0; });
          items.erase(std::unique(items.begin(), items.end(),
                                  [&](std::uint32_t x, std::uint32_t y) { return compare(x, y) == 0; }),
                      items.end());
          const auto nil = push_cell(Cell{Tag::atom, 0, sym_nil});
          return unify(a1, make_list(items, nil));
        }
        case Op::member: {
          const auto l = deref(a1);
          if (unbound(l)) throw Abort{"instantiation"};
          if (!is_cons(l)) return false;
          const auto rest = deref(l + 2);
          if (is_cons(rest) || unbound(rest)) {
            const auto alt = push_cell(Cell{Tag::functor, 2, sym_member});
            push_cell(Cell{Tag::ref, 0, a0});
            push_cell(Cell{Tag::ref, 0, rest});
            push_choice(true, alt, d, goals, nullptr);
          }
          return unify(a0, l + 1);
        }
        case Op::max_list:
        case Op::min_list: {
          const auto items = proper_list(a0);
          if (items.empty()) return false;
          std::int64_t best = int_element(items[0]);
          for (std::size_t i = 1; i < items.size(); ++i) {
            const auto v = int_element(items[i]);
            best = it->second == Op::max_list ? std::max(best, v) : std::min(best, v);
          }
          const auto cell = push_cell(Cell{Tag::integer, 0, best});
          return unify(a1, cell);
        }
      }
    }

    auto pit = preds.find(key);
    if (pit == preds.end()) return false;
    const auto* cands = candidates(pit->second, g);
    if (cands->empty()) return false;
    if (cands->size() == 1) return try_clause(g, (*cands)[0], d, goals, goals);
    push_choice(false, g, d, goals, cands);
    return false;  // backtrack() tries the candidates in order
  }

  bool builtin_length(std::uint32_t list, std::uint32_t len) {
    std::vector<std::uint32_t> items;
    const auto tail = read_list(list, items);
    if (is_atom(tail, sym_nil)) {
      const auto n = push_cell(Cell{Tag::integer, 0, static_cast<std::int64_t>(items.size())});
      return unify(len, n);
    }
    if (!unbound(tail)) return false;
    const auto n = deref(len);
    if (unbound(n)) throw Abort{"instantiation"};
    if (heap[n].tag != Tag::integer) throw Abort{"type_error"};
    const std::int64_t want = heap[n].value;
    if (want < static_cast<std::int64_t>(items.size())) return false;
    const auto extra = static_cast<std::size_t>(want) - items.size();
    if (extra > kMaxHeapCells / 4) throw Abort{"memory"};
    std::vector<std::uint32_t> fresh;
    for (std::size_t i = 0; i < extra; ++i) fresh.push_back(fresh_var());
    const auto nil = push_cell(Cell{Tag::atom, 0, sym_nil});
    return unify(tail, make_list(fresh, nil));
  }

  // ---- queries ------------------------------------------------------------------
  EntailmentOutcome entails(const Atom& query, const ResourceLimits& limits) {
    if (!query.is_ground()) throw std::invalid_argument("query must be ground: " + render(query));
    reset(limits);
    try {
      Segment s;
      VarMap vars;
      s.root = add_root(s, build_cell(atom_to_term(query), s, vars));
      const auto root = implant(s);
      const bool found = solve(root, 0, [] { return false; });
      return found ? EntailmentOutcome::entailed() : EntailmentOutcome::not_entailed();
    } catch (const Abort& a) {
      return EntailmentOutcome::resource_exceeded(a.reason);
    }
  }

  std::vector<Substitution> solve_all(const BodyGoal& goal, const ResourceLimits& limits) {
    reset(limits);
    std::vector<Substitution> out;
    try {
      Segment s;
      VarMap vars;
      s.root = add_root(s, build_cell(goal_to_term(goal), s, vars));
      const auto base = static_cast<std::uint32_t>(heap.size());
      const auto root = implant(s);
      solve(root, 0, [&] {
        Substitution sub;
        for (const auto& [name, pos] : vars) sub.emplace(name, to_term(base + pos));
        out.push_back(std::move(sub));
        return true;
      });
    } catch (const Abort& a) {
      throw ResourceExceeded(a.reason);
    }
    return out;
  }
};

Engine::Impl::Impl(const Program& program) {
  sym_nil = syms.intern("[]");
  sym_dot = syms.intern(".");
  sym_member = syms.intern("member");
  sym_plus = syms.intern("+");
  sym_minus = syms.intern("-");
  sym_times = syms.intern("*");
  sym_intdiv = syms.intern("//");
  sym_div = syms.intern("/");
  sym_mod = syms.intern("mod");
  sym_abs = syms.intern("abs");
  sym_min = syms.intern("min");
  sym_max = syms.intern("max");

  const std::pair<const char*, std::pair<std::size_t, Op>> table[] = {
      {",", {2, Op::conj}},        {";", {2, Op::disj}},         {"\\+", {1, Op::neg}},
      {"true", {0, Op::succeed}},  {"!", {0, Op::succeed}},      {"findall", {3, Op::findall}},
      {"forall", {2, Op::forall}}, {"=", {2, Op::unify}},        {"\\=", {2, Op::not_unify}},
      {"==", {2, Op::identical}},  {"is", {2, Op::is}},          {"=:=", {2, Op::arith_eq}},
      {"=\\=", {2, Op::arith_ne}}, {"<", {2, Op::lt}},           {">", {2, Op::gt}},
      {">=", {2, Op::ge}},         {"=<", {2, Op::le}},          {"length", {2, Op::length}},
      {"sort", {2, Op::sort}},     {"member", {2, Op::member}},  {"max_list", {2, Op::max_list}},
      {"min_list", {2, Op::min_list}},
  };
  for (const auto& [name, spec] : table) ops.emplace(pred_key(syms.intern(name), spec.first), spec.second);

  std::map<std::uint64_t, std::map<FirstArgKey, std::vector<std::uint32_t>>> keyed;
  for (const Clause& clause : program.clauses) {
    const auto ci = static_cast<std::uint32_t>(clauses.size());
    CompiledClause cc;
    VarMap vars;
    cc.head = add_root(cc.seg, build_cell(atom_to_term(clause.head), cc.seg, vars));
    if (!clause.body.empty()) cc.body = add_root(cc.seg, build_cell(body_to_term(clause.body), cc.seg, vars));
    cc.seg.root = cc.head;
    if (clause.body.empty() && clause.head.is_ground()) {
      cc.ground_fact = true;
      cc.static_head = implant(cc.seg);
      cc.seg = Segment{};
    }
    clauses.push_back(std::move(cc));

    const auto key = pred_key(syms.intern(clause.head.predicate), clause.head.args.size());
    Predicate& p = preds[key];
    p.all.push_back(ci);
    bool atomic_first = false;
    if (!clause.head.args.empty()) {
      const Term& first = clause.head.args[0];
      if (const auto* k = std::get_if<Constant>(&first.node)) {
        keyed[key][{0, syms.intern(k->name)}].push_back(ci);
        atomic_first = true;
      } else if (const auto* n = std::get_if<IntLiteral>(&first.node)) {
        keyed[key][{1, n->value}].push_back(ci);
        atomic_first = true;
      } else if (const auto* l = std::get_if<ListTerm>(&first.node); l && l->items.empty() && !l->tail) {
        keyed[key][{0, sym_nil}].push_back(ci);
        atomic_first = true;
      }
    }
    if (!atomic_first) p.wild.push_back(ci);
  }
  for (auto& [key, groups] : keyed) {
    Predicate& p = preds[key];
    for (auto& [first, list] : groups) {
      std::vector<std::uint32_t> merged;
      std::merge(list.begin(), list.end(), p.wild.begin(), p.wild.end(), std::back_inserter(merged));
      p.by_first.emplace(first, std::move(merged));
    }
  }
  static_size = heap.size();
}

void ResourceLimits::validate() const {
  if (max_depth == 0 || max_steps == 0 || wall_timeout.count() <= 0)
    throw std::invalid_argument("resource limits must be strictly positive");
}

std::string to_string(const EntailmentOutcome& outcome) {
  switch (outcome.kind()) {
    case EntailmentOutcome::Kind::entailed: return "Entailed";
    case EntailmentOutcome::Kind::not_entailed: return "NotEntailed";
    case EntailmentOutcome::Kind::resource_exceeded: return "ResourceExceeded(" + outcome.reason() + ")";
  }
  return {};
}

Engine::Engine(const Program& program) : impl_(std::make_unique<Impl>(program)) {}
Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

EntailmentOutcome Engine::entails(const Atom& query, const ResourceLimits& limits) {
  return impl_->entails(query, limits);
}

std::vector<Substitution> Engine::solve_all(const BodyGoal& goal, const ResourceLimits& limits) {
  return impl_->solve_all(goal, limits);
}

EntailmentOutcome entails(const Program& program, const Atom& query, const ResourceLimits& limits) {
  return Engine(program).entails(query, limits);
}

std::vector<Substitution> solve_all(const Program& program, const BodyGoal& goal, const ResourceLimits& limits) {
  return Engine(program).solve_all(goal, limits);
}

}  // namespace slr
