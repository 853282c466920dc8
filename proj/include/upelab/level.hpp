#pragma once

// Universe-level algebra: terms built from 0, successor and binary join over
// level variables, their canonical forms, semantic equality, valuations and
// substitutions. Everything here is an immutable value; sharing is internal.

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "upelab/errors.hpp"

namespace upelab {

// Nonnegative ids are interned in a VarPool; negative ids are scoped variables
// created internally while opening binders and never reach user-facing output.
using LevelVar = std::int32_t;

// Interning table mapping human-readable names to dense ids. The id order is
// the fixed total order used whenever deterministic iteration is needed.
class VarPool {
 public:
  LevelVar intern(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    LevelVar id = static_cast<LevelVar>(names_.size());
    names_.push_back(name);
    ids_.emplace(name, id);
    return id;
  }
  bool contains(const std::string& name) const { return ids_.count(name) != 0; }
  std::optional<LevelVar> lookup(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& name(LevelVar v) const {
    assert(v >= 0 && static_cast<size_t>(v) < names_.size());
    return names_[static_cast<size_t>(v)];
  }
  // Display for any id, including scoped (negative) ones.
  std::string display(LevelVar v) const {
    if (v >= 0 && static_cast<size_t>(v) < names_.size()) return names_[static_cast<size_t>(v)];
    return "#" + std::to_string(-static_cast<long long>(v));
  }
  size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, LevelVar> ids_;
};

// Counter-based fresh variable source. Each generator owns its own counter
// and stamps a fixed prefix, so two generators with distinct prefixes can
// never produce the same name. Passed explicitly wherever freshness is needed.
class FreshGen {
 public:
  FreshGen(VarPool& pool, std::string prefix) : pool_(&pool), prefix_(std::move(prefix)) {}
  LevelVar fresh() { return pool_->intern(prefix_ + std::to_string(++counter_)); }
  VarPool& pool() const { return *pool_; }
  const std::string& prefix() const { return prefix_; }

 private:
  VarPool* pool_;
  std::string prefix_;
  int counter_ = 0;
};

// A level expression. Zero/Succ/Max mirror the grammar; Var is a free
// variable; BVar is a de Bruijn index used only inside binder bodies stored
// by the kernel (the algebra below requires BVar-free input).
class Level {
 public:
  enum class Kind : unsigned char { Zero, Var, BVar, Succ, Max };

  Level() : n_(zero_node()) {}

  static Level zero() { return Level(zero_node()); }
  static Level var(LevelVar v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Var;
    n->var = v;
    return Level(std::move(n));
  }
  static Level bvar(int index) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::BVar;
    n->var = index;
    return Level(std::move(n));
  }
  static Level succ(Level l) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Succ;
    n->a = std::move(l.n_);
    return Level(std::move(n));
  }
  static Level max(Level l, Level r) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Max;
    n->a = std::move(l.n_);
    n->b = std::move(r.n_);
    return Level(std::move(n));
  }
  static Level constant(unsigned k) { return plus(k, zero()); }
  static Level plus(unsigned k, Level l) {
    Level out = std::move(l);
    for (unsigned i = 0; i < k; ++i) out = succ(std::move(out));
    return out;
  }
  // Left-associated join of a nonempty list; empty list denotes 0.
  static Level join(const std::vector<Level>& ls) {
    if (ls.empty()) return zero();
    Level out = ls.front();
    for (size_t i = 1; i < ls.size(); ++i) out = max(out, ls[i]);
    return out;
  }

  Kind kind() const { return n_->kind; }
  LevelVar var_id() const {
    assert(kind() == Kind::Var);
    return n_->var;
  }
  int bvar_index() const {
    assert(kind() == Kind::BVar);
    return static_cast<int>(n_->var);
  }
  Level arg() const {
    assert(kind() == Kind::Succ);
    return Level(n_->a);
  }
  Level left() const {
    assert(kind() == Kind::Max);
    return Level(n_->a);
  }
  Level right() const {
    assert(kind() == Kind::Max);
    return Level(n_->b);
  }
  bool same_node(const Level& o) const { return n_ == o.n_; }

 private:
  struct Node {
    Kind kind = Kind::Zero;
    LevelVar var = 0;  // Var id or BVar index
    std::shared_ptr<const Node> a, b;
  };
  static const std::shared_ptr<const Node>& zero_node() {
    static const std::shared_ptr<const Node> z = std::make_shared<Node>();
    return z;
  }
  explicit Level(std::shared_ptr<const Node> n) : n_(std::move(n)) {}

  std::shared_ptr<const Node> n_;
};

// Total order on level syntax; the basis for set semantics on equations.
inline int level_compare(const Level& a, const Level& b) {
  if (a.same_node(b)) return 0;
  auto ka = static_cast<int>(a.kind()), kb = static_cast<int>(b.kind());
  if (ka != kb) return ka < kb ? -1 : 1;
  switch (a.kind()) {
    case Level::Kind::Zero:
      return 0;
    case Level::Kind::Var:
      return a.var_id() < b.var_id() ? -1 : (a.var_id() == b.var_id() ? 0 : 1);
    case Level::Kind::BVar:
      return a.bvar_index() < b.bvar_index() ? -1 : (a.bvar_index() == b.bvar_index() ? 0 : 1);
    case Level::Kind::Succ:
      return level_compare(a.arg(), b.arg());
    case Level::Kind::Max: {
      int c = level_compare(a.left(), b.left());
      return c != 0 ? c : level_compare(a.right(), b.right());
    }
  }
  return 0;
}

inline bool level_struct_equal(const Level& a, const Level& b) { return level_compare(a, b) == 0; }

inline bool level_locally_closed(const Level& l) {
  switch (l.kind()) {
    case Level::Kind::BVar:
      return false;
    case Level::Kind::Succ:
      return level_locally_closed(l.arg());
    case Level::Kind::Max:
      return level_locally_closed(l.left()) && level_locally_closed(l.right());
    default:
      return true;
  }
}

inline void level_free_vars(const Level& l, std::set<LevelVar>& out) {
  switch (l.kind()) {
    case Level::Kind::Var:
      out.insert(l.var_id());
      break;
    case Level::Kind::Succ:
      level_free_vars(l.arg(), out);
      break;
    case Level::Kind::Max:
      level_free_vars(l.left(), out);
      level_free_vars(l.right(), out);
      break;
    default:
      break;
  }
}

inline std::set<LevelVar> level_free_vars(const Level& l) {
  std::set<LevelVar> out;
  level_free_vars(l, out);
  return out;
}

// Total map from variables to naturals; unmentioned variables read as 0.
class Valuation {
 public:
  Valuation() = default;
  explicit Valuation(std::map<LevelVar, unsigned> m) : m_(std::move(m)) {}
  unsigned at(LevelVar v) const {
    auto it = m_.find(v);
    return it == m_.end() ? 0u : it->second;
  }
  void set(LevelVar v, unsigned n) { m_[v] = n; }
  const std::map<LevelVar, unsigned>& entries() const { return m_; }

 private:
  std::map<LevelVar, unsigned> m_;
};

// Numeric meaning of a level under a valuation: 0/S/join act as 0/+1/max.
inline unsigned interpret(const Level& l, const Valuation& phi) {
  switch (l.kind()) {
    case Level::Kind::Zero:
      return 0;
    case Level::Kind::Var:
      return phi.at(l.var_id());
    case Level::Kind::Succ:
      return interpret(l.arg(), phi) + 1;
    case Level::Kind::Max:
      return std::max(interpret(l.left(), phi), interpret(l.right(), phi));
    case Level::Kind::BVar:
      throw Error("interpret: bound level variable escaped its binder");
  }
  return 0;  // unreachable
}

// Canonical form `p ⊔ n1+v1 ⊔ ... ⊔ nm+vm`: a constant coefficient plus one
// coefficient per variable, every variable coefficient bounded by the
// constant one. Absent variables behave as coefficient minus-infinity.
// Unique per equivalence class, so == decides semantic equality.
struct CanonicalLevel {
  unsigned const_coeff = 0;
  std::map<LevelVar, unsigned> var_coeffs;

  bool operator==(const CanonicalLevel& o) const {
    return const_coeff == o.const_coeff && var_coeffs == o.var_coeffs;
  }
  bool operator!=(const CanonicalLevel& o) const { return !(*this == o); }
  bool well_formed() const {
    for (const auto& [v, n] : var_coeffs)
      if (n > const_coeff) return false;
    return true;
  }
};

namespace detail {
inline void canonicalize_into(const Level& l, unsigned depth, CanonicalLevel& acc) {
  switch (l.kind()) {
    case Level::Kind::Zero:
      acc.const_coeff = std::max(acc.const_coeff, depth);
      break;
    case Level::Kind::Var: {
      auto [it, inserted] = acc.var_coeffs.emplace(l.var_id(), depth);
      if (!inserted) it->second = std::max(it->second, depth);
      // A variable is at least 0, so its occurrence also raises the constant.
      acc.const_coeff = std::max(acc.const_coeff, depth);
      break;
    }
    case Level::Kind::Succ:
      canonicalize_into(l.arg(), depth + 1, acc);
      break;
    case Level::Kind::Max:
      canonicalize_into(l.left(), depth, acc);
      canonicalize_into(l.right(), depth, acc);
      break;
    case Level::Kind::BVar:
      throw Error("canonicalize: bound level variable escaped its binder");
  }
}
}  // namespace detail

// Single linear-time fold: each leaf contributes its successor depth.
inline CanonicalLevel canonicalize(const Level& l) {
  CanonicalLevel acc;
  detail::canonicalize_into(l, 0, acc);
  return acc;
}

// Tag type for addressing the constant slot of a canonical form.
struct ConstSlot {};
inline constexpr ConstSlot kConstSlot{};

// Coefficient lookup: absent variables are reported as nullopt (minus
// infinity); the constant slot always holds a number.
inline std::optional<unsigned> coeff(const CanonicalLevel& c, LevelVar v) {
  auto it = c.var_coeffs.find(v);
  if (it == c.var_coeffs.end()) return std::nullopt;
  return it->second;
}
inline unsigned coeff(const CanonicalLevel& c, ConstSlot) { return c.const_coeff; }

// Rebuild the canonical syntax `p ⊔ n1+v1 ⊔ ...` with variables in id order.
inline Level render(const CanonicalLevel& c) {
  Level out = Level::constant(c.const_coeff);
  for (const auto& [v, n] : c.var_coeffs) out = Level::max(out, Level::plus(n, Level::var(v)));
  return out;
}

// Semantic equality: two levels agree under every valuation exactly when
// their canonical forms coincide.
inline bool levels_equal(const Level& a, const Level& b) {
  return canonicalize(a) == canonicalize(b);
}

// Finite map from level variables to levels; application is simultaneous.
class LevelSubstitution {
 public:
  LevelSubstitution() = default;
  explicit LevelSubstitution(std::map<LevelVar, Level> m) : m_(std::move(m)) {}

  bool empty() const { return m_.empty(); }
  size_t size() const { return m_.size(); }
  void set(LevelVar v, Level l) { m_[v] = std::move(l); }
  std::optional<Level> lookup(LevelVar v) const {
    auto it = m_.find(v);
    if (it == m_.end()) return std::nullopt;
    return it->second;
  }
  const std::map<LevelVar, Level>& entries() const { return m_; }
  std::set<LevelVar> domain() const {
    std::set<LevelVar> out;
    for (const auto& [v, _] : m_) out.insert(v);
    return out;
  }
  std::set<LevelVar> value_range_vars() const {
    std::set<LevelVar> out;
    for (const auto& [_, l] : m_) level_free_vars(l, out);
    return out;
  }

  Level apply(const Level& l) const {
    switch (l.kind()) {
      case Level::Kind::Var: {
        auto it = m_.find(l.var_id());
        return it == m_.end() ? l : it->second;
      }
      case Level::Kind::Succ:
        return Level::succ(apply(l.arg()));
      case Level::Kind::Max:
        return Level::max(apply(l.left()), apply(l.right()));
      default:
        return l;
    }
  }

 private:
  std::map<LevelVar, Level> m_;
};

inline Level subst_level(const Level& l, const LevelSubstitution& theta) { return theta.apply(l); }

// A substitution is idempotent when applying it twice equals applying it
// once, up to semantic equality; it then never needs iterating.
inline bool is_idempotent(const LevelSubstitution& theta) {
  for (const auto& [v, l] : theta.entries()) {
    (void)v;
    if (!levels_equal(theta.apply(l), l)) return false;
  }
  return true;
}

// ---- textual syntax ----
//
//   level := sum ('⊔' sum)*           left-associative join
//   sum   := NAT '+' atom | atom
//   atom  := NAT | ident | 'S' atom | '(' level ')'
//
// Decimal naturals abbreviate successor towers over 0. Printing uses the
// 'n+' sugar and parenthesizes so that parsing reproduces the exact tree.

inline std::string level_to_string(const Level& l, const VarPool& pool) {
  auto atom_like = [](const Level& x) {
    return x.kind() == Level::Kind::Var || x.kind() == Level::Kind::BVar ||
           x.kind() == Level::Kind::Zero;
  };
  switch (l.kind()) {
    case Level::Kind::Zero:
      return "0";
    case Level::Kind::Var:
      return pool.display(l.var_id());
    case Level::Kind::BVar:
      return "^" + std::to_string(l.bvar_index());
    case Level::Kind::Succ: {
      unsigned n = 0;
      Level base = l;
      while (base.kind() == Level::Kind::Succ) {
        ++n;
        base = base.arg();
      }
      if (base.kind() == Level::Kind::Zero) return std::to_string(n);
      std::string inner = level_to_string(base, pool);
      if (!atom_like(base)) inner = "(" + inner + ")";
      return std::to_string(n) + "+" + inner;
    }
    case Level::Kind::Max: {
      // Left-associated chains print flat; a join on the right needs parens.
      std::string lhs = level_to_string(l.left(), pool);
      std::string rhs = level_to_string(l.right(), pool);
      if (l.right().kind() == Level::Kind::Max) rhs = "(" + rhs + ")";
      return lhs + " \xE2\x8A\x94 " + rhs;
    }
  }
  return "";  // unreachable
}

namespace detail {

struct LevelCursor {
  const std::string& s;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n' || s[pos] == '\r'))
      ++pos;
  }
  bool at_end() {
    skip_ws();
    return pos >= s.size();
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(msg, 1, static_cast<int>(pos) + 1);
  }
  bool try_word(const char* w) {
    skip_ws();
    size_t n = std::char_traits<char>::length(w);
    if (s.compare(pos, n, w) == 0) {
      pos += n;
      return true;
    }
    return false;
  }
  static bool ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool ident_char(char c) {
    return ident_start(c) || (c >= '0' && c <= '9') || c == '\'';
  }
};

inline Level parse_level_expr(LevelCursor& cur, VarPool& pool);

inline Level parse_level_atom(LevelCursor& cur, VarPool& pool) {
  cur.skip_ws();
  if (cur.pos >= cur.s.size()) cur.fail("expected level");
  char c = cur.s[cur.pos];
  if (c == '(') {
    ++cur.pos;
    Level inner = parse_level_expr(cur, pool);
    cur.skip_ws();
    if (cur.pos >= cur.s.size() || cur.s[cur.pos] != ')') cur.fail("expected ')'");
    ++cur.pos;
    return inner;
  }
  if (c >= '0' && c <= '9') {
    unsigned n = 0;
    while (cur.pos < cur.s.size() && cur.s[cur.pos] >= '0' && cur.s[cur.pos] <= '9')
      n = n * 10 + static_cast<unsigned>(cur.s[cur.pos++] - '0');
    return Level::constant(n);
  }
  if (LevelCursor::ident_start(c)) {
    size_t start = cur.pos;
    while (cur.pos < cur.s.size() && LevelCursor::ident_char(cur.s[cur.pos])) ++cur.pos;
    std::string name = cur.s.substr(start, cur.pos - start);
    if (name == "S") return Level::succ(parse_level_atom(cur, pool));
    return Level::var(pool.intern(name));
  }
  cur.fail("unexpected character in level");
}

inline Level parse_level_sum(LevelCursor& cur, VarPool& pool) {
  cur.skip_ws();
  // Lookahead for the `n + l` sugar: a natural followed by '+'.
  if (cur.pos < cur.s.size() && cur.s[cur.pos] >= '0' && cur.s[cur.pos] <= '9') {
    size_t save = cur.pos;
    unsigned n = 0;
    while (cur.pos < cur.s.size() && cur.s[cur.pos] >= '0' && cur.s[cur.pos] <= '9')
      n = n * 10 + static_cast<unsigned>(cur.s[cur.pos++] - '0');
    cur.skip_ws();
    if (cur.pos < cur.s.size() && cur.s[cur.pos] == '+') {
      ++cur.pos;
      return Level::plus(n, parse_level_atom(cur, pool));
    }
    cur.pos = save;
  }
  return parse_level_atom(cur, pool);
}

inline Level parse_level_expr(LevelCursor& cur, VarPool& pool) {
  Level out = parse_level_sum(cur, pool);
  for (;;) {
    cur.skip_ws();
    if (cur.try_word("\xE2\x8A\x94")) {
      out = Level::max(out, parse_level_sum(cur, pool));
    } else {
      return out;
    }
  }
}

}  // namespace detail

inline Level parse_level(const std::string& text, VarPool& pool) {
  detail::LevelCursor cur{text};
  Level out = detail::parse_level_expr(cur, pool);
  if (!cur.at_end()) cur.fail("trailing input after level");
  return out;
}

}  // namespace upelab
