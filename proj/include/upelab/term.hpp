#pragma once

// Term syntax for a λΠ calculus with a confined first-order level fragment.
// Terms are immutable shared trees in a locally nameless style: bound
// variables are de Bruijn indices, free variables carry numeric ids. Regular
// binders (Pi/Abs) and confined binders (CPi/CAbs) index two separate
// namespaces, so crossing one flavor of binder never shifts the other.
// Levels appear only as arguments of confined applications (CApp); confined
// bound variables are Level::bvar nodes inside those levels.

#include <algorithm>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "upelab/errors.hpp"
#include "upelab/level.hpp"

namespace upelab {

class Term {
 public:
  enum class Kind : unsigned char { BVar, FVar, Const, Sort, Pi, Abs, App, CPi, CAbs, CApp };
  enum class SortName : unsigned char { Type, Kind };

  Term() : n_(sort_node(SortName::Type)) {}

  // ---- constructors ----
  static Term bvar(int index) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::BVar;
    n->index = index;
    return Term(std::move(n));
  }
  static Term fvar(int id) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::FVar;
    n->index = id;
    return Term(std::move(n));
  }
  static Term constant(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Const;
    n->name = std::move(name);
    return Term(std::move(n));
  }
  static Term sort(SortName s) { return Term(sort_node(s)); }
  static Term type_sort() { return sort(SortName::Type); }
  static Term kind_sort() { return sort(SortName::Kind); }
  static Term pi(std::string hint, Term dom, Term cod) {
    return binder(Kind::Pi, std::move(hint), std::move(dom), std::move(cod));
  }
  static Term abs(std::string hint, Term body) {
    return binder(Kind::Abs, std::move(hint), Term(), std::move(body)).drop_a();
  }
  static Term app(Term fn, Term arg) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::App;
    n->a = fn.n_;
    n->b = arg.n_;
    return Term(std::move(n));
  }
  static Term cpi(std::string hint, Term dom, Term cod) {
    return binder(Kind::CPi, std::move(hint), std::move(dom), std::move(cod));
  }
  static Term cabs(std::string hint, Term body) {
    return binder(Kind::CAbs, std::move(hint), Term(), std::move(body)).drop_a();
  }
  static Term capp(Term fn, Level arg) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::CApp;
    n->a = fn.n_;
    n->level = std::move(arg);
    return Term(std::move(n));
  }

  // ---- accessors ----
  Kind kind() const { return n_->kind; }
  int bvar_index() const { return n_->index; }
  int fvar_id() const { return n_->index; }
  const std::string& const_name() const { return n_->name; }
  SortName sort_name() const { return n_->sort; }
  const std::string& hint() const { return n_->name; }
  Term dom() const { return Term(n_->a); }      // Pi, CPi
  Term cod() const { return Term(n_->b); }      // Pi, CPi
  Term body() const { return Term(n_->b); }     // Abs, CAbs
  Term fn() const { return Term(n_->a); }       // App, CApp
  Term arg() const { return Term(n_->b); }      // App
  const Level& level_arg() const { return n_->level; }  // CApp
  bool same_node(const Term& o) const { return n_ == o.n_; }

 private:
  struct Node {
    Kind kind{};
    SortName sort{};
    int index = 0;
    std::string name;                  // Const name; binder display hint
    Level level;                       // CApp argument
    std::shared_ptr<const Node> a, b;  // Pi/CPi: dom,cod — Abs/CAbs: _,body — App: fn,arg — CApp: fn,_
  };

  static Term binder(Kind k, std::string hint, Term dom, Term under) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->name = std::move(hint);
    n->a = dom.n_;
    n->b = under.n_;
    return Term(std::move(n));
  }
  // For Abs/CAbs the `a` child is unused; clear it so trees compare cleanly.
  Term drop_a() const {
    auto n = std::make_shared<Node>(*n_);
    n->a = nullptr;
    return Term(std::move(n));
  }

  static std::shared_ptr<const Node> sort_node(SortName s) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Sort;
    n->sort = s;
    return n;
  }

  explicit Term(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
  std::shared_ptr<const Node> n_;
};

// ---- level helpers for confined binders ----

namespace detail {

inline Level level_open(const Level& l, int cursor, const Level& repl) {
  switch (l.kind()) {
    case Level::Kind::BVar:
      return l.bvar_index() == cursor ? repl : l;
    case Level::Kind::Succ:
      return Level::succ(level_open(l.arg(), cursor, repl));
    case Level::Kind::Max:
      return Level::max(level_open(l.left(), cursor, repl),
                        level_open(l.right(), cursor, repl));
    default:
      return l;
  }
}

inline Level level_close(const Level& l, int cursor, LevelVar v) {
  switch (l.kind()) {
    case Level::Kind::Var:
      return l.var_id() == v ? Level::bvar(cursor) : l;
    case Level::Kind::Succ:
      return Level::succ(level_close(l.arg(), cursor, v));
    case Level::Kind::Max:
      return Level::max(level_close(l.left(), cursor, v),
                        level_close(l.right(), cursor, v));
    default:
      return l;
  }
}

}  // namespace detail

// ---- opening and closing ----
//
// open_r(t, u): the body of a just-peeled regular binder has dangling regular
// index 0; replace it by u. Locally closed u is never captured because the
// cursor tracks how many regular binders have been crossed. open_c is the
// confined analogue, substituting a level for confined index 0.

namespace detail {

inline Term open_r_at(const Term& t, int cursor, const Term& u) {
  switch (t.kind()) {
    case Term::Kind::BVar:
      return t.bvar_index() == cursor ? u : t;
    case Term::Kind::FVar:
    case Term::Kind::Const:
    case Term::Kind::Sort:
      return t;
    case Term::Kind::Pi:
      return Term::pi(t.hint(), open_r_at(t.dom(), cursor, u), open_r_at(t.cod(), cursor + 1, u));
    case Term::Kind::Abs:
      return Term::abs(t.hint(), open_r_at(t.body(), cursor + 1, u));
    case Term::Kind::App:
      return Term::app(open_r_at(t.fn(), cursor, u), open_r_at(t.arg(), cursor, u));
    case Term::Kind::CPi:
      return Term::cpi(t.hint(), open_r_at(t.dom(), cursor, u), open_r_at(t.cod(), cursor, u));
    case Term::Kind::CAbs:
      return Term::cabs(t.hint(), open_r_at(t.body(), cursor, u));
    case Term::Kind::CApp:
      return Term::capp(open_r_at(t.fn(), cursor, u), t.level_arg());
  }
  return t;
}

inline Term open_c_at(const Term& t, int cursor, const Level& l) {
  switch (t.kind()) {
    case Term::Kind::BVar:
    case Term::Kind::FVar:
    case Term::Kind::Const:
    case Term::Kind::Sort:
      return t;
    case Term::Kind::Pi:
      return Term::pi(t.hint(), open_c_at(t.dom(), cursor, l), open_c_at(t.cod(), cursor, l));
    case Term::Kind::Abs:
      return Term::abs(t.hint(), open_c_at(t.body(), cursor, l));
    case Term::Kind::App:
      return Term::app(open_c_at(t.fn(), cursor, l), open_c_at(t.arg(), cursor, l));
    case Term::Kind::CPi:
      return Term::cpi(t.hint(), open_c_at(t.dom(), cursor, l), open_c_at(t.cod(), cursor + 1, l));
    case Term::Kind::CAbs:
      return Term::cabs(t.hint(), open_c_at(t.body(), cursor + 1, l));
    case Term::Kind::CApp:
      return Term::capp(open_c_at(t.fn(), cursor, l), level_open(t.level_arg(), cursor, l));
  }
  return t;
}

inline Term close_r_at(const Term& t, int cursor, int fvar_id) {
  switch (t.kind()) {
    case Term::Kind::FVar:
      return t.fvar_id() == fvar_id ? Term::bvar(cursor) : t;
    case Term::Kind::BVar:
    case Term::Kind::Const:
    case Term::Kind::Sort:
      return t;
    case Term::Kind::Pi:
      return Term::pi(t.hint(), close_r_at(t.dom(), cursor, fvar_id),
                      close_r_at(t.cod(), cursor + 1, fvar_id));
    case Term::Kind::Abs:
      return Term::abs(t.hint(), close_r_at(t.body(), cursor + 1, fvar_id));
    case Term::Kind::App:
      return Term::app(close_r_at(t.fn(), cursor, fvar_id), close_r_at(t.arg(), cursor, fvar_id));
    case Term::Kind::CPi:
      return Term::cpi(t.hint(), close_r_at(t.dom(), cursor, fvar_id),
                       close_r_at(t.cod(), cursor, fvar_id));
    case Term::Kind::CAbs:
      return Term::cabs(t.hint(), close_r_at(t.body(), cursor, fvar_id));
    case Term::Kind::CApp:
      return Term::capp(close_r_at(t.fn(), cursor, fvar_id), t.level_arg());
  }
  return t;
}

inline Term close_c_at(const Term& t, int cursor, LevelVar v) {
  switch (t.kind()) {
    case Term::Kind::BVar:
    case Term::Kind::FVar:
    case Term::Kind::Const:
    case Term::Kind::Sort:
      return t;
    case Term::Kind::Pi:
      return Term::pi(t.hint(), close_c_at(t.dom(), cursor, v), close_c_at(t.cod(), cursor, v));
    case Term::Kind::Abs:
      return Term::abs(t.hint(), close_c_at(t.body(), cursor, v));
    case Term::Kind::App:
      return Term::app(close_c_at(t.fn(), cursor, v), close_c_at(t.arg(), cursor, v));
    case Term::Kind::CPi:
      return Term::cpi(t.hint(), close_c_at(t.dom(), cursor, v),
                       close_c_at(t.cod(), cursor + 1, v));
    case Term::Kind::CAbs:
      return Term::cabs(t.hint(), close_c_at(t.body(), cursor + 1, v));
    case Term::Kind::CApp:
      return Term::capp(close_c_at(t.fn(), cursor, v), level_close(t.level_arg(), cursor, v));
  }
  return t;
}

}  // namespace detail

inline Term open_r(const Term& body, const Term& u) { return detail::open_r_at(body, 0, u); }
inline Term open_c(const Term& body, const Level& l) { return detail::open_c_at(body, 0, l); }
inline Term close_r(const Term& t, int fvar_id) { return detail::close_r_at(t, 0, fvar_id); }
inline Term close_c(const Term& t, LevelVar v) { return detail::close_c_at(t, 0, v); }

// Binder constructors that close over a scratch free variable, so deeply
// nested types can be written with names instead of hand-counted indices.
inline Term pi_closing(const std::string& hint, Term dom, int fvar_id, const Term& cod) {
  return Term::pi(hint, std::move(dom), close_r(cod, fvar_id));
}
inline Term abs_closing(const std::string& hint, int fvar_id, const Term& body) {
  return Term::abs(hint, close_r(body, fvar_id));
}
inline Term cpi_closing(const std::string& hint, Term dom, LevelVar v, const Term& cod) {
  return Term::cpi(hint, std::move(dom), close_c(cod, v));
}
inline Term cabs_closing(const std::string& hint, LevelVar v, const Term& body) {
  return Term::cabs(hint, close_c(body, v));
}

// ---- structural equality (alpha-equivalence) ----
//
// Nameless representation makes alpha-equivalence plain structural equality;
// binder display hints are ignored. Level arguments compare syntactically —
// semantic level equality is conversion's job, not the syntax's.

inline bool term_struct_equal(const Term& a, const Term& b) {
  if (a.same_node(b)) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Term::Kind::BVar:
      return a.bvar_index() == b.bvar_index();
    case Term::Kind::FVar:
      return a.fvar_id() == b.fvar_id();
    case Term::Kind::Const:
      return a.const_name() == b.const_name();
    case Term::Kind::Sort:
      return a.sort_name() == b.sort_name();
    case Term::Kind::Pi:
    case Term::Kind::CPi:
      return term_struct_equal(a.dom(), b.dom()) && term_struct_equal(a.cod(), b.cod());
    case Term::Kind::Abs:
    case Term::Kind::CAbs:
      return term_struct_equal(a.body(), b.body());
    case Term::Kind::App:
      return term_struct_equal(a.fn(), b.fn()) && term_struct_equal(a.arg(), b.arg());
    case Term::Kind::CApp:
      return term_struct_equal(a.fn(), b.fn()) &&
             level_struct_equal(a.level_arg(), b.level_arg());
  }
  return false;
}

// ---- level variables inside a term ----

// Applies a level substitution to every level argument in the term.
inline Term apply_level_subst(const Term& t, const LevelSubstitution& theta) {
  switch (t.kind()) {
    case Term::Kind::BVar:
    case Term::Kind::FVar:
    case Term::Kind::Const:
    case Term::Kind::Sort:
      return t;
    case Term::Kind::Pi:
      return Term::pi(t.hint(), apply_level_subst(t.dom(), theta),
                      apply_level_subst(t.cod(), theta));
    case Term::Kind::Abs:
      return Term::abs(t.hint(), apply_level_subst(t.body(), theta));
    case Term::Kind::App:
      return Term::app(apply_level_subst(t.fn(), theta), apply_level_subst(t.arg(), theta));
    case Term::Kind::CPi:
      return Term::cpi(t.hint(), apply_level_subst(t.dom(), theta),
                       apply_level_subst(t.cod(), theta));
    case Term::Kind::CAbs:
      return Term::cabs(t.hint(), apply_level_subst(t.body(), theta));
    case Term::Kind::CApp:
      return Term::capp(apply_level_subst(t.fn(), theta), theta.apply(t.level_arg()));
  }
  return t;
}

// Free level variables in first-occurrence order under a left-to-right,
// depth-first walk (binder domains before codomains, functions before
// arguments, levels left to right). Only nonnegative ids are reported;
// negative ids are scope-local openings and never user-facing.
namespace detail {

inline void level_vars_ordered(const Level& l, std::set<LevelVar>& seen,
                               std::vector<LevelVar>& out) {
  switch (l.kind()) {
    case Level::Kind::Var:
      if (l.var_id() >= 0 && seen.insert(l.var_id()).second) out.push_back(l.var_id());
      break;
    case Level::Kind::Succ:
      level_vars_ordered(l.arg(), seen, out);
      break;
    case Level::Kind::Max:
      level_vars_ordered(l.left(), seen, out);
      level_vars_ordered(l.right(), seen, out);
      break;
    default:
      break;
  }
}

inline void term_level_vars_ordered(const Term& t, std::set<LevelVar>& seen,
                                    std::vector<LevelVar>& out) {
  switch (t.kind()) {
    case Term::Kind::BVar:
    case Term::Kind::FVar:
    case Term::Kind::Const:
    case Term::Kind::Sort:
      return;
    case Term::Kind::Pi:
    case Term::Kind::CPi:
      term_level_vars_ordered(t.dom(), seen, out);
      term_level_vars_ordered(t.cod(), seen, out);
      return;
    case Term::Kind::Abs:
    case Term::Kind::CAbs:
      term_level_vars_ordered(t.body(), seen, out);
      return;
    case Term::Kind::App:
      term_level_vars_ordered(t.fn(), seen, out);
      term_level_vars_ordered(t.arg(), seen, out);
      return;
    case Term::Kind::CApp:
      term_level_vars_ordered(t.fn(), seen, out);
      level_vars_ordered(t.level_arg(), seen, out);
      return;
  }
}

}  // namespace detail

inline std::vector<LevelVar> term_level_vars(const Term& t) {
  std::set<LevelVar> seen;
  std::vector<LevelVar> out;
  detail::term_level_vars_ordered(t, seen, out);
  return out;
}

// ---- spines ----
//
// An application spine t a₁ … aₙ with mixed regular and confined arguments,
// decomposed head-first. Used by normalization and conversion.

struct SpineItem {
  bool is_level = false;
  Term term;    // valid when !is_level
  Level level;  // valid when is_level
};

inline void decompose_spine(Term t, Term& head, std::vector<SpineItem>& args) {
  args.clear();
  while (t.kind() == Term::Kind::App || t.kind() == Term::Kind::CApp) {
    SpineItem item;
    if (t.kind() == Term::Kind::App) {
      item.is_level = false;
      item.term = t.arg();
    } else {
      item.is_level = true;
      item.level = t.level_arg();
    }
    args.push_back(std::move(item));
    t = t.fn();
  }
  head = t;
  std::reverse(args.begin(), args.end());
}

inline Term recompose_spine(Term head, const std::vector<SpineItem>& args, size_t from = 0) {
  Term t = std::move(head);
  for (size_t k = from; k < args.size(); ++k)
    t = args[k].is_level ? Term::capp(t, args[k].level) : Term::app(t, args[k].term);
  return t;
}

}  // namespace upelab
