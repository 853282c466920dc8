#pragma once

// Text output: the signature grammar of parser.hpp (exact round-trip), and
// an Agda-flavored surface rendering of elaborated entries.

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "upelab/kernel.hpp"
#include "upelab/level.hpp"
#include "upelab/term.hpp"

namespace upelab {

namespace detail {

inline void collect_const_names(const Term& t, std::set<std::string>& out) {
  switch (t.kind()) {
    case Term::Kind::Const:
      out.insert(t.const_name());
      return;
    case Term::Kind::Pi:
    case Term::Kind::CPi:
      collect_const_names(t.dom(), out);
      collect_const_names(t.cod(), out);
      return;
    case Term::Kind::Abs:
    case Term::Kind::CAbs:
      collect_const_names(t.body(), out);
      return;
    case Term::Kind::App:
      collect_const_names(t.fn(), out);
      collect_const_names(t.arg(), out);
      return;
    case Term::Kind::CApp:
      collect_const_names(t.fn(), out);
      return;
    default:
      return;
  }
}

// True when the bound variable of the enclosing binder occurs in t, where
// `cursor` is the index that refers to that binder.
inline bool bvar_occurs(const Term& t, int cursor) {
  switch (t.kind()) {
    case Term::Kind::BVar:
      return t.bvar_index() == cursor;
    case Term::Kind::Pi:
      return bvar_occurs(t.dom(), cursor) || bvar_occurs(t.cod(), cursor + 1);
    case Term::Kind::Abs:
      return bvar_occurs(t.body(), cursor + 1);
    case Term::Kind::App:
      return bvar_occurs(t.fn(), cursor) || bvar_occurs(t.arg(), cursor);
    case Term::Kind::CPi:
      return bvar_occurs(t.dom(), cursor) || bvar_occurs(t.cod(), cursor);
    case Term::Kind::CAbs:
      return bvar_occurs(t.body(), cursor);
    case Term::Kind::CApp:
      return bvar_occurs(t.fn(), cursor);
    default:
      return false;
  }
}

class TermPrinter {
 public:
  TermPrinter(VarPool& pool, std::set<std::string> used) : pool_(pool), used_(std::move(used)) {}

  // prec 0: any form; prec 1: application arguments of '->'; prec 2: atoms.
  std::string print(const Term& t, int prec) {
    switch (t.kind()) {
      case Term::Kind::Sort:
        return t.sort_name() == Term::SortName::Type ? "Type" : "Kind";
      case Term::Kind::BVar:
        // Unreachable for well-formed input: binders are opened on the way
        // down. Kept total for debugging partial terms.
        return "^" + std::to_string(t.bvar_index());
      case Term::Kind::FVar: {
        auto it = fvar_names_.find(t.fvar_id());
        return it != fvar_names_.end() ? it->second : "?" + std::to_string(t.fvar_id());
      }
      case Term::Kind::Const:
        return t.const_name();
      case Term::Kind::Pi: {
        std::string dom = print(t.dom(), 1);
        if (!bvar_occurs(t.cod(), 0)) {
          std::string cod = print(t.cod(), 0);  // no binder to open
          return wrap(prec > 0, dom + " -> " + cod);
        }
        std::string name = fresh_name(t.hint());
        int id = ++fvar_counter_;
        fvar_names_[id] = name;
        used_.insert(name);
        std::string cod = print(open_r(t.cod(), Term::fvar(id)), 0);
        used_.erase(name);
        return wrap(prec > 0, "(" + name + " : " + print(t.dom(), 0) + ") -> " + cod);
      }
      case Term::Kind::CPi: {
        std::string name = fresh_name(t.hint());
        LevelVar v = pool_.intern(name);
        used_.insert(name);
        std::string cod = print(open_c(t.cod(), Level::var(v)), 0);
        used_.erase(name);
        return wrap(prec > 0, "(" + name + " : Lvl) -> " + cod);
      }
      case Term::Kind::Abs: {
        std::string name = fresh_name(t.hint());
        int id = ++fvar_counter_;
        fvar_names_[id] = name;
        used_.insert(name);
        std::string body = print(open_r(t.body(), Term::fvar(id)), 0);
        used_.erase(name);
        return wrap(prec > 0, name + " => " + body);
      }
      case Term::Kind::CAbs: {
        std::string name = fresh_name(t.hint());
        LevelVar v = pool_.intern(name);
        used_.insert(name);
        std::string body = print(open_c(t.body(), Level::var(v)), 0);
        used_.erase(name);
        return wrap(prec > 0, name + " => " + body);
      }
      case Term::Kind::App: {
        std::string fn = print(t.fn(), 1);
        std::string arg = print(t.arg(), 2);
        return wrap(prec > 1, fn + " " + arg);
      }
      case Term::Kind::CApp: {
        std::string fn = print(t.fn(), 1);
        std::string arg = level_to_string(t.level_arg(), pool_);
        if (t.level_arg().kind() == Level::Kind::Max) arg = "(" + arg + ")";
        return wrap(prec > 1, fn + " " + arg);
      }
    }
    return "";  // unreachable
  }

 private:
  static std::string wrap(bool yes, std::string s) { return yes ? "(" + s + ")" : std::move(s); }

  std::string fresh_name(const std::string& hint) {
    std::string base = hint.empty() || hint == "_" ? "x" : hint;
    std::string name = base;
    while (used_.count(name) || name == "def" || name == "Type" || name == "Lvl")
      name += "'";
    return name;
  }

  VarPool& pool_;
  std::set<std::string> used_;
  std::map<int, std::string> fvar_names_;
  int fvar_counter_ = 0;
};

}  // namespace detail

// Prints a term in the signature grammar. `reserved` lists names that
// binders must not capture (constants of the enclosing signature, free
// level-variable names); constants mentioned by the term and the display
// names of its free level variables are reserved automatically.
inline std::string print_term(const Term& t, VarPool& pool,
                              std::set<std::string> reserved = {}) {
  detail::collect_const_names(t, reserved);
  for (LevelVar v : term_level_vars(t)) reserved.insert(pool.display(v));
  detail::TermPrinter p(pool, std::move(reserved));
  return p.print(t, 0);
}

inline std::string print_entry(const Entry& e, VarPool& pool,
                               std::set<std::string> reserved = {}) {
  if (!e.body) return e.name + " : " + print_term(e.type, pool, reserved) + " .\n";
  return "def " + e.name + " : " + print_term(e.type, pool, reserved) + "\n  := " +
         print_term(*e.body, pool, std::move(reserved)) + " .\n";
}

inline std::string print_signature(const std::vector<Entry>& entries, VarPool& pool) {
  std::set<std::string> reserved;
  for (const Entry& e : entries) reserved.insert(e.name);
  std::string out;
  for (const Entry& e : entries) {
    if (!out.empty()) out += "\n";
    out += print_entry(e, pool, reserved);
  }
  return out;
}

// ---- Agda-flavored rendering ----
//
// A syntactic translation of elaborated entries into Agda surface syntax
// under the Russell-style reading: level quantification becomes
// '(i : Level) ->', universe codes become 'Set l', product codes become real
// products, and element-level codes lose their wrappers. Purely textual —
// nothing guarantees the output typechecks as written.

namespace detail {

inline std::string agda_level(const Level& l, const VarPool& pool, bool atom) {
  switch (l.kind()) {
    case Level::Kind::Zero:
      return "lzero";
    case Level::Kind::Var:
      return pool.display(l.var_id());
    case Level::Kind::BVar:
      return "^" + std::to_string(l.bvar_index());
    case Level::Kind::Succ: {
      std::string s = "lsuc " + agda_level(l.arg(), pool, true);
      return atom ? "(" + s + ")" : s;
    }
    case Level::Kind::Max: {
      std::string s =
          agda_level(l.left(), pool, true) + " \xE2\x8A\x94 " + agda_level(l.right(), pool, true);
      return atom ? "(" + s + ")" : s;
    }
  }
  return "";
}

class AgdaPrinter {
 public:
  AgdaPrinter(VarPool& pool, std::set<std::string> used) : pool_(pool), used_(std::move(used)) {}

  // Type-position translation.
  std::string type(const Term& t, int prec) {
    // Tm l c: read the code c as a type, dropping the wrapper.
    if (t.kind() == Term::Kind::App && t.fn().kind() == Term::Kind::CApp &&
        t.fn().fn().kind() == Term::Kind::Const && t.fn().fn().const_name() == "Tm")
      return code_as_type(t.arg(), prec);
    if (t.kind() == Term::Kind::CApp && t.fn().kind() == Term::Kind::Const &&
        t.fn().const_name() == "Ty")
      return wrap(prec > 1, "Set " + agda_level(t.level_arg(), pool_, true));
    if (t.kind() == Term::Kind::Const && t.const_name() == "Lvl") return "Level";
    switch (t.kind()) {
      case Term::Kind::CPi: {
        std::string name = fresh_name(t.hint());
        LevelVar v = pool_.intern(name);
        used_.insert(name);
        std::string cod = type(open_c(t.cod(), Level::var(v)), 0);
        used_.erase(name);
        return wrap(prec > 0, "(" + name + " : Level) -> " + cod);
      }
      case Term::Kind::Pi: {
        if (!bvar_occurs(t.cod(), 0))
          return wrap(prec > 0, type(t.dom(), 1) + " -> " + type(t.cod(), 0));
        std::string name = fresh_name(t.hint());
        int id = ++fvar_counter_;
        fvar_names_[id] = name;
        used_.insert(name);
        std::string cod = type(open_r(t.cod(), Term::fvar(id)), 0);
        used_.erase(name);
        return wrap(prec > 0, "(" + name + " : " + type(t.dom(), 0) + ") -> " + cod);
      }
      default:
        return code_as_type(t, prec);
    }
  }

  // A code (an element of some U) read as the type it denotes.
  std::string code_as_type(const Term& c, int prec) {
    // U l → Set l
    if (c.kind() == Term::Kind::CApp && c.fn().kind() == Term::Kind::Const &&
        (c.fn().const_name() == "U" || c.fn().const_name() == "Ty"))
      return wrap(prec > 1, "Set " + agda_level(c.level_arg(), pool_, true));
    // Pi l l' A B → (x : A) -> B x
    Term head = c;
    std::vector<Term> args;
    while (head.kind() == Term::Kind::App) {
      args.push_back(head.arg());
      head = head.fn();
    }
    int clevels = 0;
    while (head.kind() == Term::Kind::CApp) {
      ++clevels;
      head = head.fn();
    }
    if (head.kind() == Term::Kind::Const && head.const_name() == "Pi" && clevels == 2 &&
        args.size() == 2) {
      const Term& A = args[1];
      const Term& B = args[0];
      std::string dom = code_as_type(A, 1);
      if (B.kind() == Term::Kind::Abs) {
        if (!bvar_occurs(B.body(), 0))
          return wrap(prec > 0, dom + " -> " + code_as_type(B.body(), 0));
        std::string name = fresh_name(B.hint());
        int id = ++fvar_counter_;
        fvar_names_[id] = name;
        used_.insert(name);
        std::string cod = code_as_type(open_r(B.body(), Term::fvar(id)), 0);
        used_.erase(name);
        return wrap(prec > 0, "(" + name + " : " + code_as_type(A, 0) + ") -> " + cod);
      }
      // Family given by an arbitrary term: apply it to a fresh binder.
      std::string name = fresh_name("x");
      return wrap(prec > 0,
                  "(" + name + " : " + code_as_type(A, 0) + ") -> " + term(B, 1) + " " + name);
    }
    return term(c, prec);
  }

  // Element-position translation.
  std::string term(const Term& t, int prec) {
    Term head = t;
    std::vector<Term> args;
    while (head.kind() == Term::Kind::App) {
      args.push_back(head.arg());
      head = head.fn();
    }
    size_t clevels = 0;
    Term chead = head;
    while (chead.kind() == Term::Kind::CApp) {
      ++clevels;
      chead = chead.fn();
    }
    if (chead.kind() == Term::Kind::Const) {
      const std::string& n = chead.const_name();
      // Lam l l' A B f → translate f; App l l' A B f u → f u.
      if (n == "Lam" && clevels == 2 && args.size() == 3)
        return term(args[0], prec);
      if (n == "App" && clevels == 2 && args.size() == 4)
        return wrap(prec > 1, term(args[1], 1) + " " + term(args[0], 2));
      if ((n == "U" || n == "Pi" || n == "Ty" || n == "Tm") && clevels > 0)
        return code_as_type(t, prec);
    }
    switch (t.kind()) {
      case Term::Kind::Sort:
        return t.sort_name() == Term::SortName::Type ? "Set" : "Set\xE2\x82\x81";
      case Term::Kind::BVar:
        return "^" + std::to_string(t.bvar_index());
      case Term::Kind::FVar: {
        auto it = fvar_names_.find(t.fvar_id());
        return it != fvar_names_.end() ? it->second : "?" + std::to_string(t.fvar_id());
      }
      case Term::Kind::Const:
        return t.const_name() == "Lvl" ? "Level" : t.const_name();
      case Term::Kind::Pi:
      case Term::Kind::CPi:
        return type(t, prec);
      case Term::Kind::Abs:
      case Term::Kind::CAbs: {
        std::string name = fresh_name(t.hint());
        std::string body;
        if (t.kind() == Term::Kind::Abs) {
          int id = ++fvar_counter_;
          fvar_names_[id] = name;
          used_.insert(name);
          body = term(open_r(t.body(), Term::fvar(id)), 0);
        } else {
          LevelVar v = pool_.intern(name);
          used_.insert(name);
          body = term(open_c(t.body(), Level::var(v)), 0);
        }
        used_.erase(name);
        return wrap(prec > 0, "\xCE\xBB " + name + " -> " + body);
      }
      case Term::Kind::App:
        return wrap(prec > 1, term(t.fn(), 1) + " " + term(t.arg(), 2));
      case Term::Kind::CApp: {
        std::string lvl = agda_level(t.level_arg(), pool_, true);
        return wrap(prec > 1, term(t.fn(), 1) + " " + lvl);
      }
    }
    return "";
  }

  // Peels k confined abstractions for a definition's pattern-style binders.
  std::vector<std::string> peel_level_binders(Term& body, size_t k) {
    std::vector<std::string> names;
    while (names.size() < k && body.kind() == Term::Kind::CAbs) {
      std::string name = fresh_name(body.hint());
      LevelVar v = pool_.intern(name);
      used_.insert(name);
      names.push_back(name);
      body = open_c(body.body(), Level::var(v));
    }
    return names;
  }

 private:
  static std::string wrap(bool yes, std::string s) { return yes ? "(" + s + ")" : std::move(s); }

  std::string fresh_name(const std::string& hint) {
    std::string base = hint.empty() || hint == "_" ? "x" : hint;
    std::string name = base;
    while (used_.count(name)) name += "'";
    return name;
  }

  VarPool& pool_;
  std::set<std::string> used_;
  std::map<int, std::string> fvar_names_;
  int fvar_counter_ = 0;
};

}  // namespace detail

inline std::string export_agda_style(const std::vector<Entry>& entries,
                                     const std::string& module_name, VarPool& pool) {
  std::set<std::string> reserved = {"Level", "Set", "lzero", "lsuc", "module", "where",
                                    "open", "import", "postulate", "using"};
  for (const Entry& e : entries) reserved.insert(e.name);

  std::string out = "module " + module_name + " where\n\n";
  out += "open import Agda.Primitive using (Level ; lzero ; lsuc ; _\xE2\x8A\x94_)\n";
  for (const Entry& e : entries) {
    out += "\n";
    std::set<std::string> used = reserved;
    detail::collect_const_names(e.type, used);
    if (e.body) detail::collect_const_names(*e.body, used);
    detail::AgdaPrinter p(pool, used);
    if (!e.body) {
      out += "postulate\n  " + e.name + " : " + p.type(e.type, 0) + "\n";
    } else {
      out += e.name + " : " + p.type(e.type, 0) + "\n";
      Term body = *e.body;
      std::vector<std::string> binders = p.peel_level_binders(body, e.level_params.size());
      out += e.name;
      for (const std::string& b : binders) out += " " + b;
      out += " = " + p.term(body, 0) + "\n";
    }
  }
  return out;
}

}  // namespace upelab
