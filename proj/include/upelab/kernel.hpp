#pragma once

// The checking core: signatures of constants over the term syntax, the fixed
// base signature of the target theory (levels, Ty/Tm/U and the object-level
// product/abstraction/application constants with their two rewrite rules),
// weak-head normalization with a fuel bound, conversion modulo level
// equivalence, and a bidirectional typechecker used to validate entries.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "upelab/errors.hpp"
#include "upelab/level.hpp"
#include "upelab/term.hpp"

namespace upelab {

// ---- entries and signatures ----

struct Entry {
  std::string name;
  Term type;                             // includes the prenex (i : Lvl) -> prefix
  std::optional<Term> body;              // definitions: includes the matching i => prefix
  std::vector<std::string> level_params; // display names of the prenex binders

  bool is_definition() const { return body.has_value(); }
};

inline size_t leading_cpi_count(Term t) {
  size_t k = 0;
  while (t.kind() == Term::Kind::CPi) {
    ++k;
    t = t.cod();
  }
  return k;
}

class Signature {
 public:
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Entry* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &entries_[it->second];
  }
  const Entry& at(const std::string& name) const {
    const Entry* e = find(name);
    if (!e) throw UnknownConstant(name);
    return *e;
  }
  size_t level_arity(const std::string& name) const { return at(name).level_params.size(); }

  // Unchecked append; check_entry is the validating path.
  void append(Entry e) {
    if (contains(e.name)) throw DuplicateName(e.name);
    index_[e.name] = entries_.size();
    entries_.push_back(std::move(e));
  }

  const std::vector<Entry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, size_t> index_;
};

// ---- contexts ----
//
// Regular bindings are addressed by free-variable id equal to their position
// among regular bindings (0-based, oldest first). Confined bindings are
// addressed by negative level-variable ids -1, -2, … in binding order; user
// level variables are nonnegative, so the two can never collide.

class Context {
 public:
  int regular_depth() const { return static_cast<int>(regular_.size()); }
  int confined_depth() const { return confined_count_; }

  int push_regular(std::string hint, Term type) {
    all_.push_back(Binding{false, std::move(type), std::move(hint)});
    regular_.push_back(all_.size() - 1);
    return regular_depth() - 1;
  }
  LevelVar push_confined(std::string hint) {
    all_.push_back(Binding{true, Term::constant("Lvl"), std::move(hint)});
    ++confined_count_;
    return static_cast<LevelVar>(-confined_count_);
  }
  void pop() {
    if (all_.back().confined) --confined_count_;
    else regular_.pop_back();
    all_.pop_back();
  }

  const Term& regular_type(int fvar_id) const {
    if (fvar_id < 0 || fvar_id >= regular_depth())
      throw TypeError("dangling free variable #" + std::to_string(fvar_id));
    return all_[regular_[static_cast<size_t>(fvar_id)]].type;
  }

 private:
  struct Binding {
    bool confined;
    Term type;
    std::string hint;
  };
  std::vector<Binding> all_;
  std::vector<size_t> regular_;
  int confined_count_ = 0;
};

// ---- fuel ----

struct Fuel {
  long long remaining = 1'000'000;
  void step() {
    if (remaining-- <= 0)
      throw FuelExhausted("head-reduction step budget exhausted (suspected divergence)");
  }
};

// ---- weak-head normalization ----
//
// Head-reduces with beta (both flavors), definition unfolding, and the two
// theory rules:
//   Tm l' (U l)                 ~> Ty l
//   App l l' A B (Lam a b A' B' f) u ~> f u
// Matching is syntactic on the head spine; the argument that must expose `U`
// (resp. `Lam`) is itself head-normalized to decide the match, and consumed
// by the rewrite when it fires. Non-participating arguments are untouched.

inline Term whnf(Term t, const Signature& sig, Fuel& fuel) {
  for (;;) {
    Term head;
    std::vector<SpineItem> args;
    decompose_spine(t, head, args);

    if (head.kind() == Term::Kind::Abs && !args.empty() && !args[0].is_level) {
      fuel.step();
      t = recompose_spine(open_r(head.body(), args[0].term), args, 1);
      continue;
    }
    if (head.kind() == Term::Kind::CAbs && !args.empty() && args[0].is_level) {
      fuel.step();
      t = recompose_spine(open_c(head.body(), args[0].level), args, 1);
      continue;
    }
    if (head.kind() == Term::Kind::Const) {
      const std::string& c = head.const_name();
      if (c == "Tm" && args.size() >= 2 && args[0].is_level && !args[1].is_level) {
        Term inner = whnf(args[1].term, sig, fuel);
        Term ih;
        std::vector<SpineItem> ia;
        decompose_spine(inner, ih, ia);
        if (ih.kind() == Term::Kind::Const && ih.const_name() == "U" && ia.size() == 1 &&
            ia[0].is_level) {
          fuel.step();
          t = recompose_spine(Term::capp(Term::constant("Ty"), ia[0].level), args, 2);
          continue;
        }
      }
      if (c == "App" && args.size() >= 6 && args[0].is_level && args[1].is_level &&
          !args[2].is_level && !args[3].is_level && !args[4].is_level && !args[5].is_level) {
        Term inner = whnf(args[4].term, sig, fuel);
        Term ih;
        std::vector<SpineItem> ia;
        decompose_spine(inner, ih, ia);
        if (ih.kind() == Term::Kind::Const && ih.const_name() == "Lam" && ia.size() == 5 &&
            ia[0].is_level && ia[1].is_level && !ia[2].is_level && !ia[3].is_level &&
            !ia[4].is_level) {
          fuel.step();
          t = recompose_spine(Term::app(ia[4].term, args[5].term), args, 6);
          continue;
        }
      }
      if (const Entry* e = sig.find(c); e && e->body) {
        fuel.step();
        t = recompose_spine(*e->body, args, 0);
        continue;
      }
    }
    return t;
  }
}

// ---- conversion ----
//
// True implies the two terms are convertible in the theory: both are
// head-normalized, heads must agree, arguments are compared recursively, and
// level arguments are compared by semantic level equality (which folds the
// level algebra's equational theory into conversion). No eta.

inline bool convert(const Term& a0, const Term& b0, const Signature& sig, Fuel& fuel,
                    int rdepth = 0, int cdepth = 0) {
  Term a = whnf(a0, sig, fuel);
  Term b = whnf(b0, sig, fuel);

  Term ha, hb;
  std::vector<SpineItem> sa, sb;
  decompose_spine(a, ha, sa);
  decompose_spine(b, hb, sb);

  if (ha.kind() != hb.kind()) return false;

  auto spines_convert = [&]() {
    if (sa.size() != sb.size()) return false;
    for (size_t k = 0; k < sa.size(); ++k) {
      if (sa[k].is_level != sb[k].is_level) return false;
      if (sa[k].is_level) {
        if (!levels_equal(sa[k].level, sb[k].level)) return false;
      } else if (!convert(sa[k].term, sb[k].term, sig, fuel, rdepth, cdepth)) {
        return false;
      }
    }
    return true;
  };

  switch (ha.kind()) {
    case Term::Kind::Sort:
      return ha.sort_name() == hb.sort_name() && sa.empty() && sb.empty();
    case Term::Kind::FVar:
      return ha.fvar_id() == hb.fvar_id() && spines_convert();
    case Term::Kind::BVar:
      return ha.bvar_index() == hb.bvar_index() && spines_convert();
    case Term::Kind::Const:
      return ha.const_name() == hb.const_name() && spines_convert();
    case Term::Kind::Pi: {
      if (!sa.empty() || !sb.empty()) return false;
      if (!convert(ha.dom(), hb.dom(), sig, fuel, rdepth, cdepth)) return false;
      Term x = Term::fvar(rdepth);
      return convert(open_r(ha.cod(), x), open_r(hb.cod(), x), sig, fuel, rdepth + 1, cdepth);
    }
    case Term::Kind::Abs: {
      if (!sa.empty() || !sb.empty()) return false;
      Term x = Term::fvar(rdepth);
      return convert(open_r(ha.body(), x), open_r(hb.body(), x), sig, fuel, rdepth + 1, cdepth);
    }
    case Term::Kind::CPi: {
      if (!sa.empty() || !sb.empty()) return false;
      if (!convert(ha.dom(), hb.dom(), sig, fuel, rdepth, cdepth)) return false;
      Level i = Level::var(static_cast<LevelVar>(-(cdepth + 1)));
      return convert(open_c(ha.cod(), i), open_c(hb.cod(), i), sig, fuel, rdepth, cdepth + 1);
    }
    case Term::Kind::CAbs: {
      if (!sa.empty() || !sb.empty()) return false;
      Level i = Level::var(static_cast<LevelVar>(-(cdepth + 1)));
      return convert(open_c(ha.body(), i), open_c(hb.body(), i), sig, fuel, rdepth, cdepth + 1);
    }
    default:
      return false;  // App/CApp cannot be spine heads
  }
}

// ---- bidirectional typechecking ----

inline Term infer_type(Context& ctx, const Term& t, const Signature& sig, Fuel& fuel);

inline void check_type(Context& ctx, const Term& t, const Term& expected, const Signature& sig,
                       Fuel& fuel) {
  if (t.kind() == Term::Kind::Abs) {
    Term ex = whnf(expected, sig, fuel);
    if (ex.kind() != Term::Kind::Pi)
      throw TypeError("abstraction checked against a type that is not a product", t.hint());
    int id = ctx.push_regular(t.hint(), ex.dom());
    Term x = Term::fvar(id);
    check_type(ctx, open_r(t.body(), x), open_r(ex.cod(), x), sig, fuel);
    ctx.pop();
    return;
  }
  if (t.kind() == Term::Kind::CAbs) {
    Term ex = whnf(expected, sig, fuel);
    if (ex.kind() != Term::Kind::CPi)
      throw TypeError("level abstraction checked against a type that is not a level product",
                      t.hint());
    LevelVar v = ctx.push_confined(t.hint());
    Level i = Level::var(v);
    check_type(ctx, open_c(t.body(), i), open_c(ex.cod(), i), sig, fuel);
    ctx.pop();
    return;
  }
  Term got = infer_type(ctx, t, sig, fuel);
  if (!convert(got, expected, sig, fuel, ctx.regular_depth(), ctx.confined_depth()))
    throw TypeError("type mismatch");
}

inline Term infer_type(Context& ctx, const Term& t, const Signature& sig, Fuel& fuel) {
  switch (t.kind()) {
    case Term::Kind::Sort:
      if (t.sort_name() == Term::SortName::Type) return Term::kind_sort();
      throw TypeError("the top sort has no type");
    case Term::Kind::FVar:
      return ctx.regular_type(t.fvar_id());
    case Term::Kind::BVar:
      throw TypeError("dangling bound variable (term is not locally closed)");
    case Term::Kind::Const:
      return sig.at(t.const_name()).type;
    case Term::Kind::Pi: {
      Term ds = whnf(infer_type(ctx, t.dom(), sig, fuel), sig, fuel);
      if (ds.kind() != Term::Kind::Sort || ds.sort_name() != Term::SortName::Type)
        throw TypeError("product domain must be a type", t.hint());
      int id = ctx.push_regular(t.hint(), t.dom());
      Term cs = whnf(infer_type(ctx, open_r(t.cod(), Term::fvar(id)), sig, fuel), sig, fuel);
      ctx.pop();
      if (cs.kind() != Term::Kind::Sort)
        throw TypeError("product codomain must be a type or a kind", t.hint());
      return cs;
    }
    case Term::Kind::CPi: {
      Term ds = whnf(infer_type(ctx, t.dom(), sig, fuel), sig, fuel);
      if (ds.kind() != Term::Kind::Sort || ds.sort_name() != Term::SortName::Type)
        throw TypeError("level-product domain must be a type", t.hint());
      if (!convert(t.dom(), Term::constant("Lvl"), sig, fuel, ctx.regular_depth(),
                   ctx.confined_depth()))
        throw TypeError("confined binder must range over Lvl", t.hint());
      LevelVar v = ctx.push_confined(t.hint());
      Term cs = whnf(infer_type(ctx, open_c(t.cod(), Level::var(v)), sig, fuel), sig, fuel);
      ctx.pop();
      if (cs.kind() != Term::Kind::Sort)
        throw TypeError("level-product codomain must be a type or a kind", t.hint());
      return cs;
    }
    case Term::Kind::App: {
      Term ft = whnf(infer_type(ctx, t.fn(), sig, fuel), sig, fuel);
      if (ft.kind() != Term::Kind::Pi) throw TypeError("application of a non-function");
      check_type(ctx, t.arg(), ft.dom(), sig, fuel);
      return open_r(ft.cod(), t.arg());
    }
    case Term::Kind::CApp: {
      Term ft = whnf(infer_type(ctx, t.fn(), sig, fuel), sig, fuel);
      if (ft.kind() != Term::Kind::CPi)
        throw TypeError("level application of a term without a level product type");
      if (!level_locally_closed(t.level_arg()))
        throw TypeError("level argument contains a dangling bound level variable");
      for (LevelVar v : level_free_vars(t.level_arg()))
        if (v < 0 && -v > ctx.confined_depth())
          throw TypeError("level variable escapes its scope");
      return open_c(ft.cod(), t.level_arg());
    }
    case Term::Kind::Abs:
    case Term::Kind::CAbs:
      throw TypeError("cannot infer the type of an unannotated abstraction", t.hint());
  }
  throw TypeError("unreachable term kind");
}

// ---- entry validation ----

inline Signature check_entry(const Signature& sig, const Entry& e, Fuel& fuel) {
  if (sig.contains(e.name)) throw DuplicateName(e.name);
  if (e.level_params.size() != leading_cpi_count(e.type))
    throw Error("entry '" + e.name + "': level parameter list out of sync with the type prefix");

  Context ctx;
  Term s = whnf(infer_type(ctx, e.type, sig, fuel), sig, fuel);
  if (s.kind() != Term::Kind::Sort)
    throw TypeError("entry type is neither a type nor a kind", e.name);
  if (e.body) {
    Context body_ctx;
    check_type(body_ctx, *e.body, e.type, sig, fuel);
  }

  Signature out = sig;
  out.append(e);
  return out;
}

inline Signature check_entry(const Signature& sig, const Entry& e) {
  Fuel fuel;
  return check_entry(sig, e, fuel);
}

// ---- the base signature ----
//
// Lvl : Type
// Ty  : (l : Lvl) -> Type
// Tm  : (l : Lvl) -> Ty l -> Type
// U   : (l : Lvl) -> Ty (S l)
// Pi  : (l l' : Lvl) -> (A : Ty l) -> (B : Tm l A -> Ty l') -> Ty (l ⊔ l')
// Lam : (l l' : Lvl) -> (A : Ty l) -> (B : Tm l A -> Ty l') ->
//       ((x : Tm l A) -> Tm l' (B x)) -> Tm (l ⊔ l') (Pi l l' A B)
// App : (l l' : Lvl) -> (A : Ty l) -> (B : Tm l A -> Ty l') ->
//       Tm (l ⊔ l') (Pi l l' A B) -> (u : Tm l A) -> Tm l' (B u)
//
// The level constructors 0/S/⊔ are part of the Level syntax rather than
// constants, and the two rewrite rules live in whnf. Every entry is pushed
// through check_entry, so constructing the base signature re-verifies it.

inline Signature upp_signature() {
  // Scratch identifiers, closed before any term escapes this function.
  constexpr LevelVar L1 = 1'000'001, L2 = 1'000'002;
  constexpr int FA = 1'000'011, FB = 1'000'012, FX = 1'000'013, FU = 1'000'014;

  const Term Lvl = Term::constant("Lvl");
  const Level l1 = Level::var(L1), l2 = Level::var(L2);
  auto Ty = [](const Level& l) { return Term::capp(Term::constant("Ty"), l); };
  auto Tm = [](const Level& l, const Term& A) {
    return Term::app(Term::capp(Term::constant("Tm"), l), A);
  };

  Signature sig;
  sig = check_entry(sig, Entry{"Lvl", Term::type_sort(), std::nullopt, {}});
  sig = check_entry(sig, Entry{"Ty", cpi_closing("l", Lvl, L1, Term::type_sort()), std::nullopt, {"l"}});
  sig = check_entry(
      sig, Entry{"Tm",
                 cpi_closing("l", Lvl, L1, Term::pi("_", Ty(l1), Term::type_sort())),
                 std::nullopt,
                 {"l"}});
  sig = check_entry(
      sig, Entry{"U", cpi_closing("l", Lvl, L1, Ty(Level::succ(l1))), std::nullopt, {"l"}});

  // B's type, shared by the three object-level constants.
  const Term fam = Term::pi("x", Tm(l1, Term::fvar(FA)), Ty(l2));
  const Term pi_applied = Term::app(
      Term::app(Term::capp(Term::capp(Term::constant("Pi"), l1), l2), Term::fvar(FA)),
      Term::fvar(FB));

  sig = check_entry(
      sig,
      Entry{"Pi",
            cpi_closing(
                "l", Lvl, L1,
                cpi_closing("l'", Lvl, L2,
                            pi_closing("A", Ty(l1), FA,
                                       Term::pi("B", fam, Ty(Level::max(l1, l2)))))),
            std::nullopt,
            {"l", "l'"}});

  sig = check_entry(
      sig,
      Entry{"Lam",
            cpi_closing(
                "l", Lvl, L1,
                cpi_closing(
                    "l'", Lvl, L2,
                    pi_closing(
                        "A", Ty(l1), FA,
                        pi_closing(
                            "B", fam, FB,
                            Term::pi("f",
                                     pi_closing("x", Tm(l1, Term::fvar(FA)), FX,
                                                Tm(l2, Term::app(Term::fvar(FB), Term::fvar(FX)))),
                                     Tm(Level::max(l1, l2), pi_applied)))))),
            std::nullopt,
            {"l", "l'"}});

  sig = check_entry(
      sig,
      Entry{"App",
            cpi_closing(
                "l", Lvl, L1,
                cpi_closing(
                    "l'", Lvl, L2,
                    pi_closing(
                        "A", Ty(l1), FA,
                        pi_closing(
                            "B", fam, FB,
                            Term::pi("t", Tm(Level::max(l1, l2), pi_applied),
                                     pi_closing("u", Tm(l1, Term::fvar(FA)), FU,
                                                Tm(l2, Term::app(Term::fvar(FB),
                                                                 Term::fvar(FU))))))))),
            std::nullopt,
            {"l", "l'"}});

  return sig;
}

}  // namespace upelab
