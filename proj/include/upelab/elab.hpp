#pragma once

// The pipeline core: erasure of sort-annotated input into schematic terms
// (every universe-level position replaced by a distinct fresh level variable),
// constraint-generating bidirectional elaboration, level unification, and the
// generalization step that closes an entry over the level variables remaining
// free in its type — producing maximally general universe-polymorphic output.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "upelab/errors.hpp"
#include "upelab/kernel.hpp"
#include "upelab/level.hpp"
#include "upelab/term.hpp"
#include "upelab/unify.hpp"

namespace upelab {

// ---- constraint sets: a unification problem plus provenance ----

struct EquationLess {
  bool operator()(const Equation& a, const Equation& b) const {
    return equation_compare(a, b) < 0;
  }
};

class ConstraintSet {
 public:
  // Adds an equation; the first provenance wins when duplicates collapse.
  void add(const Equation& e, const std::string& where) {
    problem_.add(e);
    provenance_.emplace(e, where);
  }
  void merge(const ConstraintSet& other) {
    for (const Equation& e : other.problem_.equations()) add(e, other.provenance(e));
  }

  const Problem& problem() const { return problem_; }
  bool empty() const { return problem_.empty(); }
  size_t size() const { return problem_.size(); }

  // Total over the contained equations.
  const std::string& provenance(const Equation& e) const {
    auto it = provenance_.find(e);
    if (it == provenance_.end())
      throw Error("constraint set: missing provenance for an equation");
    return it->second;
  }

 private:
  Problem problem_;
  std::map<Equation, std::string, EquationLess> provenance_;
};

// ---- erasure ----
//
// Input terms are written against the sorted (impredicative-style) constants:
// a constant token optionally carries a sort annotation after '@' (for example
// Tm@Omega or Pi@Box,Omega). Erasure discards the annotation entirely and
// replaces every universe-level position with a fresh level variable: each
// constant with prenex level arity k becomes the constant applied to k fresh
// variables. Everything else is homomorphic. Confined syntax cannot occur in
// input, so encountering it is an input defect, not a pipeline state.

inline std::string strip_sort_annotation(const std::string& token) {
  return token.substr(0, token.find('@'));
}

inline Term erase(const Term& t, const Signature& out_sig, FreshGen& fresh) {
  switch (t.kind()) {
    case Term::Kind::BVar:
    case Term::Kind::FVar:
    case Term::Kind::Sort:
      return t;
    case Term::Kind::Const: {
      std::string base = strip_sort_annotation(t.const_name());
      size_t k = out_sig.level_arity(base);  // throws UnknownConstant
      Term r = Term::constant(base);
      for (size_t j = 0; j < k; ++j) r = Term::capp(r, Level::var(fresh.fresh()));
      return r;
    }
    case Term::Kind::Pi: {
      // Explicit sequencing: fresh-variable allocation must follow reading
      // order, and function arguments evaluate in unspecified order.
      Term d = erase(t.dom(), out_sig, fresh);
      Term c = erase(t.cod(), out_sig, fresh);
      return Term::pi(t.hint(), std::move(d), std::move(c));
    }
    case Term::Kind::Abs:
      return Term::abs(t.hint(), erase(t.body(), out_sig, fresh));
    case Term::Kind::App: {
      Term f = erase(t.fn(), out_sig, fresh);
      Term a = erase(t.arg(), out_sig, fresh);
      return Term::app(std::move(f), std::move(a));
    }
    case Term::Kind::CPi:
    case Term::Kind::CAbs:
    case Term::Kind::CApp:
      throw ElabError("confined syntax cannot appear in sorted input terms");
  }
  throw ElabError("unreachable input term kind");
}

// ---- constraint-emitting conversion ----
//
// Structural comparison after weak-head normalization on both sides. Level
// argument positions emit equations instead of deciding equality; rigid head
// mismatches are unrecoverable (no level assignment can reconcile them) and
// raise ConvError.

inline void elab_convert(const Term& a0, const Term& b0, const Signature& sig, Fuel& fuel,
                         ConstraintSet& out, const std::string& where, int rdepth = 0,
                         int cdepth = 0) {
  Term a = whnf(a0, sig, fuel);
  Term b = whnf(b0, sig, fuel);

  Term ha, hb;
  std::vector<SpineItem> sa, sb;
  decompose_spine(a, ha, sa);
  decompose_spine(b, hb, sb);

  auto clash = [&](const std::string& what) -> ConvError {
    return ConvError("type mismatch: " + what + " (" + where + ")");
  };

  if (ha.kind() != hb.kind()) throw clash("incompatible head shapes");

  auto spines = [&]() {
    if (sa.size() != sb.size()) throw clash("argument counts differ");
    for (size_t k = 0; k < sa.size(); ++k) {
      if (sa[k].is_level != sb[k].is_level) throw clash("argument kinds differ");
      if (sa[k].is_level)
        out.add(Equation{sa[k].level, sb[k].level}, where);
      else
        elab_convert(sa[k].term, sb[k].term, sig, fuel, out, where, rdepth, cdepth);
    }
  };

  switch (ha.kind()) {
    case Term::Kind::Sort:
      if (ha.sort_name() != hb.sort_name()) throw clash("distinct sorts");
      return;
    case Term::Kind::FVar:
      if (ha.fvar_id() != hb.fvar_id()) throw clash("distinct variables");
      spines();
      return;
    case Term::Kind::BVar:
      if (ha.bvar_index() != hb.bvar_index()) throw clash("distinct bound variables");
      spines();
      return;
    case Term::Kind::Const:
      if (ha.const_name() != hb.const_name())
        throw clash("distinct constants '" + ha.const_name() + "' and '" + hb.const_name() + "'");
      spines();
      return;
    case Term::Kind::Pi: {
      elab_convert(ha.dom(), hb.dom(), sig, fuel, out, where, rdepth, cdepth);
      Term x = Term::fvar(rdepth);
      elab_convert(open_r(ha.cod(), x), open_r(hb.cod(), x), sig, fuel, out, where, rdepth + 1,
                   cdepth);
      return;
    }
    case Term::Kind::Abs: {
      Term x = Term::fvar(rdepth);
      elab_convert(open_r(ha.body(), x), open_r(hb.body(), x), sig, fuel, out, where, rdepth + 1,
                   cdepth);
      return;
    }
    case Term::Kind::CPi: {
      elab_convert(ha.dom(), hb.dom(), sig, fuel, out, where, rdepth, cdepth);
      Level i = Level::var(static_cast<LevelVar>(-(cdepth + 1)));
      elab_convert(open_c(ha.cod(), i), open_c(hb.cod(), i), sig, fuel, out, where, rdepth,
                   cdepth + 1);
      return;
    }
    case Term::Kind::CAbs: {
      Level i = Level::var(static_cast<LevelVar>(-(cdepth + 1)));
      elab_convert(open_c(ha.body(), i), open_c(hb.body(), i), sig, fuel, out, where, rdepth,
                   cdepth + 1);
      return;
    }
    default:
      throw clash("unsupported head");
  }
}

inline ConstraintSet elab_convert(const Term& a, const Term& b, const Signature& sig,
                                  const std::string& where = "conversion") {
  Fuel fuel;
  ConstraintSet out;
  elab_convert(a, b, sig, fuel, out, where);
  return out;
}

// ---- constraint-generating bidirectional elaboration ----
//
// Mirrors the kernel's checker, but where the kernel decides level equality,
// these rules emit equations into the accumulated constraint set; every
// unifier of the full set makes the instantiated judgment derivable.
// Emission order is fixed: left-to-right, depth-first.

inline Term elab_infer(Context& ctx, const Term& t, const Signature& sig, Fuel& fuel,
                       ConstraintSet& out, const std::string& where);

inline void elab_check(Context& ctx, const Term& t, const Term& expected, const Signature& sig,
                       Fuel& fuel, ConstraintSet& out, const std::string& where) {
  if (t.kind() == Term::Kind::Abs) {
    Term ex = whnf(expected, sig, fuel);
    if (ex.kind() != Term::Kind::Pi)
      throw ElabError("abstraction checked against a type that is not a product (" + where + ")");
    int id = ctx.push_regular(t.hint(), ex.dom());
    Term x = Term::fvar(id);
    elab_check(ctx, open_r(t.body(), x), open_r(ex.cod(), x), sig, fuel, out, where);
    ctx.pop();
    return;
  }
  if (t.kind() == Term::Kind::CAbs)
    throw ElabError("confined abstraction cannot appear in sorted input terms (" + where + ")");
  Term got = elab_infer(ctx, t, sig, fuel, out, where);
  elab_convert(got, expected, sig, fuel, out, where, ctx.regular_depth(), ctx.confined_depth());
}

inline Term elab_infer(Context& ctx, const Term& t, const Signature& sig, Fuel& fuel,
                       ConstraintSet& out, const std::string& where) {
  switch (t.kind()) {
    case Term::Kind::Sort:
      if (t.sort_name() == Term::SortName::Type) return Term::kind_sort();
      throw ElabError("the top sort has no type (" + where + ")");
    case Term::Kind::FVar:
      return ctx.regular_type(t.fvar_id());
    case Term::Kind::BVar:
      throw ElabError("dangling bound variable (" + where + ")");
    case Term::Kind::Const:
      return sig.at(t.const_name()).type;
    case Term::Kind::Pi: {
      Term ds = whnf(elab_infer(ctx, t.dom(), sig, fuel, out, where), sig, fuel);
      if (ds.kind() != Term::Kind::Sort || ds.sort_name() != Term::SortName::Type)
        throw ElabError("product domain must be a type (" + where + ")");
      int id = ctx.push_regular(t.hint(), t.dom());
      Term cs =
          whnf(elab_infer(ctx, open_r(t.cod(), Term::fvar(id)), sig, fuel, out, where), sig, fuel);
      ctx.pop();
      if (cs.kind() != Term::Kind::Sort)
        throw ElabError("product codomain must be a type or a kind (" + where + ")");
      return cs;
    }
    case Term::Kind::App: {
      Term ft = whnf(elab_infer(ctx, t.fn(), sig, fuel, out, where), sig, fuel);
      if (ft.kind() != Term::Kind::Pi)
        throw ElabError("application of a non-function (" + where + ")");
      elab_check(ctx, t.arg(), ft.dom(), sig, fuel, out, where);
      return open_r(ft.cod(), t.arg());
    }
    case Term::Kind::CApp: {
      Term ft = whnf(elab_infer(ctx, t.fn(), sig, fuel, out, where), sig, fuel);
      if (ft.kind() != Term::Kind::CPi)
        throw ElabError("level application of a term without a level product type (" + where +
                        ")");
      if (!level_locally_closed(t.level_arg()))
        throw ElabError("level argument contains a dangling bound level variable (" + where + ")");
      return open_c(ft.cod(), t.level_arg());
    }
    case Term::Kind::CPi:
      throw ElabError("confined product cannot appear in sorted input terms (" + where + ")");
    case Term::Kind::Abs:
    case Term::Kind::CAbs:
      throw ElabError("cannot infer the type of an unannotated abstraction (" + where + ")");
  }
  throw ElabError("unreachable schematic term kind");
}

// ---- generalization ----
//
// Given a solved substitution, instantiates the entry and closes it over the
// level variables remaining free in its type, in first occurrence order;
// variables free only in the body are set to 0. Binder display names are
// positional (i1, i2, …) so output is deterministic regardless of how many
// internal variables unification minted along the way.

inline Entry generalize(const std::string& name, const Term& type,
                        const std::optional<Term>& body, const LevelSubstitution& theta) {
  Term ty = apply_level_subst(type, theta);
  std::vector<LevelVar> params = term_level_vars(ty);

  std::optional<Term> bd;
  if (body) {
    Term b = apply_level_subst(*body, theta);
    LevelSubstitution zero;
    std::set<LevelVar> in_type(params.begin(), params.end());
    for (LevelVar v : term_level_vars(b))
      if (!in_type.count(v)) zero.set(v, Level::zero());
    bd = zero.empty() ? b : apply_level_subst(b, zero);
  }

  std::vector<std::string> level_params;
  for (size_t j = 0; j < params.size(); ++j)
    level_params.push_back("i" + std::to_string(j + 1));

  for (size_t j = params.size(); j-- > 0;) {
    ty = cpi_closing(level_params[j], Term::constant("Lvl"), params[j], ty);
    if (bd) bd = cabs_closing(level_params[j], params[j], *bd);
  }
  return Entry{name, ty, bd, level_params};
}

// ---- entry elaboration ----

struct InputEntry {
  std::string name;
  Term type;  // sorted syntax
  std::optional<Term> body;
};

struct ElabOptions {
  bool heuristic = false;        // retry stuck residual systems with the guess ladder
  long long fuel = 1'000'000;    // head-reduction budget per checking pass
};

struct ElabEntryResult {
  enum class Status { Elaborated, NoSolution, Stuck };

  Status status = Status::Elaborated;
  std::optional<Entry> entry;    // present iff status == Elaborated
  LevelSubstitution solved;      // full solution, or the partial one on Stuck
  Problem residual;              // refuted equation (NoSolution) or all pending (Stuck)
  std::vector<std::string> residual_provenance;  // aligned with residual's equations
  bool used_heuristic = false;
  int heuristic_rung = 0;
  std::vector<std::string> trace;  // one line per solver event
  ConstraintSet constraints;       // the full generated problem, for diagnostics
  Term erased_type;
  std::optional<Term> erased_body;

  bool ok() const { return status == Status::Elaborated; }
};

inline ElabEntryResult elaborate_entry(const Signature& out_sig, const InputEntry& input,
                                       const Problem& user_constraints, const ElabOptions& opts,
                                       VarPool& pool) {
  if (out_sig.contains(input.name)) throw DuplicateName(input.name);

  ElabEntryResult result;
  FreshGen insert(pool, "i");

  result.erased_type = erase(input.type, out_sig, insert);
  {
    Context ctx;
    Fuel fuel{opts.fuel};
    elab_check(ctx, result.erased_type, Term::type_sort(), out_sig, fuel, result.constraints,
               "entry '" + input.name + "': type");
  }
  if (input.body) {
    result.erased_body = erase(*input.body, out_sig, insert);
    Context ctx;
    Fuel fuel{opts.fuel};
    elab_check(ctx, *result.erased_body, result.erased_type, out_sig, fuel, result.constraints,
               "entry '" + input.name + "': body");
  }
  for (const Equation& e : user_constraints.equations())
    result.constraints.add(e, "entry '" + input.name + "': user constraint");

  FreshGen mint(pool, "u$");
  auto hook = [&](const UnifyStep& step) {
    switch (step.kind) {
      case UnifyStep::Kind::Solve:
        result.trace.push_back("SOLVE " + equation_to_string(step.eq, pool) + " => " +
                               subst_to_string(step.sigma, pool));
        break;
      case UnifyStep::Kind::Fail:
        result.trace.push_back("FAIL " + equation_to_string(step.eq, pool));
        break;
      case UnifyStep::Kind::Stuck:
        result.trace.push_back("STUCK " + std::to_string(step.remaining) + " remaining");
        break;
      case UnifyStep::Kind::Heuristic:
        result.trace.push_back("HEURISTIC " + std::to_string(step.rung) + " " +
                               subst_to_string(step.sigma, pool));
        break;
    }
  };
  UnifyOutcome outcome =
      unify(result.constraints.problem(), mint, UnifyOptions{opts.heuristic}, hook);

  switch (outcome.kind) {
    case UnifyOutcome::Kind::Success:
    case UnifyOutcome::Kind::HeuristicSolution: {
      result.solved = outcome.solution;
      result.used_heuristic = outcome.kind == UnifyOutcome::Kind::HeuristicSolution;
      result.heuristic_rung = outcome.heuristic_rung;
      Entry entry =
          generalize(input.name, result.erased_type, result.erased_body, result.solved);
      try {
        Fuel fuel{opts.fuel};
        check_entry(out_sig, entry, fuel);
      } catch (const Error& err) {
        throw PostCheckFailed("entry '" + input.name + "': " + err.what());
      }
      result.entry = std::move(entry);
      return result;
    }
    case UnifyOutcome::Kind::NoSolution:
    case UnifyOutcome::Kind::Stuck: {
      result.status = outcome.kind == UnifyOutcome::Kind::NoSolution
                          ? ElabEntryResult::Status::NoSolution
                          : ElabEntryResult::Status::Stuck;
      result.solved = outcome.solution;
      result.residual = outcome.residual;
      for (const Equation& e : result.residual.equations()) {
        // Residual equations are instantiated by the partial solution, so they
        // are usually no longer literally present in the generated set; match
        // them back to an origin up to level equivalence, with a generic
        // marker as the fallback.
        std::string where = "instantiated during solving";
        CanonicalEquation target = canonicalize_equation(e);
        for (const Equation& orig : result.constraints.problem().equations()) {
          Equation inst{result.solved.apply(orig.lhs), result.solved.apply(orig.rhs)};
          if (canonicalize_equation(inst) == target) {
            where = result.constraints.provenance(orig);
            break;
          }
        }
        result.residual_provenance.push_back(where);
      }
      return result;
    }
  }
  throw Error("unreachable unify outcome");
}

}  // namespace upelab
