#pragma once

// Equational unification for level terms: equation canonical forms, the
// complete single-equation classification (every equation either is trivial,
// has a most general unifier of one of two shapes, has no unifier, or is
// solvable without any mgu), mgu construction, and the constraint-postponing
// solver that applies mgus equation by equation. An optional heuristic ladder
// can propose verified (but not most general) solutions for stuck problems.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "upelab/errors.hpp"
#include "upelab/level.hpp"

namespace upelab {

// ---- problems ----

struct Equation {
  Level lhs, rhs;
};

inline int equation_compare(const Equation& a, const Equation& b) {
  int c = level_compare(a.lhs, b.lhs);
  return c != 0 ? c : level_compare(a.rhs, b.rhs);
}
inline bool operator==(const Equation& a, const Equation& b) { return equation_compare(a, b) == 0; }

inline std::string equation_to_string(const Equation& e, const VarPool& pool) {
  return level_to_string(e.lhs, pool) + " == " + level_to_string(e.rhs, pool);
}

// Duplicate-free list of equations; insertion order is preserved so that the
// solver scans deterministically.
class Problem {
 public:
  Problem() = default;

  bool add(Equation e) {
    for (const auto& x : eqs_)
      if (x == e) return false;
    eqs_.push_back(std::move(e));
    return true;
  }
  void extend(const Problem& other) {
    for (const auto& e : other.eqs_) add(e);
  }
  const std::vector<Equation>& equations() const { return eqs_; }
  bool empty() const { return eqs_.empty(); }
  size_t size() const { return eqs_.size(); }

  std::set<LevelVar> free_vars() const {
    std::set<LevelVar> out;
    for (const auto& e : eqs_) {
      level_free_vars(e.lhs, out);
      level_free_vars(e.rhs, out);
    }
    return out;
  }

  Problem substituted(const LevelSubstitution& sigma) const {
    Problem out;
    for (const auto& e : eqs_) out.add(Equation{sigma.apply(e.lhs), sigma.apply(e.rhs)});
    return out;
  }

 private:
  std::vector<Equation> eqs_;
};

inline bool is_unifier(const LevelSubstitution& theta, const Problem& p) {
  for (const auto& e : p.equations())
    if (!levels_equal(theta.apply(e.lhs), theta.apply(e.rhs))) return false;
  return true;
}
inline bool is_unifier(const LevelSubstitution& theta, const Equation& e) {
  return levels_equal(theta.apply(e.lhs), theta.apply(e.rhs));
}

// ---- equation canonical form ----
//
// Both sides canonical, every shared variable carries the same coefficient on
// both sides, and the least coefficient present anywhere is 0.

struct CanonicalEquation {
  CanonicalLevel lhs, rhs;

  bool operator==(const CanonicalEquation& o) const { return lhs == o.lhs && rhs == o.rhs; }

  bool well_formed() const {
    if (!lhs.well_formed() || !rhs.well_formed()) return false;
    unsigned min_coeff = std::min(lhs.const_coeff, rhs.const_coeff);
    for (const auto& [v, n] : lhs.var_coeffs) {
      auto it = rhs.var_coeffs.find(v);
      if (it != rhs.var_coeffs.end() && it->second != n) return false;
      min_coeff = std::min(min_coeff, n);
    }
    for (const auto& [v, n] : rhs.var_coeffs) min_coeff = std::min(min_coeff, n);
    return min_coeff == 0;
  }
};

// Three steps: canonicalize the sides; for each shared variable with unequal
// coefficients drop the smaller-coefficient occurrence (sound because the
// larger one dominates it under every valuation); subtract the global minimum
// coefficient from every slot (sound because x+k = y+k iff x = y on maxima
// where every term moved by the same k).
inline CanonicalEquation canonicalize_equation(const Equation& e) {
  CanonicalEquation ce{canonicalize(e.lhs), canonicalize(e.rhs)};

  std::vector<LevelVar> drop_left, drop_right;
  for (const auto& [v, n] : ce.lhs.var_coeffs) {
    auto it = ce.rhs.var_coeffs.find(v);
    if (it == ce.rhs.var_coeffs.end() || it->second == n) continue;
    (n < it->second ? drop_left : drop_right).push_back(v);
  }
  for (LevelVar v : drop_left) ce.lhs.var_coeffs.erase(v);
  for (LevelVar v : drop_right) ce.rhs.var_coeffs.erase(v);

  unsigned m = std::min(ce.lhs.const_coeff, ce.rhs.const_coeff);
  for (const auto& [v, n] : ce.lhs.var_coeffs) m = std::min(m, n);
  for (const auto& [v, n] : ce.rhs.var_coeffs) m = std::min(m, n);
  if (m > 0) {
    ce.lhs.const_coeff -= m;
    ce.rhs.const_coeff -= m;
    for (auto& [v, n] : ce.lhs.var_coeffs) n -= m;
    for (auto& [v, n] : ce.rhs.var_coeffs) n -= m;
  }
  return ce;
}

// ---- classification ----

struct Classification {
  enum class Kind {
    Trivial,         // sides identical: any substitution unifies
    MguCaseI,        // n ⊔ i vs l with n < const(l): mgu maps i to l
    MguCaseII,       // flat equation (all coefficients 0): fresh-family mgu
    NoUnifier,       // constant vs strictly larger-constant side with no vars
    SolvableNoMgu,   // unifiable but no single most general unifier exists
  };

  Kind kind;
  // MguCaseI payload.
  LevelVar var = -1;
  Level target;
  // MguCaseII payload: variables on both sides / left only / right only.
  std::vector<LevelVar> shared, left_only, right_only;
};

inline const char* classification_name(Classification::Kind k) {
  switch (k) {
    case Classification::Kind::Trivial: return "Trivial";
    case Classification::Kind::MguCaseI: return "MguCaseI";
    case Classification::Kind::MguCaseII: return "MguCaseII";
    case Classification::Kind::NoUnifier: return "NoUnifier";
    case Classification::Kind::SolvableNoMgu: return "SolvableNoMgu";
  }
  return "?";
}

// Decision procedure over a canonical equation. The two sides are compared by
// constant coefficient; the smaller side's variable census decides the rest.
inline Classification classify(const CanonicalEquation& ce) {
  if (!ce.well_formed()) throw Error("classify: input violates equation canonical form");

  Classification out;
  if (ce.lhs == ce.rhs) {
    out.kind = Classification::Kind::Trivial;
    return out;
  }

  unsigned cl = ce.lhs.const_coeff, cr = ce.rhs.const_coeff;
  if (cl == cr) {
    if (cl == 0) {
      // Flat: well-formedness bounds every variable coefficient by 0.
      out.kind = Classification::Kind::MguCaseII;
      for (const auto& [v, n] : ce.lhs.var_coeffs) {
        (void)n;
        if (ce.rhs.var_coeffs.count(v)) out.shared.push_back(v);
        else out.left_only.push_back(v);
      }
      for (const auto& [v, n] : ce.rhs.var_coeffs) {
        (void)n;
        if (!ce.lhs.var_coeffs.count(v)) out.right_only.push_back(v);
      }
      return out;
    }
    out.kind = Classification::Kind::SolvableNoMgu;
    return out;
  }

  // Normalize by symmetry: look at the smaller-constant side.
  const CanonicalLevel& small = cl < cr ? ce.lhs : ce.rhs;
  const CanonicalLevel& big = cl < cr ? ce.rhs : ce.lhs;
  if (small.var_coeffs.empty()) {
    out.kind = Classification::Kind::NoUnifier;
    return out;
  }
  if (small.var_coeffs.size() == 1) {
    auto [v, n] = *small.var_coeffs.begin();
    if (n == 0) {
      out.kind = Classification::Kind::MguCaseI;
      out.var = v;
      out.target = render(big);
      return out;
    }
  }
  out.kind = Classification::Kind::SolvableNoMgu;
  return out;
}

inline Classification classify(const Equation& e) { return classify(canonicalize_equation(e)); }

// ---- mgu construction ----
//
// Every produced substitution has domain exactly the equation's variables and
// a value range of entirely fresh variables (the raw mgu composed with a
// bijective renaming of the equation variables). That keeps solver solutions
// idempotent and keeps solved variables out of pending constraints.

inline LevelSubstitution build_mgu(const Classification& c, FreshGen& fresh) {
  LevelSubstitution sigma;
  switch (c.kind) {
    case Classification::Kind::Trivial:
      return sigma;  // identity

    case Classification::Kind::MguCaseI: {
      std::set<LevelVar> fv = level_free_vars(c.target);
      fv.insert(c.var);
      LevelSubstitution rename;
      for (LevelVar v : fv) rename.set(v, Level::var(fresh.fresh()));
      for (LevelVar v : fv)
        if (v != c.var) sigma.set(v, rename.apply(Level::var(v)));
      sigma.set(c.var, rename.apply(c.target));
      return sigma;
    }

    case Classification::Kind::MguCaseII: {
      size_t p0 = c.shared.size(), p1 = c.left_only.size(), p2 = c.right_only.size();
      std::vector<Level> x(p0);
      std::vector<std::vector<Level>> y(p0, std::vector<Level>(p1));
      std::vector<std::vector<Level>> z(p0, std::vector<Level>(p2));
      std::vector<std::vector<Level>> v(p1, std::vector<Level>(p2));
      for (size_t k = 0; k < p0; ++k) x[k] = Level::var(fresh.fresh());
      for (size_t k = 0; k < p0; ++k)
        for (size_t n = 0; n < p1; ++n) y[k][n] = Level::var(fresh.fresh());
      for (size_t k = 0; k < p0; ++k)
        for (size_t m = 0; m < p2; ++m) z[k][m] = Level::var(fresh.fresh());
      for (size_t n = 0; n < p1; ++n)
        for (size_t m = 0; m < p2; ++m) v[n][m] = Level::var(fresh.fresh());

      for (size_t k = 0; k < p0; ++k) {
        std::vector<Level> parts = {x[k]};
        for (size_t n = 0; n < p1; ++n) parts.push_back(y[k][n]);
        for (size_t m = 0; m < p2; ++m) parts.push_back(z[k][m]);
        sigma.set(c.shared[k], Level::join(parts));
      }
      for (size_t n = 0; n < p1; ++n) {
        std::vector<Level> parts;
        for (size_t k = 0; k < p0; ++k) parts.push_back(y[k][n]);
        for (size_t m = 0; m < p2; ++m) parts.push_back(v[n][m]);
        sigma.set(c.left_only[n], Level::join(parts));
      }
      for (size_t m = 0; m < p2; ++m) {
        std::vector<Level> parts;
        for (size_t k = 0; k < p0; ++k) parts.push_back(z[k][m]);
        for (size_t n = 0; n < p1; ++n) parts.push_back(v[n][m]);
        sigma.set(c.right_only[m], Level::join(parts));
      }
      return sigma;
    }

    case Classification::Kind::NoUnifier:
    case Classification::Kind::SolvableNoMgu:
      throw Error("build_mgu: classification carries no mgu");
  }
  return sigma;
}

// ---- solver ----

struct Configuration {
  Problem pending;
  LevelSubstitution solution;
};

struct UnifyStep {
  enum class Kind { Solve, Fail, Stuck, Heuristic };
  Kind kind;
  Equation eq;                // Solve, Fail
  LevelSubstitution sigma;    // Solve (empty for trivial deletion), Heuristic
  int rung = 0;               // Heuristic: 1 = all-zero, 2 = multiset, 3 = shared fresh
  size_t remaining = 0;       // Stuck
  const Configuration* after = nullptr;  // Solve: configuration after the step
};

using StepHook = std::function<void(const UnifyStep&)>;

struct UnifyOptions {
  bool heuristic = false;
};

struct UnifyOutcome {
  enum class Kind { Success, NoSolution, Stuck, HeuristicSolution };
  Kind kind;
  LevelSubstitution solution;  // Success / HeuristicSolution; partial when Stuck
  Problem residual;            // Stuck: all pending; NoSolution: the refuted equation
  int heuristic_rung = 0;      // HeuristicSolution
};

inline std::string subst_to_string(const LevelSubstitution& theta, const VarPool& pool) {
  std::string out = "{";
  bool first = true;
  for (const auto& [v, l] : theta.entries()) {
    if (!first) out += ", ";
    first = false;
    out += pool.display(v) + " -> " + level_to_string(l, pool);
  }
  return out + "}";
}

namespace detail {

inline void check_solver_invariants(const Configuration& cfg) {
  if (!is_idempotent(cfg.solution)) throw Error("unify: solution lost idempotency");
  std::set<LevelVar> pending_fv = cfg.pending.free_vars();
  for (LevelVar v : cfg.solution.domain())
    if (pending_fv.count(v)) throw Error("unify: solved variable re-appeared in pending");
}

}  // namespace detail

// Heuristic ladder for problems where every equation is solvable but no mgu
// exists. Each rung proposes a candidate substitution which is only accepted
// if it verifiably unifies the residual problem; accepted answers carry no
// generality claim. Rungs: (1) everything to 0; (2) per-equation forcing of
// variable-multiset equality; (3) everything to one shared fresh variable.
inline UnifyOutcome heuristic_step(const Problem& remaining, const LevelSubstitution& partial,
                                   FreshGen& fresh, const StepHook& hook = nullptr) {
  std::set<LevelVar> fvs = remaining.free_vars();

  auto accept = [&](LevelSubstitution cand, int rung) -> std::optional<UnifyOutcome> {
    if (!is_unifier(cand, remaining)) return std::nullopt;
    UnifyOutcome out;
    out.kind = UnifyOutcome::Kind::HeuristicSolution;
    out.heuristic_rung = rung;
    LevelSubstitution full = cand;
    for (const auto& [v, l] : partial.entries()) full.set(v, cand.apply(l));
    out.solution = std::move(full);
    if (hook) {
      UnifyStep step;
      step.kind = UnifyStep::Kind::Heuristic;
      step.rung = rung;
      step.sigma = cand;
      hook(step);
    }
    return out;
  };

  {  // rung 1: all remaining variables to 0
    LevelSubstitution cand;
    for (LevelVar v : fvs) cand.set(v, Level::zero());
    if (auto out = accept(std::move(cand), 1)) return *out;
  }
  {  // rung 2: force variable-multiset equality per equation
    LevelSubstitution cand;
    for (const auto& e : remaining.equations()) {
      std::set<LevelVar> lv = level_free_vars(e.lhs), rv = level_free_vars(e.rhs);
      auto assign = [&](const std::set<LevelVar>& only, const std::set<LevelVar>& other) {
        std::vector<Level> join_parts;
        for (LevelVar v : other) join_parts.push_back(Level::var(v));
        Level image = Level::join(join_parts);
        for (LevelVar v : only)
          if (!cand.lookup(v)) cand.set(v, image);
      };
      std::set<LevelVar> lonly, ronly;
      for (LevelVar v : lv)
        if (!rv.count(v)) lonly.insert(v);
      for (LevelVar v : rv)
        if (!lv.count(v)) ronly.insert(v);
      assign(lonly, rv);
      assign(ronly, lv);
    }
    if (auto out = accept(std::move(cand), 2)) return *out;
  }
  {  // rung 3: all remaining variables to a single shared fresh variable
    Level u = Level::var(fresh.fresh());
    LevelSubstitution cand;
    for (LevelVar v : fvs) cand.set(v, u);
    if (auto out = accept(std::move(cand), 3)) return *out;
  }

  UnifyOutcome out;
  out.kind = UnifyOutcome::Kind::Stuck;
  out.residual = remaining;
  out.solution = partial;
  if (hook) {
    UnifyStep step;
    step.kind = UnifyStep::Kind::Stuck;
    step.remaining = remaining.size();
    hook(step);
  }
  return out;
}

namespace detail {

// A two-variable equation like `i ≐ j ⊔ k` has an mgu, but that mgu replaces
// the variables by joins of fresh families; solving such equations while
// plain renamings are still pending both inflates the variable space
// (compounding joins grow the fresh families combinatorially) and commits to
// join structure that later equations would have collapsed. The postponement
// loop therefore orders work: renamings and single-variable eliminations
// first, join-producing steps only when nothing else fires. Any completion
// order composes to an mgu of the whole system, so deferral never costs
// correctness — only the representation (and the running time) differ.
inline bool introduces_joins(const Classification& cls) {
  if (cls.kind != Classification::Kind::MguCaseII) return false;
  return !(cls.shared.empty() && cls.left_only.size() == 1 && cls.right_only.size() == 1);
}

}  // namespace detail

// Constraint-postponement loop: repeatedly scan pending equations and apply
// one whose canonical form is trivial, refutable, or admits an mgu; equations
// that are solvable-without-mgu are postponed. The scan is deterministic and
// prioritized: first the earliest-inserted equation solvable without
// introducing join structure (trivial, refutation, single-variable
// elimination, variable renaming), then — only when no such equation exists —
// the earliest join-producing one. Each applied step removes one equation, so
// at most |p| steps run. Success yields an mgu of the whole problem;
// NoSolution is definitive; Stuck problems are genuinely beyond
// single-equation reasoning (the procedure is incomplete for simultaneous
// systems, by design).
inline UnifyOutcome unify(const Problem& p, FreshGen& fresh, const UnifyOptions& opts = {},
                          const StepHook& hook = nullptr) {
  Configuration cfg;
  cfg.pending = p;

  for (;;) {
    bool fired = false;
    size_t chosen = cfg.pending.equations().size();
    Classification chosen_cls{};
    size_t first_join = cfg.pending.equations().size();
    Classification first_join_cls{};

    for (size_t idx = 0; idx < cfg.pending.equations().size(); ++idx) {
      Equation eq = cfg.pending.equations()[idx];
      Classification cls = classify(canonicalize_equation(eq));

      if (cls.kind == Classification::Kind::SolvableNoMgu) continue;

      if (cls.kind == Classification::Kind::NoUnifier) {
        if (hook) {
          UnifyStep step;
          step.kind = UnifyStep::Kind::Fail;
          step.eq = eq;
          hook(step);
        }
        UnifyOutcome out;
        out.kind = UnifyOutcome::Kind::NoSolution;
        out.residual.add(eq);
        return out;
      }

      if (detail::introduces_joins(cls)) {
        if (first_join == cfg.pending.equations().size()) {
          first_join = idx;
          first_join_cls = cls;
        }
        continue;
      }

      chosen = idx;
      chosen_cls = cls;
      break;
    }

    if (chosen == cfg.pending.equations().size() && first_join < cfg.pending.equations().size()) {
      chosen = first_join;
      chosen_cls = first_join_cls;
    }

    if (chosen < cfg.pending.equations().size()) {
      // Trivial or an mgu case: drop the equation and apply the substitution.
      Equation eq = cfg.pending.equations()[chosen];
      LevelSubstitution sigma = build_mgu(chosen_cls, fresh);
      Problem rest;
      for (size_t j = 0; j < cfg.pending.equations().size(); ++j) {
        if (j == chosen) continue;
        const Equation& other = cfg.pending.equations()[j];
        rest.add(Equation{sigma.apply(other.lhs), sigma.apply(other.rhs)});
      }
      LevelSubstitution next = sigma;
      for (const auto& [v, l] : cfg.solution.entries()) next.set(v, sigma.apply(l));
      cfg.pending = std::move(rest);
      cfg.solution = std::move(next);
      detail::check_solver_invariants(cfg);
      if (hook) {
        UnifyStep step;
        step.kind = UnifyStep::Kind::Solve;
        step.eq = eq;
        step.sigma = sigma;
        step.after = &cfg;
        hook(step);
      }
      fired = true;
    }

    if (fired) continue;

    if (cfg.pending.empty()) {
      UnifyOutcome out;
      out.kind = UnifyOutcome::Kind::Success;
      out.solution = cfg.solution;
      return out;
    }

    if (opts.heuristic) return heuristic_step(cfg.pending, cfg.solution, fresh, hook);

    if (hook) {
      UnifyStep step;
      step.kind = UnifyStep::Kind::Stuck;
      step.remaining = cfg.pending.size();
      hook(step);
    }
    UnifyOutcome out;
    out.kind = UnifyOutcome::Kind::Stuck;
    out.residual = cfg.pending;
    out.solution = cfg.solution;
    return out;
  }
}

}  // namespace upelab
