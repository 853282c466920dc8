#pragma once

// Concrete syntax for signature files, constraint files, and level
// expressions.
//
// Signature grammar (UTF-8, '#' starts a line comment):
//
//   file   := entry*
//   entry  := ident ':' term '.'
//           | 'def' ident ':' term ':=' body '.'
//   term   := '(' ident ':' term ')' '->' term      binder (confined iff the
//                                                   domain is literally Lvl)
//           | ident '=>' term                       abstraction
//           | app ('->' term)?                      non-dependent product
//   app    := atom level-atom{k} atom*              k = level arity of a
//                                                   constant head, else 0
//   atom   := ident | 'Type' | '(' term ')'
//
//   level  := litem ('⊔' litem)*                    left-associative
//   litem  := nat ('+' litem)? | ident | '(' level ')'
//
// Identifiers may carry sort tags ('U@Omega', 'Pi@Box,Omega', 'App@0,3');
// tags are validated against the active theory profile and are only
// meaningful on the six framework constants Ty/Tm/U/Pi/Lam/App.
//
// In a definition's body, leading 'x =>' binders are confined abstractions
// for exactly as many binders as the entry's type has leading confined
// products; every other 'x =>' is a regular abstraction. Constraint files
// are line sequences 'ident : level == level .'.

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "upelab/errors.hpp"
#include "upelab/level.hpp"
#include "upelab/term.hpp"
#include "upelab/unify.hpp"

namespace upelab {

// ---- theory profiles ----
//
// A profile names the sort structure of the input theory: which sorts
// exist, which have a universe above them ('U@s'), and which pairs may form
// products ('Pi@s1,s2' and friends). Validation is lexical: it accepts or
// rejects tagged constants, nothing more, since the pipeline erases sorts
// before typechecking.

struct PtsProfile {
  enum class Kind {
    Impredicative,  // sorts Omega, Box; U@Omega only; rules (Omega,Omega) and (Box,Omega)
    Predicative,    // sorts are decimal naturals; all U@n; all rules
    Open,           // any tags accepted
  };
  Kind kind = Kind::Impredicative;

  static std::optional<PtsProfile> by_name(const std::string& name) {
    if (name == "I" || name == "i") return PtsProfile{Kind::Impredicative};
    if (name == "P" || name == "p") return PtsProfile{Kind::Predicative};
    if (name == "open") return PtsProfile{Kind::Open};
    return std::nullopt;
  }

  static bool is_nat(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
  }

  bool sort_ok(const std::string& s) const {
    switch (kind) {
      case Kind::Impredicative: return s == "Omega" || s == "Box";
      case Kind::Predicative: return is_nat(s);
      case Kind::Open: return true;
    }
    return false;
  }
  // 'U@s' is legal iff some sort sits above s.
  bool axiom_ok(const std::string& s) const {
    switch (kind) {
      case Kind::Impredicative: return s == "Omega";
      case Kind::Predicative: return is_nat(s);
      case Kind::Open: return true;
    }
    return false;
  }
  bool rule_ok(const std::string& s1, const std::string& s2) const {
    switch (kind) {
      case Kind::Impredicative:
        return (s1 == "Omega" || s1 == "Box") && s2 == "Omega";
      case Kind::Predicative:
        return is_nat(s1) && is_nat(s2);
      case Kind::Open:
        return true;
    }
    return false;
  }
};

// ---- tokens ----

namespace detail {

enum class Tok {
  Ident,   // possibly sort-tagged
  Nat,
  LParen,
  RParen,
  Colon,
  ColonEq,
  Dot,
  Arrow,    // ->
  DArrow,   // =>
  Join,     // ⊔ or |
  Plus,
  EqEq,     // ==
  KwDef,
  KwType,
  End,
};

struct Token {
  Tok kind;
  std::string text;  // Ident: full name incl. tags; Nat: digits
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, int line, int col) const {
    throw ParseError(msg, line, col);
  }

  bool ident_start(char c) const {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  bool ident_char(char c) const {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
  }
  bool tag_char(char c) const {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  void bump(char c) {
    ++pos_;
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
  }

  void advance() {
    // Skip whitespace and comments.
    for (;;) {
      if (pos_ >= src_.size()) {
        tok_ = {Tok::End, "", line_, col_};
        return;
      }
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump(src_[pos_]);
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        bump(c);
        continue;
      }
      break;
    }
    int line = line_, col = col_;
    char c = src_[pos_];
    auto two = [&](char a, char b) {
      return c == a && pos_ + 1 < src_.size() && src_[pos_ + 1] == b;
    };
    if (two('-', '>')) { bump('-'); bump('>'); tok_ = {Tok::Arrow, "->", line, col}; return; }
    if (two('=', '>')) { bump('='); bump('>'); tok_ = {Tok::DArrow, "=>", line, col}; return; }
    if (two(':', '=')) { bump(':'); bump('='); tok_ = {Tok::ColonEq, ":=", line, col}; return; }
    if (two('=', '=')) { bump('='); bump('='); tok_ = {Tok::EqEq, "==", line, col}; return; }
    switch (c) {
      case '(': bump(c); tok_ = {Tok::LParen, "(", line, col}; return;
      case ')': bump(c); tok_ = {Tok::RParen, ")", line, col}; return;
      case ':': bump(c); tok_ = {Tok::Colon, ":", line, col}; return;
      case '.': bump(c); tok_ = {Tok::Dot, ".", line, col}; return;
      case '+': bump(c); tok_ = {Tok::Plus, "+", line, col}; return;
      case '|': bump(c); tok_ = {Tok::Join, "|", line, col}; return;
      default: break;
    }
    // UTF-8 for ⊔ is E2 8A 94.
    if (static_cast<unsigned char>(c) == 0xE2 && pos_ + 2 < src_.size() &&
        static_cast<unsigned char>(src_[pos_ + 1]) == 0x8A &&
        static_cast<unsigned char>(src_[pos_ + 2]) == 0x94) {
      bump(c); bump(src_[pos_]); bump(src_[pos_]);
      tok_ = {Tok::Join, "\xE2\x8A\x94", line, col};
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string digits;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        digits += src_[pos_];
        bump(src_[pos_]);
      }
      tok_ = {Tok::Nat, digits, line, col};
      return;
    }
    if (ident_start(c)) {
      std::string name;
      while (pos_ < src_.size() && ident_char(src_[pos_])) {
        name += src_[pos_];
        bump(src_[pos_]);
      }
      if (pos_ < src_.size() && src_[pos_] == '@') {
        name += '@';
        bump('@');
        auto read_tag = [&]() {
          if (pos_ >= src_.size() || !tag_char(src_[pos_]))
            fail("expected sort tag after '@'", line_, col_);
          while (pos_ < src_.size() && tag_char(src_[pos_])) {
            name += src_[pos_];
            bump(src_[pos_]);
          }
        };
        read_tag();
        if (pos_ < src_.size() && src_[pos_] == ',') {
          name += ',';
          bump(',');
          read_tag();
        }
      } else if (name == "def") {
        tok_ = {Tok::KwDef, name, line, col};
        return;
      } else if (name == "Type") {
        tok_ = {Tok::KwType, name, line, col};
        return;
      }
      tok_ = {Tok::Ident, name, line, col};
      return;
    }
    fail("unexpected character '" + std::string(1, c) + "'", line, col);
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

}  // namespace detail

// ---- parsed entries ----

struct ParsedEntry {
  std::string name;
  Term type;
  std::optional<Term> body;
};

// Level arities of the framework constants in elaborated output files.
inline std::map<std::string, size_t> output_constant_arities() {
  return {{"Ty", 1}, {"Tm", 1}, {"U", 1}, {"Pi", 2}, {"Lam", 2}, {"App", 2}};
}

namespace detail {

class Parser {
 public:
  Parser(const std::string& src, const PtsProfile& profile,
         std::map<std::string, size_t> const_arities, VarPool& pool)
      : lex_(src), profile_(profile), arities_(std::move(const_arities)), pool_(&pool) {}

  std::vector<ParsedEntry> file() {
    std::vector<ParsedEntry> out;
    while (lex_.peek().kind != Tok::End) out.push_back(entry());
    return out;
  }

  // A constraint file: lines 'ident : level == level .'. Free level names
  // are interned verbatim.
  std::vector<std::pair<std::string, Equation>> constraint_file() {
    std::vector<std::pair<std::string, Equation>> out;
    while (lex_.peek().kind != Tok::End) {
      Token name = expect(Tok::Ident, "entry name");
      expect(Tok::Colon, "':'");
      Level lhs = level();
      expect(Tok::EqEq, "'=='");
      Level rhs = level();
      expect(Tok::Dot, "'.'");
      out.emplace_back(name.text, Equation{lhs, rhs});
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const Token& at, const std::string& msg) {
    throw ParseError(msg, at.line, at.col);
  }
  Token expect(Tok k, const std::string& what) {
    Token t = lex_.peek();
    if (t.kind != k) fail(t, "expected " + what + ", found '" + t.text + "'");
    return lex_.next();
  }

  // ---- scopes ----

  struct Binding {
    std::string name;
    bool confined;
    int fvar_id;      // regular binders
    LevelVar var;     // confined binders
  };

  const Binding* lookup(const std::string& name) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->name == name) return &*it;
    return nullptr;
  }

  int push_regular(const std::string& name) {
    int id = ++fvar_counter_;
    scope_.push_back({name, false, id, 0});
    return id;
  }
  LevelVar push_confined(const std::string& name) {
    // A unique pool entry per binder occurrence; the display name is kept
    // as the binder hint, so shadowing cannot conflate occurrences.
    LevelVar v = pool_->intern("parse$" + std::to_string(++scratch_counter_));
    scope_.push_back({name, true, 0, v});
    return v;
  }
  void pop() { scope_.pop_back(); }

  // ---- sorted-constant validation ----

  void validate_tagged(const Token& t) {
    const std::string& s = t.text;
    size_t at = s.find('@');
    if (at == std::string::npos) return;
    std::string base = s.substr(0, at);
    std::string tags = s.substr(at + 1);
    size_t comma = tags.find(',');
    std::string t1 = comma == std::string::npos ? tags : tags.substr(0, comma);
    std::string t2 = comma == std::string::npos ? "" : tags.substr(comma + 1);
    bool binary = base == "Pi" || base == "Lam" || base == "App";
    bool unary = base == "Ty" || base == "Tm" || base == "U";
    if (!binary && !unary)
      fail(t, "sort tags are only valid on Ty/Tm/U/Pi/Lam/App, not '" + base + "'");
    if (binary && t2.empty()) fail(t, "'" + base + "' needs two sort tags");
    if (unary && !t2.empty()) fail(t, "'" + base + "' takes one sort tag");
    bool ok = binary ? profile_.rule_ok(t1, t2)
              : base == "U" ? profile_.axiom_ok(t1)
                            : profile_.sort_ok(t1);
    if (!ok) fail(t, "sort tags on '" + s + "' are not part of the active theory profile");
  }

  // ---- entries ----

  ParsedEntry entry() {
    bool is_def = lex_.peek().kind == Tok::KwDef;
    if (is_def) lex_.next();
    Token name = expect(Tok::Ident, "entry name");
    if (name.text.find('@') != std::string::npos)
      fail(name, "entry names cannot carry sort tags");
    expect(Tok::Colon, "':'");
    Term type = term();
    ParsedEntry e{name.text, type, std::nullopt};
    if (is_def) {
      expect(Tok::ColonEq, "':='");
      e.body = def_body(leading_confined_count(type));
    }
    expect(Tok::Dot, "'.' at the end of the entry");
    arities_[e.name] = leading_confined_count(e.type);
    return e;
  }

  static size_t leading_confined_count(Term t) {
    size_t k = 0;
    while (t.kind() == Term::Kind::CPi) {
      ++k;
      t = t.cod();
    }
    return k;
  }

  // Leading binders of a definition body are confined abstractions for as
  // many binders as the type's confined-product prefix; the kernel reports
  // any arity mismatch later.
  Term def_body(size_t confined_budget) {
    if (confined_budget > 0 && lex_.peek().kind == Tok::Ident) {
      Token id = lex_.peek();
      if (peek2_is_darrow()) {
        lex_.next();
        lex_.next();
        LevelVar v = push_confined(id.text);
        Term body = def_body(confined_budget - 1);
        pop();
        return cabs_closing(id.text, v, body);
      }
    }
    return term();
  }

  bool peek2_is_darrow() {
    // The lexer is single-token lookahead; clone-free two-token peek via a
    // saved copy is not available, so probe on a copy of the lexer.
    detail::Lexer probe = lex_;
    probe.next();
    return probe.peek().kind == Tok::DArrow;
  }

  // ---- terms ----

  Term term() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::LParen && lparen_starts_binder()) return binder();
    if (t.kind == Tok::Ident && peek2_is_darrow()) {
      Token id = lex_.next();
      lex_.next();  // =>
      int fv = push_regular(id.text);
      Term body = term();
      pop();
      return abs_closing(id.text, fv, body);
    }
    Term head = app();
    if (lex_.peek().kind == Tok::Arrow) {
      lex_.next();
      Term cod = term();
      // Non-dependent product; the codomain ignores the binder.
      return Term::pi("_", head, close_nothing(cod));
    }
    return head;
  }

  // The codomain of a sugar arrow contains no occurrence of the binder;
  // close_nothing documents that no shifting is needed.
  static Term close_nothing(Term cod) { return cod; }

  bool lparen_starts_binder() {
    detail::Lexer probe = lex_;
    probe.next();  // (
    if (probe.peek().kind != Tok::Ident) return false;
    probe.next();
    return probe.peek().kind == Tok::Colon;
  }

  Term binder() {
    expect(Tok::LParen, "'('");
    Token id = expect(Tok::Ident, "binder name");
    expect(Tok::Colon, "':'");
    Term dom = term();
    expect(Tok::RParen, "')'");
    expect(Tok::Arrow, "'->' after binder");
    bool confined = dom.kind() == Term::Kind::Const && dom.const_name() == "Lvl";
    if (confined) {
      LevelVar v = push_confined(id.text);
      Term cod = term();
      pop();
      return cpi_closing(id.text, dom, v, cod);
    }
    int fv = push_regular(id.text);
    Term cod = term();
    pop();
    return pi_closing(id.text, dom, fv, cod);
  }

  Term app() {
    Token head_tok = lex_.peek();
    Term head = atom();
    // A constant head with a known level arity consumes that many level
    // arguments before any term arguments.
    if (head.kind() == Term::Kind::Const) {
      auto it = arities_.find(head.const_name());
      if (it != arities_.end()) {
        for (size_t j = 0; j < it->second; ++j) {
          if (!starts_level_atom(lex_.peek()))
            fail(lex_.peek(), "'" + head_tok.text + "' expects " + std::to_string(it->second) +
                                  " level argument(s)");
          head = Term::capp(head, level_atom());
        }
      }
    }
    while (starts_term_atom(lex_.peek())) head = Term::app(head, atom());
    return head;
  }

  static bool starts_term_atom(const Token& t) {
    return t.kind == Tok::Ident || t.kind == Tok::LParen || t.kind == Tok::KwType;
  }
  static bool starts_level_atom(const Token& t) {
    return t.kind == Tok::Ident || t.kind == Tok::LParen || t.kind == Tok::Nat;
  }

  Term atom() {
    Token t = lex_.peek();
    switch (t.kind) {
      case Tok::KwType:
        lex_.next();
        return Term::type_sort();
      case Tok::LParen: {
        lex_.next();
        Term inner = term();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Ident: {
        lex_.next();
        if (const Binding* b = lookup(t.text)) {
          if (b->confined)
            fail(t, "level variable '" + t.text + "' used in term position");
          return Term::fvar(b->fvar_id);
        }
        validate_tagged(t);
        return Term::constant(t.text);
      }
      default:
        fail(t, "expected a term, found '" + t.text + "'");
    }
  }

  // ---- levels ----

  Level level() {
    Level acc = level_item();
    while (lex_.peek().kind == Tok::Join) {
      lex_.next();
      acc = Level::max(acc, level_item());
    }
    return acc;
  }

  Level level_item() {
    Token t = lex_.peek();
    if (t.kind == Tok::Nat) {
      lex_.next();
      if (t.text.size() > 6) fail(t, "level constant too large");
      unsigned long n = std::stoul(t.text);
      Level base = Level::zero();
      if (lex_.peek().kind == Tok::Plus) {
        lex_.next();
        base = level_item();
      }
      for (unsigned long j = 0; j < n; ++j) base = Level::succ(base);
      return base;
    }
    return level_atom();
  }

  Level level_atom() {
    Token t = lex_.peek();
    switch (t.kind) {
      case Tok::Nat:
        return level_item();
      case Tok::LParen: {
        lex_.next();
        Level inner = level();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Ident: {
        lex_.next();
        if (t.text.find('@') != std::string::npos)
          fail(t, "sort tags cannot appear in level expressions");
        if (const Binding* b = lookup(t.text)) {
          if (!b->confined)
            fail(t, "term variable '" + t.text + "' used in level position");
          return Level::var(b->var);
        }
        return Level::var(pool_->intern(t.text));
      }
      default:
        fail(t, "expected a level, found '" + t.text + "'");
    }
  }

  detail::Lexer lex_;
  PtsProfile profile_;
  std::map<std::string, size_t> arities_;
  VarPool* pool_;
  std::vector<Binding> scope_;
  int fvar_counter_ = 0;
  int scratch_counter_ = 0;
};

}  // namespace detail

// Parses a signature file. `const_arities` seeds the level arities of
// constants (use output_constant_arities() for elaborated files, empty for
// sorted input files); entries parsed earlier in the file extend it.
inline std::vector<ParsedEntry> parse_signature(const std::string& text,
                                                const PtsProfile& profile, VarPool& pool,
                                                std::map<std::string, size_t> const_arities = {}) {
  detail::Parser p(text, profile, std::move(const_arities), pool);
  return p.file();
}

inline std::vector<std::pair<std::string, Equation>> parse_constraint_file(
    const std::string& text, VarPool& pool) {
  detail::Parser p(text, PtsProfile{}, {}, pool);
  return p.constraint_file();
}

}  // namespace upelab
