#pragma once

#include <stdexcept>
#include <string>

namespace upelab {

// Base class for all library errors so callers can catch everything at once.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Lexical or grammatical problem in an input file. Positions are 1-based.
struct ParseError : Error {
  int line = 0;
  int col = 0;
  ParseError(const std::string& msg, int line_, int col_)
      : Error("parse error at " + std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg),
        line(line_), col(col_) {}
};

// A term failed kernel type checking. `where` is a breadcrumb into the term.
struct TypeError : Error {
  std::string where;
  TypeError(const std::string& msg, const std::string& where_ = "")
      : Error(where_.empty() ? msg : msg + " (at " + where_ + ")"), where(where_) {}
};

// Weak-head normalization exceeded its step budget; treated as divergence.
struct FuelExhausted : Error {
  explicit FuelExhausted(const std::string& msg) : Error(msg) {}
};

// Attempt to append an entry whose name is already present in the signature.
struct DuplicateName : Error {
  explicit DuplicateName(const std::string& name) : Error("duplicate entry name: " + name) {}
};

// A term references a constant that is neither framework nor previously declared.
struct UnknownConstant : Error {
  explicit UnknownConstant(const std::string& name) : Error("unknown constant: " + name) {}
};

// Structural failure during constraint-generating elaboration (e.g. applying
// a non-function, or a binder checked against a type that is not a product).
struct ElabError : Error {
  explicit ElabError(const std::string& msg) : Error(msg) {}
};

// Head-symbol clash while comparing two types during elaboration.
// A ConvError is a kind of ElabError: both abort elaboration of the entry.
struct ConvError : ElabError {
  explicit ConvError(const std::string& msg) : ElabError(msg) {}
};

// A user constraint file referenced an unknown entry or an unknown generated
// level variable, or was malformed beyond the lexical level.
struct UserConstraintError : Error {
  explicit UserConstraintError(const std::string& msg) : Error(msg) {}
};

// The re-check of a freshly generalized entry failed. This indicates a bug in
// the pipeline (the whole point of elaboration is that this cannot happen),
// so it is reported under a dedicated type and never downgraded.
struct PostCheckFailed : Error {
  explicit PostCheckFailed(const std::string& msg) : Error("post-check failed: " + msg) {}
};

}  // namespace upelab
