#pragma once

// Batch pipeline: parse a signature file, elaborate its entries in order,
// and write the elaborated signature plus optional trace and Agda-flavored
// renderings.
//
// Exit codes double as machine-readable failure classes:
//   0 success (output written and the whole result re-typechecks)
//   1 configuration or I/O failure
//   2 PARSE          signature or constraint file is malformed
//   3 ELAB           structural elaboration failure (unknown constant,
//                    ill-placed abstraction, bad user constraint, budget)
//   4 CONV           type mismatch outside the level fragment
//   5 NO_SOLUTION    level constraints are unsatisfiable
//   6 STUCK          constraints unsolved (they may still be satisfiable)
//   7 POSTCHECK_BUG  an elaborated result failed re-typechecking

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "upelab/elab.hpp"
#include "upelab/errors.hpp"
#include "upelab/kernel.hpp"
#include "upelab/parser.hpp"
#include "upelab/printer.hpp"

namespace upelab {

struct RunConfig {
  std::string input_path;
  std::string constraints_path;  // optional; empty = none
  std::string output_path;       // required unless dry_run
  std::string agda_out_path;     // optional; empty = none
  bool heuristic = false;
  bool trace = false;  // write <output_path>.trace
  long long fuel = 1'000'000;
  std::string pts = "I";
  bool dry_run = false;  // print erased forms, write nothing
};

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 1;
inline constexpr int kParse = 2;
inline constexpr int kElab = 3;
inline constexpr int kConv = 4;
inline constexpr int kNoSolution = 5;
inline constexpr int kStuck = 6;
inline constexpr int kPostCheck = 7;
}  // namespace exit_code

namespace detail {

inline bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

inline bool write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << content;
    if (!out.flush()) return false;
  }
  return std::rename(tmp.c_str(), path.c_str()) == 0;
}

inline std::string sanitize_module_name(const std::string& path) {
  size_t slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  size_t dot = base.find_last_of('.');
  if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
  std::string name;
  for (char c : base)
    name += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  if (name.empty() || std::isdigit(static_cast<unsigned char>(name[0]))) name = "Output_" + name;
  return name;
}

// Lists an equation system with aligned provenance notes.
inline void report_residual(std::ostream& err, const Problem& residual,
                            const std::vector<std::string>& provenance, const VarPool& pool) {
  const auto& eqs = residual.equations();
  for (size_t j = 0; j < eqs.size(); ++j) {
    err << "  " << equation_to_string(eqs[j], pool);
    if (j < provenance.size()) err << "    [" << provenance[j] << "]";
    err << "\n";
  }
}

}  // namespace detail

// Runs the pipeline described by cfg; diagnostics go to err, dry-run
// listings and progress notes to out.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto profile = PtsProfile::by_name(cfg.pts);
  if (!profile) {
    err << "error[CONFIG] unknown theory profile '" << cfg.pts << "' (expected I, P, or open)\n";
    return exit_code::kConfig;
  }
  if (cfg.fuel < 1) {
    err << "error[CONFIG] fuel must be at least 1\n";
    return exit_code::kConfig;
  }
  if (!cfg.dry_run && cfg.output_path.empty()) {
    err << "error[CONFIG] no output path (use --output, or --dry-run to preview)\n";
    return exit_code::kConfig;
  }

  std::string source;
  if (!detail::read_file(cfg.input_path, source)) {
    err << "error[CONFIG] cannot read input file '" << cfg.input_path << "'\n";
    return exit_code::kConfig;
  }

  VarPool pool;
  std::vector<ParsedEntry> parsed;
  try {
    parsed = parse_signature(source, *profile, pool);
  } catch (const ParseError& e) {
    err << "error[PARSE] " << cfg.input_path << ": " << e.what() << "\n";
    return exit_code::kParse;
  }

  // Constraint files address entries by name and their generated level
  // variables by the names shown in a --dry-run listing.
  std::map<std::string, Problem> user_constraints;
  if (!cfg.constraints_path.empty()) {
    std::string ctext;
    if (!detail::read_file(cfg.constraints_path, ctext)) {
      err << "error[CONFIG] cannot read constraints file '" << cfg.constraints_path << "'\n";
      return exit_code::kConfig;
    }
    std::vector<std::pair<std::string, Equation>> lines;
    try {
      lines = parse_constraint_file(ctext, pool);
    } catch (const ParseError& e) {
      err << "error[PARSE] " << cfg.constraints_path << ": " << e.what() << "\n";
      return exit_code::kParse;
    }
    std::set<std::string> known;
    for (const ParsedEntry& e : parsed) known.insert(e.name);
    for (auto& [name, eq] : lines) {
      if (!known.count(name)) {
        err << "error[ELAB] constraint file references unknown entry '" << name << "'\n";
        return exit_code::kElab;
      }
      user_constraints[name].add(eq);
    }
  }

  Signature sig = upp_signature();
  std::vector<Entry> produced;
  std::string trace_text;

  for (const ParsedEntry& pe : parsed) {
    InputEntry input{pe.name, pe.type, pe.body};
    ElabOptions opts;
    opts.heuristic = cfg.heuristic;
    opts.fuel = cfg.fuel;
    Problem user = user_constraints.count(pe.name) ? user_constraints[pe.name] : Problem{};

    ElabEntryResult result;
    try {
      result = elaborate_entry(sig, input, user, opts, pool);
    } catch (const PostCheckFailed& e) {
      err << "error[POSTCHECK_BUG] entry '" << pe.name << "': " << e.what() << "\n";
      return exit_code::kPostCheck;
    } catch (const ConvError& e) {
      err << "error[CONV] entry '" << pe.name << "': " << e.what() << "\n";
      return exit_code::kConv;
    } catch (const TypeError& e) {
      err << "error[POSTCHECK_BUG] entry '" << pe.name << "': " << e.what() << "\n";
      return exit_code::kPostCheck;
    } catch (const Error& e) {
      // ElabError, UnknownConstant, DuplicateName, UserConstraintError,
      // FuelExhausted: structural failures of this entry.
      err << "error[ELAB] entry '" << pe.name << "': " << e.what() << "\n";
      return exit_code::kElab;
    }

    if (cfg.trace) {
      trace_text += "## " + pe.name + "\n";
      for (const std::string& line : result.trace) trace_text += line + "\n";
    }
    // On failure the run halts, but a requested trace is still written: the
    // solver's step log is the main debugging aid for unsolved systems.
    auto flush_trace = [&]() {
      if (cfg.trace && !cfg.output_path.empty())
        detail::write_file_atomic(cfg.output_path + ".trace", trace_text);
    };

    // User constraints must talk about this entry's generated variables.
    if (!user.empty()) {
      std::set<LevelVar> entry_vars;
      for (LevelVar v : term_level_vars(result.erased_type)) entry_vars.insert(v);
      if (result.erased_body)
        for (LevelVar v : term_level_vars(*result.erased_body)) entry_vars.insert(v);
      std::set<LevelVar> used = user.free_vars();
      for (LevelVar v : used) {
        if (!entry_vars.count(v)) {
          err << "error[ELAB] entry '" << pe.name << "': user constraint mentions '"
              << pool.display(v) << "', which is not a level variable of this entry (run "
              << "--dry-run to list them)\n";
          return exit_code::kElab;
        }
      }
    }

    if (result.status == ElabEntryResult::Status::NoSolution) {
      err << "error[NO_SOLUTION] entry '" << pe.name
          << "': unsatisfiable level constraint\n";
      detail::report_residual(err, result.residual, result.residual_provenance, pool);
      flush_trace();
      return exit_code::kNoSolution;
    }
    if (result.status == ElabEntryResult::Status::Stuck) {
      err << "error[STUCK] entry '" << pe.name << "': " << result.residual.size()
          << " unsolved level constraint(s)\n";
      detail::report_residual(err, result.residual, result.residual_provenance, pool);
      if (!cfg.heuristic) err << "  (a --heuristic retry may find a specific solution)\n";
      flush_trace();
      return exit_code::kStuck;
    }

    if (result.used_heuristic)
      err << "note: entry '" << pe.name << "' solved by fallback guess (rung "
          << result.heuristic_rung << "); the result may be less general than possible\n";

    if (cfg.dry_run) {
      out << "entry " << pe.name << "\n";
      std::vector<LevelVar> vars = term_level_vars(result.erased_type);
      if (result.erased_body) {
        std::set<LevelVar> seen(vars.begin(), vars.end());
        for (LevelVar v : term_level_vars(*result.erased_body))
          if (seen.insert(v).second) vars.push_back(v);
      }
      out << "  level variables:";
      for (LevelVar v : vars) out << " " << pool.display(v);
      out << "\n  erased type: " << print_term(result.erased_type, pool) << "\n";
      if (result.erased_body)
        out << "  erased body: " << print_term(*result.erased_body, pool) << "\n";
      out << "  elaborated: " << print_entry(*result.entry, pool);
    }

    sig.append(*result.entry);
    produced.push_back(*result.entry);
  }

  // Full re-typecheck of the result, from a fresh base signature. Entries
  // were already checked one by one; this guards the whole artifact.
  try {
    Signature re = upp_signature();
    for (const Entry& e : produced) re = check_entry(re, e);
  } catch (const Error& e) {
    err << "error[POSTCHECK_BUG] elaborated signature failed re-typechecking: " << e.what()
        << "\n";
    return exit_code::kPostCheck;
  }

  if (cfg.dry_run) return exit_code::kOk;

  std::string rendered = "# elaborated signature (" + std::to_string(produced.size()) +
                         " entries)\n\n" + print_signature(produced, pool);
  if (!detail::write_file_atomic(cfg.output_path, rendered)) {
    err << "error[CONFIG] cannot write output file '" << cfg.output_path << "'\n";
    return exit_code::kConfig;
  }
  if (cfg.trace) {
    if (!detail::write_file_atomic(cfg.output_path + ".trace", trace_text)) {
      err << "error[CONFIG] cannot write trace file '" << cfg.output_path << ".trace'\n";
      return exit_code::kConfig;
    }
  }
  if (!cfg.agda_out_path.empty()) {
    std::string agda = export_agda_style(
        produced, detail::sanitize_module_name(cfg.agda_out_path), pool);
    if (!detail::write_file_atomic(cfg.agda_out_path, agda)) {
      err << "error[CONFIG] cannot write file '" << cfg.agda_out_path << "'\n";
      return exit_code::kConfig;
    }
  }
  out << "elaborated " << produced.size() << " entries -> " << cfg.output_path << "\n";
  return exit_code::kOk;
}

}  // namespace upelab
