#pragma once

#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pspta/errors.hpp"
#include "pspta/psp/spec.hpp"

namespace pspta::route {

enum class ProcessKind { FormulaOnly, Flag, Observer };

inline std::string_view to_string(ProcessKind k) {
  switch (k) {
    case ProcessKind::FormulaOnly: return "FormulaOnly";
    case ProcessKind::Flag: return "Flag";
    case ProcessKind::Observer: return "Observer";
  }
  return "?";
}

struct Decision {
  std::optional<ProcessKind> process;  // empty: not applicable
  std::string reason;
};

/// Decision for one cell of the pattern × scope × variant grid.
inline Decision decide(psp::PatternKind p, psp::ScopeKind s, bool timed) {
  using P = psp::PatternKind;
  using S = psp::ScopeKind;
  switch (p) {
    case P::Precedence:
    case P::PrecedenceChainN1:
    case P::PrecedenceChain1N:
    case P::ConstrainedPrecedenceChainN1:
    case P::ConstrainedPrecedenceChain1N:
      if (timed)
        return {std::nullopt, "time-constrained " + std::string(psp::to_string(p)) +
                                  " is not applicable in UPPAAL: every occurrence of S would need its own clock"};
      break;
    case P::BoundedExistence:
      if (timed) return {std::nullopt, "BoundedExistence has no time-constrained variant"};
      break;
    case P::MinimumDuration:
    case P::MaximumDuration:
      if (!timed) return {std::nullopt, std::string(psp::to_string(p)) + " has no qualitative variant"};
      break;
    default: break;
  }
  switch (p) {
    case P::Absence:
    case P::Universality:
    case P::Existence:
      if (s == S::Globally) return {ProcessKind::FormulaOnly, ""};
      if (s == S::After && !timed) return {ProcessKind::Flag, ""};
      break;
    case P::Response:
      if (s == S::Globally && !timed) return {ProcessKind::FormulaOnly, ""};
      break;
    case P::ResponseInvariance:
      if (s == S::Globally && !timed) return {ProcessKind::Flag, ""};
      break;
    default: break;
  }
  return {ProcessKind::Observer, ""};
}

/// Throws Unsupported for the N/A cells.
inline ProcessKind classify(const psp::PropertySpec& spec) {
  Decision d = decide(spec.pattern, spec.scope, spec.timed);
  if (!d.process) throw Unsupported(d.reason);
  return *d.process;
}

struct TableRow {
  psp::PatternKind pattern;
  psp::ScopeKind scope;
  bool timed;
  std::optional<ProcessKind> process;
};

/// Reads the expanded routing table (CSV: pattern,scope,variant,process; process NA for N/A cells).
inline std::vector<TableRow> parse_routing_table(std::istream& in) {
  std::vector<TableRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || (lineno == 1 && line.rfind("pattern,", 0) == 0)) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    auto bad = [&](const std::string& why) {
      return SchemaError("routing table line " + std::to_string(lineno) + ": " + why);
    };
    if (f.size() != 4) throw bad("expected 4 fields");
    auto pat = psp::pattern_from_string(f[0]);
    auto scp = psp::scope_from_string(f[1]);
    if (!pat) throw bad("unknown pattern '" + f[0] + "'");
    if (!scp) throw bad("unknown scope '" + f[1] + "'");
    if (f[2] != "qualitative" && f[2] != "timed") throw bad("unknown variant '" + f[2] + "'");
    TableRow row{*pat, *scp, f[2] == "timed", std::nullopt};
    if (f[3] == "FormulaOnly") row.process = ProcessKind::FormulaOnly;
    else if (f[3] == "Flag") row.process = ProcessKind::Flag;
    else if (f[3] == "Observer") row.process = ProcessKind::Observer;
    else if (f[3] != "NA") throw bad("unknown process '" + f[3] + "'");
    rows.push_back(row);
  }
  return rows;
}

#ifdef PSPTA_DATA_DIR
inline std::vector<TableRow> load_routing_table(std::string path = PSPTA_DATA_DIR "/routing_table.csv") {
#else
inline std::vector<TableRow> load_routing_table(std::string path) {
#endif
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open routing table " + path);
  return parse_routing_table(in);
}

} // namespace pspta::route
