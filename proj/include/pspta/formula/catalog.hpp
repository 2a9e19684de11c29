#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pspta/adjust/adjuster.hpp"
#include "pspta/errors.hpp"
#include "pspta/observe/catalog.hpp"
#include "pspta/oracle/query.hpp"
#include "pspta/psp/grammar.hpp"
#include "pspta/route/router.hpp"

namespace pspta::formula {

struct Query {
  std::string text;
  oracle::Shape shape = oracle::Shape::Invariantly;
  bool operator==(const Query&) const = default;
};

/// Wraps query text after checking that it is one of the five supported shapes.
inline Query make_query(std::string text) {
  auto q = oracle::parse_query(text);
  return {std::move(text), q.shape};
}

namespace detail {

inline std::string paren(const std::string& s) { return "(" + s + ")"; }

inline std::string window(const std::string& gc, const psp::Interval& iv) {
  std::string w = gc + " >= " + std::to_string(iv.lower);
  if (iv.upper) w += " && " + gc + " <= " + std::to_string(*iv.upper);
  return w;
}

inline const adjust::StateInstrumentation& flags(const adjust::AdjustmentReport* r, const psp::StateRef& ref) {
  if (!r) throw BindingError("flag formula needs an adjustment report");
  return r->at(ref);
}

/// The location, or any of its own pseudo-locations.
inline std::string or_pseudo(const adjust::AdjustmentReport* r, const psp::StateRef& ref) {
  const auto* s = r ? r->find(ref) : nullptr;
  if (!s) return ref;
  std::string out = ref + " || " + s->template_name + "." + s->enter_location;
  for (const auto& l : s->left_locations) out += " || " + s->template_name + "." + l;
  return paren(out);
}

} // namespace detail

/// Query for a FormulaOnly or Flag property. Timed FormulaOnly queries read the global
/// clock, named as in `report` when one is given and `gc` otherwise.
inline Query formula_for(const psp::PropertySpec& spec, const adjust::AdjustmentReport* report = nullptr) {
  using psp::PatternKind;
  using psp::Role;
  using psp::ScopeKind;
  using detail::paren;
  const auto kind = route::classify(spec);
  if (kind == route::ProcessKind::Observer)
    throw WrongProcess(std::string(psp::to_string(spec.pattern)) + " " + std::string(psp::to_string(spec.scope)) +
                       " is checked with an observer, not a formula");

  const auto p = spec.pattern;
  if (kind == route::ProcessKind::FormulaOnly) {
    if (p == PatternKind::Response) return make_query(spec.ref(Role::P) + " --> " + spec.ref(Role::S));
    const std::string P = spec.ref(Role::P);
    if (!spec.timed) {
      switch (p) {
        case PatternKind::Absence: return make_query("A[] not " + P);
        case PatternKind::Universality: return make_query("A[] " + P);
        default: return make_query("A<> " + P);
      }
    }
    std::string gc = "gc";
    if (report) {
      auto it = report->generated_names.find("gc");
      if (it != report->generated_names.end()) gc = it->second;
    }
    const std::string w = detail::window(gc, *spec.interval);
    switch (p) {
      case PatternKind::Absence: return make_query("A[] " + paren(paren(w) + " imply not " + P));
      case PatternKind::Universality: return make_query("A[] " + paren(paren(w) + " imply " + P));
      default: return make_query("A<> " + paren(P + " && " + w));
    }
  }

  // Flag
  if (spec.scope == ScopeKind::After) {
    const auto& q = detail::flags(report, spec.ref(Role::Q));
    const std::string P = spec.ref(Role::P);
    switch (p) {
      case PatternKind::Absence: return make_query("A[] " + paren(q.held_once_flag + " imply not " + P));
      case PatternKind::Existence: return make_query(q.held_once_flag + " --> " + P);
      default: return make_query("A[] " + paren(q.held_once_flag + " imply " + detail::or_pseudo(report, P)));
    }
  }
  // ResponseInvariance Globally: once P has been entered, S holds from then on
  const auto& pf = detail::flags(report, spec.ref(Role::P));
  return make_query("A[] " + paren(pf.held_once_flag + " imply " + detail::or_pseudo(report, spec.ref(Role::S))));
}

inline Query formula_for(const psp::PropertySpec& spec, const adjust::AdjustmentReport& report) {
  return formula_for(spec, &report);
}

/// The verdict query carried by an observer instance.
inline Query verdict_query_for(const observe::ObserverInstance& inst) {
  if (inst.verdict.kind == observe::VerdictKind::Safety)
    return make_query("A[] not " + inst.name + "." + inst.verdict.error_location);
  return make_query(inst.name + "." + inst.verdict.trigger + " --> " + inst.name + "." + inst.verdict.accepting);
}

struct QueryFileEntry {
  std::string id;
  std::string english;
  Query query;
};

/// `.q` text: each query preceded by a `//` line with the property id and its sentence.
inline std::string render_query_file(const std::vector<QueryFileEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    std::string comment = e.id.empty() ? e.english : e.id + " " + e.english;
    for (char& c : comment)
      if (c == '\n' || c == '\r') c = ' ';
    out += "// " + comment + "\n" + e.query.text + "\n";
  }
  return out;
}

/// Queries of a `.q` file, in order; comment lines are dropped.
inline std::vector<std::string> parse_query_file(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && line.compare(first, 2, "//") != 0) {
      auto last = line.find_last_not_of(" \t\r");
      out.push_back(line.substr(first, last - first + 1));
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return out;
}

} // namespace pspta::formula
