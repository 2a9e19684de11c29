#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pspta/errors.hpp"

namespace pspta::psp {

enum class ScopeKind { Globally, Before, After, Between, AfterUntil };

enum class PatternKind {
  Absence,
  Universality,
  Existence,
  BoundedExistence,
  MinimumDuration,
  MaximumDuration,
  Recurrence,
  Precedence,
  PrecedenceChainN1,
  PrecedenceChain1N,
  ConstrainedPrecedenceChainN1,
  ConstrainedPrecedenceChain1N,
  Response,
  ResponseChainN1,
  ResponseChain1N,
  ConstrainedResponse,
  ConstrainedResponseChainN1,
  ConstrainedResponseChain1N,
  ResponseInvariance,
  Until,
};

inline constexpr std::array<PatternKind, 20> kAllPatterns = {
    PatternKind::Absence,
    PatternKind::Universality,
    PatternKind::Existence,
    PatternKind::BoundedExistence,
    PatternKind::MinimumDuration,
    PatternKind::MaximumDuration,
    PatternKind::Recurrence,
    PatternKind::Precedence,
    PatternKind::PrecedenceChainN1,
    PatternKind::PrecedenceChain1N,
    PatternKind::ConstrainedPrecedenceChainN1,
    PatternKind::ConstrainedPrecedenceChain1N,
    PatternKind::Response,
    PatternKind::ResponseChainN1,
    PatternKind::ResponseChain1N,
    PatternKind::ConstrainedResponse,
    PatternKind::ConstrainedResponseChainN1,
    PatternKind::ConstrainedResponseChain1N,
    PatternKind::ResponseInvariance,
    PatternKind::Until,
};

inline constexpr std::array<ScopeKind, 5> kAllScopes = {
    ScopeKind::Globally, ScopeKind::Before, ScopeKind::After, ScopeKind::Between, ScopeKind::AfterUntil};

inline std::string_view to_string(PatternKind p) {
  switch (p) {
    case PatternKind::Absence: return "Absence";
    case PatternKind::Universality: return "Universality";
    case PatternKind::Existence: return "Existence";
    case PatternKind::BoundedExistence: return "BoundedExistence";
    case PatternKind::MinimumDuration: return "MinimumDuration";
    case PatternKind::MaximumDuration: return "MaximumDuration";
    case PatternKind::Recurrence: return "Recurrence";
    case PatternKind::Precedence: return "Precedence";
    case PatternKind::PrecedenceChainN1: return "PrecedenceChainN1";
    case PatternKind::PrecedenceChain1N: return "PrecedenceChain1N";
    case PatternKind::ConstrainedPrecedenceChainN1: return "ConstrainedPrecedenceChainN1";
    case PatternKind::ConstrainedPrecedenceChain1N: return "ConstrainedPrecedenceChain1N";
    case PatternKind::Response: return "Response";
    case PatternKind::ResponseChainN1: return "ResponseChainN1";
    case PatternKind::ResponseChain1N: return "ResponseChain1N";
    case PatternKind::ConstrainedResponse: return "ConstrainedResponse";
    case PatternKind::ConstrainedResponseChainN1: return "ConstrainedResponseChainN1";
    case PatternKind::ConstrainedResponseChain1N: return "ConstrainedResponseChain1N";
    case PatternKind::ResponseInvariance: return "ResponseInvariance";
    case PatternKind::Until: return "Until";
  }
  return "?";
}

inline std::string_view to_string(ScopeKind s) {
  switch (s) {
    case ScopeKind::Globally: return "Globally";
    case ScopeKind::Before: return "Before";
    case ScopeKind::After: return "After";
    case ScopeKind::Between: return "Between";
    case ScopeKind::AfterUntil: return "AfterUntil";
  }
  return "?";
}

inline std::optional<PatternKind> pattern_from_string(std::string_view s) {
  for (auto p : kAllPatterns)
    if (to_string(p) == s) return p;
  return std::nullopt;
}

inline std::optional<ScopeKind> scope_from_string(std::string_view s) {
  for (auto k : kAllScopes)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// Named state positions of a pattern instance. Z is the constraint state of the
/// Constrained* patterns.
enum class Role { P, S, Q, R, Z };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::P: return "P";
    case Role::S: return "S";
    case Role::Q: return "Q";
    case Role::R: return "R";
    case Role::Z: return "Z";
  }
  return "?";
}

/// "Template.Location"
using StateRef = std::string;

inline bool well_formed_ref(const StateRef& ref) {
  auto dot = ref.find('.');
  return dot != std::string::npos && dot > 0 && dot + 1 < ref.size() && ref.find('.', dot + 1) == std::string::npos &&
         ref.find_first_of(" \t{}") == std::string::npos;
}

/// Time window in milliseconds; `upper` empty means unbounded.
struct Interval {
  long long lower = 0;
  std::optional<long long> upper;
  bool operator==(const Interval&) const = default;
};

struct PropertySpec {
  ScopeKind scope = ScopeKind::Globally;
  PatternKind pattern = PatternKind::Absence;
  bool timed = false;
  std::optional<Interval> interval;
  std::optional<long long> count;
  std::map<Role, StateRef> refs;
  /// Ordered members of a chain pattern.
  std::vector<StateRef> chain;

  bool operator==(const PropertySpec&) const = default;

  const StateRef& ref(Role r) const {
    auto it = refs.find(r);
    if (it == refs.end()) throw BindingError("property has no " + std::string(to_string(r)) + " state");
    return it->second;
  }
  bool has(Role r) const { return refs.count(r) != 0; }

  /// Every distinct state reference, in first-mention order P, S, Q, R, Z, chain.
  std::vector<StateRef> distinct_refs() const {
    std::vector<StateRef> out;
    auto push = [&](const StateRef& s) {
      for (const auto& o : out)
        if (o == s) return;
      out.push_back(s);
    };
    for (auto r : {Role::P, Role::S, Role::Q, Role::R, Role::Z})
      if (has(r)) push(refs.at(r));
    for (const auto& c : chain) push(c);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Role requirements

struct RoleShape {
  bool p = false, s = false, z = false, chain = false;
};

inline RoleShape pattern_roles(PatternKind k) {
  using P = PatternKind;
  switch (k) {
    case P::Absence: case P::Universality: case P::Existence: case P::BoundedExistence:
    case P::MinimumDuration: case P::MaximumDuration: case P::Recurrence:
      return {true, false, false, false};
    case P::Precedence: case P::Response: case P::ResponseInvariance: case P::Until:
      return {true, true, false, false};
    case P::ConstrainedResponse: return {true, true, true, false};
    case P::PrecedenceChainN1: case P::ResponseChain1N: return {true, false, false, true};
    case P::PrecedenceChain1N: case P::ResponseChainN1: return {false, true, false, true};
    case P::ConstrainedPrecedenceChainN1: case P::ConstrainedResponseChain1N: return {true, false, true, true};
    case P::ConstrainedPrecedenceChain1N: case P::ConstrainedResponseChainN1: return {false, true, true, true};
  }
  return {};
}

inline bool is_duration(PatternKind k) {
  return k == PatternKind::MinimumDuration || k == PatternKind::MaximumDuration;
}

/// Throws RoleError when the spec breaks a structural invariant.
inline void validate(const PropertySpec& s) {
  if (s.timed != s.interval.has_value()) throw RoleError("timed flag must match presence of a time interval");
  if (s.interval) {
    if (s.interval->lower < 0 || (s.interval->upper && *s.interval->upper < 0))
      throw RoleError("time bounds must be non-negative");
    if (s.interval->upper && s.interval->lower > *s.interval->upper)
      throw RoleError("time interval lower bound exceeds upper bound");
    if (s.interval->lower == 0 && !s.interval->upper) throw RoleError("time interval [0, inf) carries no bound");
  }
  if (s.pattern == PatternKind::BoundedExistence) {
    if (!s.count) throw RoleError("bounded existence requires an occurrence count");
    if (*s.count < 0) throw RoleError("occurrence count must be non-negative");
    if (s.timed) throw RoleError("bounded existence has no time-constrained variant");
  } else if (s.count) {
    throw RoleError("only bounded existence carries an occurrence count");
  }
  if (is_duration(s.pattern)) {
    if (!s.timed) throw RoleError(std::string(to_string(s.pattern)) + " requires a time bound");
    if (s.pattern == PatternKind::MinimumDuration && s.interval->upper)
      throw RoleError("minimum duration takes a lower bound only");
    if (s.pattern == PatternKind::MaximumDuration && s.interval->lower != 0)
      throw RoleError("maximum duration takes an upper bound only");
  }

  auto need = [&](Role r, bool required, const char* why) {
    if (s.has(r) != required)
      throw RoleError(std::string(required ? "missing " : "unexpected ") + std::string(to_string(r)) +
                      " state: " + why);
  };
  switch (s.scope) {
    case ScopeKind::Globally: need(Role::Q, false, "scope"); need(Role::R, false, "scope"); break;
    case ScopeKind::Before: need(Role::Q, false, "scope"); need(Role::R, true, "scope"); break;
    case ScopeKind::After: need(Role::Q, true, "scope"); need(Role::R, false, "scope"); break;
    case ScopeKind::Between:
    case ScopeKind::AfterUntil: need(Role::Q, true, "scope"); need(Role::R, true, "scope"); break;
  }
  RoleShape shape = pattern_roles(s.pattern);
  need(Role::P, shape.p, "pattern");
  need(Role::S, shape.s, "pattern");
  need(Role::Z, shape.z, "pattern");
  if (shape.chain && s.chain.size() < 2) throw RoleError("chain patterns need at least two states");
  if (!shape.chain && !s.chain.empty()) throw RoleError("only chain patterns carry a state list");
  for (const auto& [role, ref] : s.refs)
    if (!well_formed_ref(ref)) throw RoleError("malformed state reference '" + ref + "'");
  for (const auto& ref : s.chain)
    if (!well_formed_ref(ref)) throw RoleError("malformed state reference '" + ref + "'");
}

} // namespace pspta::psp
