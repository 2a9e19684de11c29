#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pspta/errors.hpp"
#include "pspta/ta/expr.hpp"

namespace pspta::ta {

/// Layout and other semantically irrelevant XML attributes, kept for round-tripping.
/// Keys are dotted paths such as "x", "name.y", "guard.x" or "nails".
using Annotations = std::map<std::string, std::string>;

struct IntDecl {
  long long initial = 0;
  std::optional<std::pair<long long, long long>> range;
  bool operator==(const IntDecl&) const = default;
};

enum class ChannelKind { Plain, Broadcast };

struct DeclarationSet {
  std::set<std::string> clocks;
  std::map<std::string, IntDecl> ints;
  std::map<std::string, bool> bools;
  std::map<std::string, ChannelKind> channels;
  std::map<std::string, long long> constants;

  bool operator==(const DeclarationSet&) const = default;

  bool declares(const std::string& id) const {
    return clocks.count(id) || ints.count(id) || bools.count(id) || channels.count(id) ||
           constants.count(id);
  }
  bool empty() const {
    return clocks.empty() && ints.empty() && bools.empty() && channels.empty() && constants.empty();
  }
};

enum class LocationKind { Normal, Committed, Urgent };

struct Location {
  std::string id;
  std::optional<std::string> name;
  std::optional<Expr> invariant;
  LocationKind kind = LocationKind::Normal;
  Annotations annotations;

  bool operator==(const Location&) const = default;

  std::string display() const { return name ? *name : id; }
};

struct Transition {
  std::string source;
  std::string target;
  std::optional<Expr> guard;
  std::optional<SyncLabel> sync;
  std::vector<Assignment> assignments;
  Annotations annotations;

  bool operator==(const Transition&) const = default;
};

struct TemplateAutomaton {
  std::string name;
  std::vector<Location> locations;
  std::vector<Transition> transitions;
  std::string initial;
  DeclarationSet local_decls;
  Annotations annotations;

  bool operator==(const TemplateAutomaton&) const = default;

  const Location* find_location(const std::string& id) const {
    auto it = std::find_if(locations.begin(), locations.end(), [&](const Location& l) { return l.id == id; });
    return it == locations.end() ? nullptr : &*it;
  }
  Location* find_location(const std::string& id) {
    auto it = std::find_if(locations.begin(), locations.end(), [&](const Location& l) { return l.id == id; });
    return it == locations.end() ? nullptr : &*it;
  }
  std::optional<std::size_t> location_index(const std::string& id) const {
    for (std::size_t i = 0; i < locations.size(); ++i)
      if (locations[i].id == id) return i;
    return std::nullopt;
  }
};

struct NtaModel {
  DeclarationSet global_decls;
  std::vector<TemplateAutomaton> templates;
  /// Template names composed in parallel, in `system` order.
  std::vector<std::string> system;

  bool operator==(const NtaModel&) const = default;

  const TemplateAutomaton* find_template(const std::string& name) const {
    for (const auto& t : templates)
      if (t.name == name) return &t;
    return nullptr;
  }
  std::optional<std::size_t> template_index(const std::string& name) const {
    for (std::size_t i = 0; i < templates.size(); ++i)
      if (templates[i].name == name) return i;
    return std::nullopt;
  }
};

// ---------------------------------------------------------------------------
// Declarations

inline DeclarationSet parse_declarations(std::string_view text, const DeclarationSet* outer = nullptr) {
  DeclarationSet d;
  detail::Parser p(text);
  auto lookup = [&](const std::string& id) -> std::optional<long long> {
    if (auto it = d.constants.find(id); it != d.constants.end()) return it->second;
    if (outer)
      if (auto it = outer->constants.find(id); it != outer->constants.end()) return it->second;
    return std::nullopt;
  };
  auto const_expr = [&](const char* what) {
    Expr e = p.expr();
    auto v = eval_const(e, lookup);
    if (!v) throw ExprError(std::string(what) + " must be a constant expression: " + to_string(e));
    return *v;
  };
  auto add = [&](const std::string& id) {
    if (d.declares(id)) throw SchemaError("duplicate declaration of '" + id + "'");
  };

  while (!p.at_end()) {
    if (p.is(";")) {
      p.take();
      continue;
    }
    std::string kw = p.ident();
    if (kw == "typedef" || kw == "struct" || kw == "void" || kw == "scalar" || kw == "meta" || kw == "double" ||
        kw == "hybrid" || kw == "process")
      throw UnsupportedFeature("declaration feature '" + kw + "' is outside the supported flat subset");
    if (kw == "urgent") {
      p.ident();  // chan
      throw UnsupportedFeature("urgent channels are outside the supported flat subset");
    }
    if (kw == "const") {
      std::string type = p.ident();
      if (type != "int" && type != "bool")
        throw UnsupportedFeature("constant type '" + type + "' is not supported");
      for (;;) {
        std::string id = p.ident();
        add(id);
        p.expect("=");
        d.constants[id] = const_expr("constant initializer");
        if (p.is(",")) {
          p.take();
          continue;
        }
        break;
      }
      p.expect(";");
      continue;
    }
    if (kw == "broadcast") {
      if (p.ident() != "chan") p.fail("expected 'chan' after 'broadcast'");
      kw = "broadcast chan";
    }
    std::optional<std::pair<long long, long long>> range;
    if (kw == "int" && p.is("[")) {
      p.take();
      long long lo = const_expr("range bound");
      p.expect(",");
      long long hi = const_expr("range bound");
      p.expect("]");
      if (lo > hi) throw SchemaError("empty int range");
      range = {lo, hi};
    }
    if (kw != "clock" && kw != "int" && kw != "bool" && kw != "chan" && kw != "broadcast chan")
      throw UnsupportedFeature("declaration of '" + kw + "' is outside the supported flat subset");
    for (;;) {
      std::string id = p.ident();
      add(id);
      if (p.is("[")) throw UnsupportedFeature("arrays are outside the supported flat subset ('" + id + "')");
      if (p.is("(")) throw UnsupportedFeature("functions are outside the supported flat subset ('" + id + "')");
      if (kw == "clock") {
        d.clocks.insert(id);
      } else if (kw == "chan") {
        d.channels[id] = ChannelKind::Plain;
      } else if (kw == "broadcast chan") {
        d.channels[id] = ChannelKind::Broadcast;
      } else if (kw == "int") {
        IntDecl decl;
        decl.range = range;
        if (p.is("=")) {
          p.take();
          decl.initial = const_expr("initializer");
        } else if (range) {
          decl.initial = std::max(0LL, range->first);
        }
        d.ints[id] = decl;
      } else {
        bool init = false;
        if (p.is("=")) {
          p.take();
          init = const_expr("initializer") != 0;
        }
        d.bools[id] = init;
      }
      if (p.is(",")) {
        p.take();
        continue;
      }
      break;
    }
    p.expect(";");
  }
  return d;
}

inline std::string to_string(const DeclarationSet& d) {
  std::string out;
  for (const auto& [id, v] : d.constants) out += "const int " + id + " = " + std::to_string(v) + ";\n";
  if (!d.clocks.empty()) {
    out += "clock ";
    bool first = true;
    for (const auto& c : d.clocks) {
      out += (first ? "" : ", ") + c;
      first = false;
    }
    out += ";\n";
  }
  for (const auto& [id, decl] : d.ints) {
    out += "int";
    if (decl.range) out += "[" + std::to_string(decl.range->first) + "," + std::to_string(decl.range->second) + "]";
    out += " " + id + " = " + std::to_string(decl.initial) + ";\n";
  }
  for (const auto& [id, v] : d.bools) out += "bool " + id + (v ? " = true;\n" : " = false;\n");
  for (const auto& [id, kind] : d.channels)
    out += std::string(kind == ChannelKind::Broadcast ? "broadcast chan " : "chan ") + id + ";\n";
  return out;
}

// ---------------------------------------------------------------------------
// Well-formedness

namespace detail {

inline std::string transition_label(const TemplateAutomaton& t, std::size_t i) {
  const auto& tr = t.transitions[i];
  auto name_of = [&](const std::string& id) {
    const Location* l = t.find_location(id);
    return l ? l->display() : id;
  };
  return "transition #" + std::to_string(i) + " (" + t.name + ": " + name_of(tr.source) + " -> " +
         name_of(tr.target) + ")";
}

} // namespace detail

/// Checks every structural invariant; throws SchemaError or RefError on the first violation.
inline void validate(const NtaModel& m) {
  std::set<std::string> names;
  for (const auto& t : m.templates) {
    if (!names.insert(t.name).second) throw SchemaError("duplicate template name '" + t.name + "'");
    if (m.global_decls.declares(t.name))
      throw SchemaError("template name '" + t.name + "' clashes with a global declaration");
  }
  for (const auto& s : m.system)
    if (!names.count(s)) throw RefError("system line references undeclared template '" + s + "'");
  std::set<std::string> seen_sys;
  for (const auto& s : m.system)
    if (!seen_sys.insert(s).second) throw SchemaError("template '" + s + "' instantiated twice");

  for (const auto& t : m.templates) {
    const auto& local = t.local_decls;
    const auto& global = m.global_decls;
    std::set<std::string> ids;
    for (const auto& l : t.locations)
      if (!ids.insert(l.id).second) throw SchemaError("duplicate location id '" + l.id + "' in " + t.name);
    if (t.locations.empty()) throw SchemaError("template " + t.name + " has no locations");
    if (!t.find_location(t.initial))
      throw SchemaError("template " + t.name + " has no valid initial location");

    auto is_clock = [&](const std::string& id) {
      return local.clocks.count(id) || (!local.declares(id) && global.clocks.count(id));
    };
    auto is_channel = [&](const std::string& id) {
      return local.channels.count(id) || (!local.declares(id) && global.channels.count(id));
    };
    auto is_data = [&](const std::string& id) {
      auto data = [&](const DeclarationSet& d) {
        return d.ints.count(id) || d.bools.count(id) || d.constants.count(id) || d.clocks.count(id);
      };
      return data(local) || (!local.declares(id) && data(global));
    };
    auto check_expr = [&](const Expr& e, const std::string& where) {
      for_each_leaf(e, [&](const Expr& leaf) {
        if (leaf.kind == Expr::Kind::Member)
          throw RefError("qualified name '" + leaf.name + "." + leaf.member + "' not allowed in " + where);
        if (!is_data(leaf.name)) throw RefError("undeclared identifier '" + leaf.name + "' in " + where);
      });
    };

    for (const auto& l : t.locations) {
      if (!l.invariant) continue;
      std::string where = "invariant of " + t.name + "." + l.display();
      check_expr(*l.invariant, where);
      std::vector<const Expr*> parts;
      conjuncts(*l.invariant, parts);
      for (const Expr* c : parts) {
        bool has_clock = false;
        for_each_leaf(*c, [&](const Expr& leaf) { has_clock |= is_clock(leaf.name); });
        if (!has_clock) continue;
        bool upper = c->kind == Expr::Kind::Binary && (c->op == Op::Le || c->op == Op::Lt);
        bool lower_flipped = c->kind == Expr::Kind::Binary && (c->op == Op::Ge || c->op == Op::Gt);
        if (!upper && !lower_flipped)
          throw SchemaError("invariant of " + t.name + "." + l.display() +
                            " must be a conjunction of upper clock bounds: " + to_string(*l.invariant));
        const Expr& bound_side = upper ? c->args[1] : c->args[0];
        bool bound_has_clock = false;
        for_each_leaf(bound_side, [&](const Expr& leaf) { bound_has_clock |= is_clock(leaf.name); });
        if (bound_has_clock)
          throw SchemaError("invariant of " + t.name + "." + l.display() + " has a lower clock bound");
      }
    }
    for (std::size_t i = 0; i < t.transitions.size(); ++i) {
      const auto& tr = t.transitions[i];
      std::string where = detail::transition_label(t, i);
      if (!t.find_location(tr.source) || !t.find_location(tr.target))
        throw SchemaError(where + " has a dangling endpoint");
      if (tr.guard) check_expr(*tr.guard, where);
      if (tr.sync && !is_channel(tr.sync->channel))
        throw RefError("undeclared channel '" + tr.sync->channel + "' in " + where);
      for (const auto& a : tr.assignments) {
        if (!is_data(a.target) || local.constants.count(a.target) ||
            (!local.declares(a.target) && global.constants.count(a.target)))
          throw RefError("assignment to undeclared or constant '" + a.target + "' in " + where);
        check_expr(a.value, where);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Location lookup

struct LocationHandle {
  std::size_t template_index = 0;
  std::string location_id;
  bool operator==(const LocationHandle&) const = default;
  auto operator<=>(const LocationHandle&) const = default;
};

/// Resolves "Template.Location" (by display name, falling back to id).
inline LocationHandle resolve_location(const NtaModel& m, const std::string& ref) {
  auto dot = ref.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == ref.size() || ref.find('.', dot + 1) != std::string::npos)
    throw NotFound("location reference must be 'Template.Location': '" + ref + "'");
  std::string tpl = ref.substr(0, dot);
  std::string loc = ref.substr(dot + 1);
  auto ti = m.template_index(tpl);
  if (!ti) throw NotFound("no template named '" + tpl + "' (in '" + ref + "')");
  const auto& t = m.templates[*ti];
  std::vector<const Location*> hits;
  for (const auto& l : t.locations)
    if (l.name && *l.name == loc) hits.push_back(&l);
  if (hits.size() > 1) throw Ambiguous("location name '" + loc + "' is not unique in template " + tpl);
  if (hits.empty()) {
    for (const auto& l : t.locations)
      if (!l.name && l.id == loc) hits.push_back(&l);
  }
  if (hits.empty()) throw NotFound("no location '" + loc + "' in template " + tpl);
  return {*ti, hits.front()->id};
}

} // namespace pspta::ta
