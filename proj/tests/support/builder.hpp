#pragma once

#include <string>
#include <vector>

#include "pspta/ta/model.hpp"

namespace pspta::testing {

/// Terse construction of NtaModel fixtures in test code.
class TemplateBuilder {
public:
  explicit TemplateBuilder(ta::TemplateAutomaton& t, const ta::DeclarationSet* globals = nullptr)
      : t_(t), globals_(globals) {}

  TemplateBuilder& loc(const std::string& name, const std::string& inv = "",
                       ta::LocationKind kind = ta::LocationKind::Normal) {
    ta::Location l;
    l.id = "id" + std::to_string(t_.locations.size());
    l.name = name;
    if (!inv.empty()) l.invariant = ta::parse_expr(inv);
    l.kind = kind;
    if (t_.locations.empty()) t_.initial = l.id;
    t_.locations.push_back(l);
    return *this;
  }
  TemplateBuilder& committed(const std::string& name) { return loc(name, "", ta::LocationKind::Committed); }
  TemplateBuilder& urgent(const std::string& name) { return loc(name, "", ta::LocationKind::Urgent); }
  TemplateBuilder& init(const std::string& name) {
    t_.initial = id(name);
    return *this;
  }
  TemplateBuilder& local(const std::string& decls) {
    t_.local_decls = ta::parse_declarations(decls, globals_);
    return *this;
  }

  TemplateBuilder& edge(const std::string& from, const std::string& to, const std::string& guard = "",
                        const std::string& sync = "", const std::string& assign = "") {
    ta::Transition tr;
    tr.source = id(from);
    tr.target = id(to);
    if (!guard.empty()) tr.guard = ta::parse_expr(guard);
    if (!sync.empty()) tr.sync = ta::parse_sync(sync);
    if (!assign.empty()) tr.assignments = ta::parse_assignments(assign);
    t_.transitions.push_back(tr);
    return *this;
  }

  std::string id(const std::string& name) const {
    for (const auto& l : t_.locations)
      if (l.display() == name) return l.id;
    throw std::runtime_error("builder: no location " + name);
  }

private:
  ta::TemplateAutomaton& t_;
  const ta::DeclarationSet* globals_;
};

class ModelBuilder {
public:
  explicit ModelBuilder(const std::string& global_decls = "") {
    m_.global_decls = ta::parse_declarations(global_decls);
  }

  TemplateBuilder tpl(const std::string& name) {
    ta::TemplateAutomaton t;
    t.name = name;
    m_.templates.push_back(t);
    m_.system.push_back(name);
    return TemplateBuilder(m_.templates.back(), &m_.global_decls);
  }

  /// Builder for an already-added template (references stay valid only until the next tpl()).
  TemplateBuilder get(const std::string& name) {
    for (auto& t : m_.templates)
      if (t.name == name) return TemplateBuilder(t, &m_.global_decls);
    throw std::runtime_error("builder: no template " + name);
  }

  ta::NtaModel build() const {
    ta::validate(m_);
    return m_;
  }

private:
  ta::NtaModel m_;
};

} // namespace pspta::testing
