#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pspta/errors.hpp"
#include "pspta/psp/spec.hpp"
#include "pspta/route/router.hpp"
#include "pspta/ta/model.hpp"

namespace pspta::adjust {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kPseudoMarker = "instrumentation: pseudo-location";

/// Instrumentation generated for one annotated location.
struct StateInstrumentation {
  std::string ref;  // "Template.Location" as written in the property
  std::string template_name;
  std::string location;  // display name of the annotated location
  std::string enter_location;
  std::vector<std::string> left_locations;
  std::string reached_channel;
  std::string left_channel;
  std::string holds_flag;
  std::string held_once_flag;
  std::size_t redirected_incoming = 0;
  std::size_t redirected_outgoing = 0;
  std::size_t states_added = 0;
  std::size_t transitions_added = 0;
};

struct AdjustmentReport {
  std::size_t states_added = 0;
  std::size_t transitions_added = 0;
  std::vector<StateInstrumentation> per_state;
  /// Logical name (mayFire, nxtCmt, gc) to the identifier actually declared.
  std::map<std::string, std::string> generated_names;
  double seconds_elapsed = 0;

  const StateInstrumentation* find(const std::string& ref) const {
    for (const auto& s : per_state)
      if (s.ref == ref) return &s;
    return nullptr;
  }
  const StateInstrumentation& at(const std::string& ref) const {
    if (auto* s = find(ref)) return *s;
    throw BindingError("location '" + ref + "' was not instrumented");
  }

  nlohmann::json to_json() const {
    nlohmann::json states = nlohmann::json::array();
    for (const auto& s : per_state)
      states.push_back({{"ref", s.ref},
                        {"template", s.template_name},
                        {"location", s.location},
                        {"enter_location", s.enter_location},
                        {"left_locations", s.left_locations},
                        {"reached_channel", s.reached_channel},
                        {"left_channel", s.left_channel},
                        {"holds_flag", s.holds_flag},
                        {"held_once_flag", s.held_once_flag},
                        {"redirected_incoming", s.redirected_incoming},
                        {"redirected_outgoing", s.redirected_outgoing},
                        {"states_added", s.states_added},
                        {"transitions_added", s.transitions_added}});
    return {{"schema_version", kReportSchemaVersion},
            {"states_added", states_added},
            {"transitions_added", transitions_added},
            {"per_state", states},
            {"generated_names", generated_names},
            {"seconds_elapsed", seconds_elapsed}};
  }
};

inline bool is_pseudo(const ta::Location& l) {
  auto it = l.annotations.find("comments");
  return it != l.annotations.end() && it->second.rfind(kPseudoMarker, 0) == 0;
}

/// Incrementally instruments a model. Each instance owns its working copy and remembers
/// the names it generated, so repeated calls are consistent and idempotent.
class Adjuster {
public:
  explicit Adjuster(ta::NtaModel m) : m_(std::move(m)) {
    // adopt semaphores of a model that was instrumented earlier
    bool instrumented = false;
    for (const auto& t : m_.templates)
      for (const auto& l : t.locations) instrumented |= is_pseudo(l);
    if (!instrumented) return;
    if (m_.global_decls.ints.count("mayFire")) report_.generated_names["mayFire"] = "mayFire";
    if (m_.global_decls.bools.count("nxtCmt")) report_.generated_names["nxtCmt"] = "nxtCmt";
  }

  const ta::NtaModel& model() const { return m_; }
  const AdjustmentReport& report() const { return report_; }

  ta::NtaModel take_model() { return std::move(m_); }

  /// Wraps location `ref` ("Template.Location") with pseudo-locations; no-op when the
  /// same location was already instrumented by this adjuster.
  const StateInstrumentation& apply_flag(const std::string& ref) {
    auto h = ta::resolve_location(m_, ref);
    const std::string key = m_.templates[h.template_index].name + "#" + h.location_id;
    if (auto it = done_.find(key); it != done_.end()) {
      // same location under another spelling: record the alias once
      if (!report_.find(ref)) {
        StateInstrumentation alias = report_.per_state[it->second];
        alias.ref = ref;
        alias.states_added = alias.transitions_added = 0;
        aliases_.push_back(alias);
      }
      return report_.per_state[it->second];
    }
    auto start = std::chrono::steady_clock::now();
    StateInstrumentation si = instrument(h, ref);
    report_.states_added += si.states_added;
    report_.transitions_added += si.transitions_added;
    done_[key] = report_.per_state.size();
    report_.per_state.push_back(std::move(si));
    report_.seconds_elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report_.per_state.back();
  }

  /// Declares the global clock once; returns its name.
  const std::string& add_global_clock() {
    auto it = report_.generated_names.find("gc");
    if (it != report_.generated_names.end()) return it->second;
    std::string name = fresh_global("gc");
    m_.global_decls.clocks.insert(name);
    return report_.generated_names["gc"] = name;
  }

  /// Lookup of an instrumented ref, including aliases of the same location.
  const StateInstrumentation& at(const std::string& ref) const {
    if (auto* s = report_.find(ref)) return *s;
    for (const auto& a : aliases_)
      if (a.ref == ref) return a;
    throw BindingError("location '" + ref + "' was not instrumented");
  }

  const std::string& name_of(const std::string& logical) const {
    auto it = report_.generated_names.find(logical);
    if (it == report_.generated_names.end()) throw BindingError("no generated name for '" + logical + "'");
    return it->second;
  }

private:
  ta::NtaModel m_;
  AdjustmentReport report_;
  std::map<std::string, std::size_t> done_;
  std::vector<StateInstrumentation> aliases_;
  std::set<std::string> taken_;  // names handed out by this adjuster

  bool global_taken(const std::string& n) const {
    if (taken_.count(n) || m_.global_decls.declares(n)) return true;
    for (const auto& t : m_.templates)
      if (t.name == n || t.local_decls.declares(n)) return true;
    return false;
  }

  std::string fresh_global(const std::string& base) {
    std::string n = base;
    for (int k = 1; global_taken(n); ++k) {
      if (k > 10000) throw NameClash("cannot find a free name for '" + base + "'");
      n = base + "_" + std::to_string(k);
    }
    taken_.insert(n);
    return n;
  }

  /// A stem such that every per-state identifier derived from it is free.
  std::string fresh_stem(const std::string& base) {
    static const char* kSuffixes[] = {"_reached", "_left", "_holds", "_held_once"};
    std::string stem = base;
    for (int k = 1;; ++k) {
      bool free = true;
      for (const char* s : kSuffixes) free = free && !global_taken(stem + s);
      if (free) break;
      if (k > 10000) throw NameClash("cannot find free instrumentation names for '" + base + "'");
      stem = base + "_" + std::to_string(k);
    }
    for (const char* s : kSuffixes) taken_.insert(stem + s);
    return stem;
  }

  static std::string fresh_location_name(const ta::TemplateAutomaton& t, const std::string& base) {
    auto used = [&](const std::string& n) {
      return std::any_of(t.locations.begin(), t.locations.end(), [&](const ta::Location& l) {
        return l.display() == n || l.id == n;
      });
    };
    std::string n = base;
    for (int k = 1; used(n); ++k) {
      if (k > 10000) throw NameClash("cannot find a free location name for '" + base + "'");
      n = base + "_" + std::to_string(k);
    }
    return n;
  }

  static std::string fresh_location_id(const ta::TemplateAutomaton& t) {
    for (std::size_t k = t.locations.size();; ++k) {
      std::string id = "id" + std::to_string(k);
      if (!t.find_location(id)) return id;
    }
  }

  void ensure_semaphores() {
    if (!report_.generated_names.count("mayFire")) {
      std::string mf = fresh_global("mayFire");
      m_.global_decls.ints[mf] = ta::IntDecl{0, std::pair<long long, long long>{0, 0}};
      report_.generated_names["mayFire"] = mf;
    }
    if (!report_.generated_names.count("nxtCmt")) {
      std::string nc = fresh_global("nxtCmt");
      m_.global_decls.bools[nc] = false;
      report_.generated_names["nxtCmt"] = nc;
    }
    auto& decl = m_.global_decls.ints[report_.generated_names["mayFire"]];
    decl.range = std::pair<long long, long long>{0, static_cast<long long>(m_.system.size())};
  }

  static bool has_conjunct(const std::optional<ta::Expr>& guard, const ta::Expr& c) {
    if (!guard) return false;
    std::vector<const ta::Expr*> parts;
    ta::conjuncts(*guard, parts);
    return std::any_of(parts.begin(), parts.end(), [&](const ta::Expr* e) { return *e == c; });
  }

  void guard_system_transitions() {
    const ta::Expr may_fire_zero = ta::Expr::binary(ta::Op::Eq, ta::Expr::ident(name_of("mayFire")), ta::Expr::integer(0));
    const ta::Expr not_next = ta::Expr::unary(ta::Op::Not, ta::Expr::ident(name_of("nxtCmt")));
    for (const auto& name : m_.system) {
      auto ti = m_.template_index(name);
      if (!ti) continue;
      auto& t = m_.templates[*ti];
      for (auto& tr : t.transitions) {
        const auto* src = t.find_location(tr.source);
        if (src && is_pseudo(*src)) continue;
        if (!has_conjunct(tr.guard, may_fire_zero)) tr.guard = ta::conjoin(tr.guard, may_fire_zero);
        if (!has_conjunct(tr.guard, not_next)) tr.guard = ta::conjoin(tr.guard, not_next);
      }
    }
  }

  /// Every transition's mayFire update becomes (target is pseudo) - (source is pseudo).
  void fix_semaphore(ta::TemplateAutomaton& t) {
    const std::string& mf = name_of("mayFire");
    for (auto& tr : t.transitions) {
      auto& as = tr.assignments;
      as.erase(std::remove_if(as.begin(), as.end(), [&](const ta::Assignment& a) { return a.target == mf; }),
               as.end());
      int delta = (is_pseudo(*t.find_location(tr.target)) ? 1 : 0) - (is_pseudo(*t.find_location(tr.source)) ? 1 : 0);
      if (delta == 0) continue;
      as.push_back({mf, ta::Expr::binary(delta > 0 ? ta::Op::Add : ta::Op::Sub, ta::Expr::ident(mf),
                                         ta::Expr::integer(1))});
    }
  }

  static void place(ta::Location& l, std::size_t index) {
    l.annotations["x"] = std::to_string(static_cast<long long>(index % 8) * 120 - 400);
    l.annotations["y"] = std::to_string(400 + static_cast<long long>(index / 8) * 100);
    l.annotations["name.x"] = std::to_string(static_cast<long long>(index % 8) * 120 - 410);
    l.annotations["name.y"] = std::to_string(370 + static_cast<long long>(index / 8) * 100);
  }

  /// Rebuilds the record of a location instrumented before this adjuster saw the model.
  std::optional<StateInstrumentation> recover(const ta::TemplateAutomaton& t, const std::string& p_id,
                                              const std::string& ref) const {
    const ta::Transition* enter = nullptr;
    for (const auto& tr : t.transitions)
      if (tr.target == p_id && tr.sync && tr.sync->send && tr.sync->channel.ends_with("_reached") &&
          is_pseudo(*t.find_location(tr.source)))
        enter = &tr;
    if (!enter || enter->assignments.size() < 2) return std::nullopt;
    StateInstrumentation si;
    si.ref = ref;
    si.template_name = t.name;
    si.location = t.find_location(p_id)->display();
    si.enter_location = t.find_location(enter->source)->display();
    si.reached_channel = enter->sync->channel;
    si.holds_flag = enter->assignments[0].target;
    si.held_once_flag = enter->assignments[1].target;
    for (const auto& tr : t.transitions) {
      if (tr.source != p_id) continue;
      const auto* left = t.find_location(tr.target);
      if (!is_pseudo(*left)) continue;
      si.left_locations.push_back(left->display());
      for (const auto& out : t.transitions)
        if (out.source == left->id && out.sync) si.left_channel = out.sync->channel;
    }
    if (si.left_channel.empty()) {
      auto stem = si.reached_channel.substr(0, si.reached_channel.size() - std::string("_reached").size());
      si.left_channel = stem + "_left";
    }
    return si;
  }

  StateInstrumentation instrument(const ta::LocationHandle& h, const std::string& ref) {
    ensure_semaphores();
    guard_system_transitions();

    auto& t = m_.templates[h.template_index];
    const ta::Location& target = *t.find_location(h.location_id);
    if (is_pseudo(target)) throw UnsupportedTarget("'" + ref + "' is an instrumentation pseudo-location");
    if (target.kind != ta::LocationKind::Normal)
      throw UnsupportedTarget("'" + ref + "' is a " +
                              std::string(target.kind == ta::LocationKind::Committed ? "committed" : "urgent") +
                              " location; only normal locations can be instrumented");

    const std::string p_id = target.id;
    const std::string p_name = target.display();
    if (auto prior = recover(t, p_id, ref)) return *prior;
    const std::optional<ta::Expr> p_inv = target.invariant;

    StateInstrumentation si;
    si.ref = ref;
    si.template_name = t.name;
    si.location = p_name;
    std::string stem = fresh_stem(p_name);
    si.reached_channel = stem + "_reached";
    si.left_channel = stem + "_left";
    si.holds_flag = stem + "_holds";
    si.held_once_flag = stem + "_held_once";
    m_.global_decls.channels[si.reached_channel] = ta::ChannelKind::Broadcast;
    m_.global_decls.channels[si.left_channel] = ta::ChannelKind::Broadcast;
    m_.global_decls.ints[si.holds_flag] = ta::IntDecl{0, std::pair<long long, long long>{0, 1}};
    m_.global_decls.ints[si.held_once_flag] = ta::IntDecl{0, std::pair<long long, long long>{0, 1}};

    std::vector<std::size_t> incoming, outgoing;
    for (std::size_t i = 0; i < t.transitions.size(); ++i) {
      if (t.transitions[i].target == p_id) incoming.push_back(i);
      if (t.transitions[i].source == p_id) outgoing.push_back(i);
    }

    auto new_location = [&](const std::string& base, const std::optional<ta::Expr>& inv) {
      ta::Location l;
      l.id = fresh_location_id(t);
      l.name = fresh_location_name(t, base);
      l.invariant = inv;
      l.kind = ta::LocationKind::Committed;
      l.annotations["comments"] = std::string(kPseudoMarker) + " of " + p_name;
      place(l, t.locations.size());
      t.locations.push_back(l);
      return std::make_pair(l.id, *l.name);
    };

    auto [enter_id, enter_name] = new_location(p_name + "_ENTER", p_inv);
    si.enter_location = enter_name;
    if (t.initial == p_id) {
      // the initial occurrence is announced by starting in the entry pseudo-location
      t.initial = enter_id;
      m_.global_decls.ints[name_of("mayFire")].initial += 1;
    }

    for (std::size_t i : incoming) t.transitions[i].target = enter_id;
    si.redirected_incoming = incoming.size();

    ta::Transition enter_edge;
    enter_edge.source = enter_id;
    enter_edge.target = p_id;
    enter_edge.sync = ta::SyncLabel{si.reached_channel, true};
    enter_edge.assignments = {{si.holds_flag, ta::Expr::integer(1)}, {si.held_once_flag, ta::Expr::integer(1)}};
    t.transitions.push_back(enter_edge);

    for (std::size_t i : outgoing) {
      // a self-loop was already retargeted to the entry location above
      const std::string succ_id = t.transitions[i].target;
      const ta::Location& succ = *t.find_location(succ_id);
      const std::string succ_name = succ_id == enter_id ? p_name : succ.display();
      auto [left_id, left_name] = new_location(p_name + "_LEFTTO_" + succ_name, succ.invariant);
      si.left_locations.push_back(left_name);
      t.transitions[i].target = left_id;
      ta::Transition left_edge;
      left_edge.source = left_id;
      left_edge.target = succ_id;
      left_edge.sync = ta::SyncLabel{si.left_channel, true};
      left_edge.assignments = {{si.holds_flag, ta::Expr::integer(0)}};
      t.transitions.push_back(left_edge);
    }
    si.redirected_outgoing = outgoing.size();

    fix_semaphore(t);
    si.states_added = 1 + outgoing.size();
    si.transitions_added = 1 + outgoing.size();
    return si;
  }
};

/// One-shot form of Adjuster::apply_flag.
inline std::pair<ta::NtaModel, AdjustmentReport> apply_flag(const ta::NtaModel& m, const std::string& ref) {
  Adjuster a(m);
  a.apply_flag(ref);
  AdjustmentReport r = a.report();
  return {a.take_model(), std::move(r)};
}

/// One-shot form of Adjuster::add_global_clock.
inline std::pair<ta::NtaModel, std::string> add_global_clock(const ta::NtaModel& m) {
  Adjuster a(m);
  std::string name = a.add_global_clock();
  return {a.take_model(), name};
}

/// Locations whose flags or broadcasts the property's check reads: none for FormulaOnly,
/// the flag source for Flag (Q of an After scope, P of Response Invariance), every
/// referenced location for Observer.
inline std::vector<psp::StateRef> locations_to_instrument(const psp::PropertySpec& spec) {
  switch (route::classify(spec)) {
    case route::ProcessKind::FormulaOnly: return {};
    case route::ProcessKind::Flag:
      return {spec.scope == psp::ScopeKind::After ? spec.ref(psp::Role::Q) : spec.ref(psp::Role::P)};
    case route::ProcessKind::Observer: break;
  }
  return spec.distinct_refs();
}

/// Instruments the locations above, plus the global clock for timed properties.
inline Adjuster instrument_for(const psp::PropertySpec& spec, const ta::NtaModel& m) {
  Adjuster a(m);
  for (const auto& ref : locations_to_instrument(spec)) a.apply_flag(ref);
  if (spec.timed) a.add_global_clock();
  return a;
}

} // namespace pspta::adjust
