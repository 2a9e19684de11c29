#pragma once

#include <compare>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pspta/adjust/adjuster.hpp"
#include "pspta/errors.hpp"
#include "pspta/psp/spec.hpp"
#include "pspta/ta/xml.hpp"

#if __has_include("pspta/observe/builtin_catalog.hpp")
#include "pspta/observe/builtin_catalog.hpp"
#define PSPTA_HAVE_BUILTIN_CATALOG 1
#endif

namespace pspta::observe {

struct Key {
  psp::PatternKind pattern{};
  psp::ScopeKind scope{};
  bool timed = false;
  auto operator<=>(const Key&) const = default;
};

inline Key key_of(const psp::PropertySpec& s) { return {s.pattern, s.scope, s.timed}; }

inline std::string to_string(const Key& k) {
  return std::string(psp::to_string(k.pattern)) + "/" + std::string(psp::to_string(k.scope)) + "/" +
         (k.timed ? "timed" : "untimed");
}

enum class VerdictKind { Safety, Liveness };

struct VerdictSpec {
  VerdictKind kind = VerdictKind::Safety;
  std::string error_location;  // safety
  std::string trigger;         // liveness
  std::string accepting;       // liveness
};

/// Placeholder identifiers are spelled `__P_reached__`, `__Q_holds__`, `__T2__`, ...
inline const std::regex& placeholder_pattern() {
  static const std::regex re(R"(__(?:[PSQRZ]_(?:reached|left|holds|held_once)|mayFire|nxtCmt|T1|T2|N|OBS)__)");
  return re;
}

struct ObserverTemplate {
  Key key;
  std::string xml;
  nlohmann::json manifest;
  std::string source;  // "builtin" or the directory it was read from
  ta::TemplateAutomaton skeleton;
  ta::DeclarationSet placeholder_decls;
  std::vector<std::string> placeholders;
  VerdictSpec verdict;
  std::string query_template;
  std::optional<long long> lower_bound;  // required interval lower bound, when fixed
};

inline ObserverTemplate parse_template(const std::string& xml, const std::string& manifest_text,
                                       const std::string& source = "builtin") {
  ObserverTemplate t;
  t.xml = xml;
  t.source = source;
  try {
    t.manifest = nlohmann::json::parse(manifest_text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(source + ": manifest is not valid JSON: " + e.what());
  }
  const auto& j = t.manifest;
  auto str = [&](const char* field) {
    if (!j.contains(field) || !j[field].is_string()) throw SchemaError(source + ": manifest needs string '" + field + "'");
    return j[field].get<std::string>();
  };
  auto pattern = psp::pattern_from_string(str("pattern"));
  auto scope = psp::scope_from_string(str("scope"));
  std::string variant = str("variant");
  if (!pattern || !scope || (variant != "timed" && variant != "untimed"))
    throw SchemaError(source + ": manifest key must name a pattern, a scope and timed|untimed");
  t.key = {*pattern, *scope, variant == "timed"};
  t.query_template = str("query");
  if (!j.contains("placeholders") || !j["placeholders"].is_array())
    throw SchemaError(source + ": manifest needs a 'placeholders' array");
  for (const auto& p : j["placeholders"]) {
    if (!p.is_string() || !std::regex_match(p.get<std::string>(), placeholder_pattern()))
      throw SchemaError(source + ": bad placeholder " + p.dump());
    t.placeholders.push_back(p.get<std::string>());
  }
  if (!j.contains("verdict") || !j["verdict"].is_object()) throw SchemaError(source + ": manifest needs 'verdict'");
  const auto& v = j["verdict"];
  std::string kind = v.value("kind", "");
  if (kind == "safety") {
    t.verdict.kind = VerdictKind::Safety;
    t.verdict.error_location = v.value("error", "ERROR");
  } else if (kind == "liveness") {
    t.verdict.kind = VerdictKind::Liveness;
    t.verdict.trigger = v.value("trigger", "");
    t.verdict.accepting = v.value("accepting", "");
    if (t.verdict.trigger.empty() || t.verdict.accepting.empty())
      throw SchemaError(source + ": liveness verdict needs 'trigger' and 'accepting'");
  } else {
    throw SchemaError(source + ": verdict kind must be safety or liveness");
  }
  if (j.contains("lower_bound")) t.lower_bound = j["lower_bound"].get<long long>();

  ta::NtaModel m = ta::parse_model(xml);
  std::string name = j.value("template", "Observer");
  const auto* tpl = m.find_template(name);
  if (!tpl) throw SchemaError(source + ": template.xml has no template named '" + name + "'");
  t.skeleton = *tpl;
  t.placeholder_decls = m.global_decls;
  return t;
}

class Catalog {
public:
  /// The templates compiled into the library.
  static Catalog builtin() {
    Catalog c;
#ifdef PSPTA_HAVE_BUILTIN_CATALOG
    for (const auto& e : generated::kBuiltinCatalog) c.add(parse_template(std::string(e.xml), std::string(e.manifest)));
#endif
    return c;
  }

  /// Built-ins overlaid with every `<pattern>/<scope>/<variant>/` entry under `root`.
  static Catalog with_directory(const std::filesystem::path& root) {
    Catalog c = builtin();
    c.load_directory(root);
    return c;
  }

  void add(ObserverTemplate t) { templates_[t.key] = std::move(t); }

  void load_directory(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw NotFound("catalog directory '" + root.string() + "' does not exist");
    std::vector<fs::path> manifests;
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file() && e.path().filename() == "manifest.json") manifests.push_back(e.path());
    std::sort(manifests.begin(), manifests.end());
    for (const auto& mp : manifests) {
      fs::path dir = mp.parent_path();
      auto rel = fs::relative(dir, root);
      std::vector<std::string> parts(rel.begin(), rel.end());
      if (parts.size() != 3)
        throw SchemaError("catalog entry '" + dir.string() + "' is not at <pattern>/<scope>/<timed|untimed>");
      auto t = parse_template(slurp(dir / "template.xml"), slurp(mp), dir.string());
      if (to_string(t.key) != parts[0] + "/" + parts[1] + "/" + parts[2])
        throw SchemaError(dir.string() + ": manifest key " + to_string(t.key) + " does not match its directory");
      add(std::move(t));
    }
  }

  bool contains(const Key& k) const { return templates_.count(k) != 0; }

  const ObserverTemplate& lookup(const Key& k) const {
    auto it = templates_.find(k);
    if (it == templates_.end()) throw TemplateMissing("no observer template for " + to_string(k));
    return it->second;
  }

  std::vector<Key> keys() const {
    std::vector<Key> out;
    for (const auto& [k, _] : templates_) out.push_back(k);
    return out;
  }

  /// Writes every template in the catalog directory layout.
  void export_to(const std::filesystem::path& root) const {
    for (const auto& [k, t] : templates_) {
      auto dir = root / std::string(psp::to_string(k.pattern)) / std::string(psp::to_string(k.scope)) /
                 (k.timed ? "timed" : "untimed");
      std::filesystem::create_directories(dir);
      std::ofstream(dir / "template.xml") << t.xml;
      std::ofstream(dir / "manifest.json") << t.manifest.dump(2) << "\n";
    }
  }

private:
  std::map<Key, ObserverTemplate> templates_;

  static std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw NotFound("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

struct ObserverInstance {
  ta::TemplateAutomaton automaton;
  std::string name;
  std::string query;
  VerdictSpec verdict;
  Key key;
};

namespace detail {

inline std::string substitute(const std::string& text, const std::map<std::string, std::string>& values) {
  std::string out;
  auto begin = std::sregex_iterator(text.begin(), text.end(), placeholder_pattern());
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    out.append(text, last, static_cast<std::size_t>(it->position()) - last);
    auto v = values.find(it->str());
    if (v == values.end()) throw BindingError("placeholder " + it->str() + " has no value");
    out += v->second;
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(text, last, std::string::npos);
  return out;
}

inline std::string free_template_name(const ta::NtaModel& m, const std::string& base) {
  auto taken = [&](const std::string& n) {
    return m.find_template(n) || m.global_decls.declares(n);
  };
  std::string n = base;
  for (int k = 1; taken(n); ++k) n = base + "_" + std::to_string(k);
  return n;
}

} // namespace detail

/// Binds the template's placeholders to the names generated for `spec` and the spec's
/// bounds. `target` is the instrumented model the observer will join.
inline ObserverInstance instantiate(const ObserverTemplate& tpl, const psp::PropertySpec& spec,
                                    const adjust::AdjustmentReport& report, const ta::NtaModel& target,
                                    const std::string& name = "Obs") {
  std::map<std::string, std::string> values;
  std::smatch sm;
  static const std::regex role_re(R"(__([PSQRZ])_(reached|left|holds|held_once)__)");
  auto number = [](long long v) { return std::to_string(v); };
  for (const auto& ph : tpl.placeholders) {
    if (std::regex_match(ph, sm, role_re)) {
      auto role = static_cast<psp::Role>(std::string("PSQRZ").find(sm[1].str()[0]));
      if (!spec.has(role))
        throw BindingError("template " + to_string(tpl.key) + " needs a " + sm[1].str() + " state");
      const auto* si = report.find(spec.ref(role));
      if (!si) throw BindingError("location '" + spec.ref(role) + "' was not instrumented");
      const std::string what = sm[2].str();
      values[ph] = what == "reached" ? si->reached_channel
                   : what == "left"  ? si->left_channel
                   : what == "holds" ? si->holds_flag
                                     : si->held_once_flag;
    } else if (ph == "__mayFire__" || ph == "__nxtCmt__") {
      auto it = report.generated_names.find(ph.substr(2, ph.size() - 4));
      if (it == report.generated_names.end()) throw BindingError("model has no " + ph.substr(2, ph.size() - 4) + " semaphore");
      values[ph] = it->second;
    } else if (ph == "__T1__" || ph == "__T2__") {
      if (!spec.timed || !spec.interval) throw BindingError("template " + to_string(tpl.key) + " needs a time interval");
      if (ph == "__T1__") {
        values[ph] = number(spec.interval->lower);
      } else {
        if (!spec.interval->upper)
          throw BindingError("template " + to_string(tpl.key) + " needs an upper time bound");
        values[ph] = number(*spec.interval->upper);
      }
    } else if (ph == "__N__") {
      if (!spec.count) throw BindingError("template " + to_string(tpl.key) + " needs a count");
      values[ph] = number(*spec.count);
    }
  }
  if (tpl.lower_bound && (!spec.interval || spec.interval->lower != *tpl.lower_bound))
    throw BindingError("template " + to_string(tpl.key) + " supports intervals with lower bound " +
                       std::to_string(*tpl.lower_bound) + " only");

  ObserverInstance inst;
  inst.key = tpl.key;
  inst.verdict = tpl.verdict;
  inst.name = detail::free_template_name(target, name);
  values["__OBS__"] = inst.name;

  // substitute inside the template element only; the file's own declarations just
  // declare the placeholders
  auto open = tpl.xml.find("<template>");
  auto close = tpl.xml.rfind("</template>");
  if (open == std::string::npos || close == std::string::npos) throw SchemaError("template.xml has no <template>");
  std::string element = tpl.xml.substr(open, close + std::string("</template>").size() - open);
  std::string doc = "<nta><declaration></declaration>" + detail::substitute(element, values) +
                    "<system>system " + tpl.skeleton.name + ";</system></nta>";
  ta::NtaModel parsed = ta::parse_model(doc, false);
  inst.automaton = parsed.templates.at(0);
  inst.automaton.name = inst.name;
  inst.query = detail::substitute(tpl.query_template, values);
  return inst;
}

/// M' with the observer appended to the system.
inline ta::NtaModel compose(const ta::NtaModel& instrumented, const ObserverInstance& obs) {
  ta::NtaModel m = instrumented;
  m.templates.push_back(obs.automaton);
  m.system.push_back(obs.automaton.name);
  ta::validate(m);
  return m;
}

struct Finding {
  std::string code;
  std::string message;
  bool operator==(const Finding&) const = default;
};

inline std::vector<Finding> lint_template(const ObserverTemplate& tpl) {
  std::vector<Finding> out;
  const auto& t = tpl.skeleton;
  auto loc_named = [&](const std::string& n) -> const ta::Location* {
    for (const auto& l : t.locations)
      if (l.display() == n) return &l;
    return nullptr;
  };

  // reachability over the template's own edges
  std::set<std::string> seen{t.initial};
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& tr : t.transitions)
      if (seen.count(tr.source) && seen.insert(tr.target).second) grew = true;
  }
  for (const auto& l : t.locations)
    if (!seen.count(l.id)) out.push_back({"unreachable-location", "location " + l.display() + " is unreachable"});

  std::vector<std::string> verdict_locs;
  if (tpl.verdict.kind == VerdictKind::Safety) {
    verdict_locs = {tpl.verdict.error_location};
  } else {
    verdict_locs = {tpl.verdict.trigger, tpl.verdict.accepting};
  }
  for (const auto& n : verdict_locs)
    if (!loc_named(n)) out.push_back({"missing-verdict-location", "verdict location " + n + " does not exist"});

  for (const auto& l : t.locations) {
    if (l.display() != "ERROR" && l.display() != tpl.verdict.error_location) continue;
    for (const auto& tr : t.transitions)
      if (tr.source == l.id) {
        out.push_back({"error-not-absorbing", "error location " + l.display() + " is not absorbing"});
        break;
      }
  }

  const std::set<std::string> declared(tpl.placeholders.begin(), tpl.placeholders.end());
  for (const auto& tr : t.transitions) {
    if (!tr.sync) continue;
    if (tr.sync->send) {
      out.push_back({"observer-sends", "observer sends on " + tr.sync->channel + "; observers only listen"});
    } else if (!declared.count(tr.sync->channel)) {
      out.push_back({"undeclared-channel", "receive on " + tr.sync->channel + ", which is not a declared placeholder"});
    }
  }

  // clocks: only the local clock c
  std::set<std::string> clocks = tpl.placeholder_decls.clocks;
  clocks.insert(t.local_decls.clocks.begin(), t.local_decls.clocks.end());
  std::set<std::string> foreign;
  for (const auto& c : clocks)
    if (c != "c") foreign.insert(c);
  std::set<std::string> used;
  auto scan = [&](const ta::Expr& e) {
    ta::for_each_leaf(e, [&](const ta::Expr& leaf) { used.insert(leaf.name); });
  };
  for (const auto& l : t.locations)
    if (l.invariant) scan(*l.invariant);
  for (const auto& tr : t.transitions) {
    if (tr.guard) scan(*tr.guard);
    for (const auto& a : tr.assignments) {
      used.insert(a.target);
      scan(a.value);
    }
    if (tr.sync) used.insert(tr.sync->channel);
  }
  for (const auto& c : foreign)
    if (used.count(c) || t.local_decls.clocks.count(c))
      out.push_back({"foreign-clock", "clock " + c + " is used; observers may only use their clock c"});

  std::set<std::string> mentioned;
  auto grab = [&](const std::string& text) {
    for (auto it = std::sregex_iterator(text.begin(), text.end(), placeholder_pattern()); it != std::sregex_iterator(); ++it)
      mentioned.insert(it->str());
  };
  for (const auto& u : used) grab(u);
  auto open = tpl.xml.find("<template>");
  if (open != std::string::npos) grab(tpl.xml.substr(open));
  for (const auto& p : tpl.placeholders)
    if (!mentioned.count(p)) out.push_back({"unused-placeholder", "placeholder " + p + " does not appear in the template"});
  for (const auto& m : mentioned)
    if (!declared.count(m) && m != "__OBS__")
      out.push_back({"unknown-placeholder", m + " is used but not listed in the manifest"});
  return out;
}

} // namespace pspta::observe
