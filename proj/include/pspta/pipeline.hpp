#pragma once

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pspta/adjust/adjuster.hpp"
#include "pspta/errors.hpp"
#include "pspta/formula/catalog.hpp"
#include "pspta/observe/catalog.hpp"
#include "pspta/oracle/query.hpp"
#include "pspta/psp/grammar.hpp"
#include "pspta/route/router.hpp"
#include "pspta/ta/xml.hpp"

namespace pspta::pipeline {

inline constexpr int kReportSchemaVersion = 1;

/// A failure tied to one property; `what()` carries the id and, for grammar errors,
/// the offset into the sentence.
class CompileError : public Error {
public:
  CompileError(std::string id, const std::string& what) : Error(id.empty() ? what : id + ": " + what), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

private:
  std::string id_;
};

struct PropertyInput {
  std::string id;
  std::string text;
};

/// One property per non-empty line; `ID: sentence` names it, `#` starts a comment line.
inline std::vector<PropertyInput> parse_property_file(const std::string& text) {
  static const std::regex with_id(R"(^\s*([A-Za-z0-9_.()\-]+):\s+(.*\S)\s*$)");
  std::vector<PropertyInput> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    ++n;
    std::smatch m;
    if (std::regex_match(line, m, with_id)) {
      out.push_back({m[1].str(), m[2].str()});
    } else {
      auto last = line.find_last_not_of(" \t\r");
      out.push_back({"P" + std::to_string(n), line.substr(first, last - first + 1)});
    }
  }
  return out;
}

struct Artifacts {
  std::string id;
  std::string text;
  psp::PropertySpec spec;
  route::ProcessKind process = route::ProcessKind::FormulaOnly;
  ta::NtaModel model;  // M', with the observer appended for the Observer process
  std::string model_xml;
  formula::Query query;
  std::string queries_q;
  adjust::AdjustmentReport adjustment;
  std::optional<observe::ObserverInstance> observer;
  double ptime_seconds = 0;

  nlohmann::json report() const {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["property"] = {{"id", id},
                     {"text", text},
                     {"pattern", std::string(psp::to_string(spec.pattern))},
                     {"scope", std::string(psp::to_string(spec.scope))},
                     {"timed", spec.timed}};
    j["process"] = std::string(route::to_string(process));
    j["states_added"] = adjustment.states_added;
    j["transitions_added"] = adjustment.transitions_added;
    j["ptime_seconds"] = ptime_seconds;
    j["generated_names"] = adjustment.generated_names;
    j["adjustment"] = adjustment.to_json();
    j["queries"] = nlohmann::json::array({query.text});
    if (observer) {
      j["observer"] = {{"name", observer->name},
                       {"template", observe::to_string(observer->key)},
                       {"verdict", observer->verdict.kind == observe::VerdictKind::Safety ? "safety" : "liveness"},
                       {"locations", observer->automaton.locations.size()},
                       {"transitions", observer->automaton.transitions.size()}};
    }
    return j;
  }
};

/// parse_property, classify, then formula only / instrument and formula / instrument and
/// observer. Every upstream error is rethrown as a CompileError naming the property.
inline Artifacts compile(const ta::NtaModel& m, const PropertyInput& prop, const observe::Catalog& catalog) {
  try {
    Artifacts a;
    a.id = prop.id;
    a.text = prop.text;
    a.spec = psp::parse_property(prop.text);
    for (const auto& ref : a.spec.distinct_refs()) ta::resolve_location(m, ref);
    a.process = route::classify(a.spec);

    auto start = std::chrono::steady_clock::now();
    auto adj = adjust::instrument_for(a.spec, m);
    a.adjustment = adj.report();
    if (a.process == route::ProcessKind::Observer) {
      const auto& tpl = catalog.lookup(observe::key_of(a.spec));
      a.observer = observe::instantiate(tpl, a.spec, a.adjustment, adj.model());
      a.model = observe::compose(adj.model(), *a.observer);
      a.query = formula::verdict_query_for(*a.observer);
    } else {
      a.model = adj.take_model();
      a.query = formula::formula_for(a.spec, a.adjustment);
    }
    a.ptime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    a.model_xml = ta::serialize_model(a.model);
    a.queries_q = formula::render_query_file({{a.id, a.text, a.query}});
    return a;
  } catch (const GrammarError& e) {
    throw CompileError(prop.id, std::string("syntax error: ") + e.what());
  } catch (const Error& e) {
    throw CompileError(prop.id, e.what());
  }
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw NotFound("cannot write '" + p.string() + "'");
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFound("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_artifacts(const Artifacts& a, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "adjusted_model.xml", a.model_xml);
  write_file(dir / "queries.q", a.queries_q);
  write_file(dir / "report.json", a.report().dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Verification

enum class Outcome { Satisfied, Violated, Inconclusive, Unknown };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Satisfied: return "satisfied";
    case Outcome::Violated: return "violated";
    case Outcome::Inconclusive: return "inconclusive";
    case Outcome::Unknown: return "unknown";
  }
  return "?";
}

struct QueryResult {
  std::string query;
  Outcome outcome = Outcome::Unknown;
  std::size_t states_explored = 0;
  double seconds = 0;
  std::optional<std::string> trace_text;
  std::optional<nlohmann::json> trace_json;
  std::string note;
};

struct VerifyResult {
  std::string id;  // property id, from the report when present
  std::filesystem::path dir;
  std::vector<QueryResult> queries;

  Outcome outcome() const {
    bool unsure = false;
    for (const auto& q : queries) {
      if (q.outcome == Outcome::Violated) return Outcome::Violated;
      unsure = unsure || q.outcome != Outcome::Satisfied;
    }
    return unsure ? Outcome::Inconclusive : Outcome::Satisfied;
  }
};

/// 0 when everything is satisfied, 1 when anything is violated, 3 otherwise.
inline int exit_code(const std::vector<VerifyResult>& results) {
  bool unsure = false;
  for (const auto& r : results) {
    auto o = r.outcome();
    if (o == Outcome::Violated) return 1;
    unsure = unsure || o != Outcome::Satisfied;
  }
  return unsure ? 3 : 0;
}

/// Directories holding an artifact set: `dir` itself, or its sorted subdirectories.
inline std::vector<std::filesystem::path> artifact_dirs(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (fs::exists(dir / "adjusted_model.xml")) return {dir};
  std::vector<fs::path> out;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_directory() && fs::exists(e.path() / "adjusted_model.xml")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw NotFound("no adjusted_model.xml in '" + dir.string() + "' or its subdirectories");
  return out;
}

inline std::string property_id(const std::filesystem::path& dir) {
  auto p = dir / "report.json";
  if (!std::filesystem::exists(p)) return dir.filename().string();
  try {
    return nlohmann::json::parse(read_file(p)).at("property").at("id").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    return dir.filename().string();
  }
}

inline VerifyResult verify_with_oracle(const std::filesystem::path& dir, const oracle::Options& opts = {}) {
  VerifyResult r;
  r.dir = dir;
  r.id = property_id(dir);
  auto model = ta::parse_model(read_file(dir / "adjusted_model.xml"));
  for (const auto& text : formula::parse_query_file(read_file(dir / "queries.q"))) {
    QueryResult q;
    q.query = text;
    try {
      auto res = oracle::check_keeping_graph(model, oracle::parse_query(text), opts);
      q.outcome = res.verdict.satisfied ? Outcome::Satisfied : Outcome::Violated;
      q.states_explored = res.graph->size();
      q.seconds = res.verdict.seconds;
      if (!res.verdict.satisfied && res.verdict.witness) {
        q.trace_text = oracle::trace_text(res.graph->explorer(), *res.verdict.witness);
        q.trace_json = oracle::trace_json(res.graph->explorer(), *res.verdict.witness);
      }
    } catch (const StateLimitExceeded& e) {
      q.outcome = Outcome::Inconclusive;
      q.note = e.what();
    }
    r.queries.push_back(std::move(q));
  }
  return r;
}

/// Outcomes read from verifier output lines "Formula is satisfied" / "Formula is NOT satisfied".
inline std::vector<Outcome> parse_verifier_output(const std::string& out) {
  std::vector<Outcome> v;
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find("Formula is NOT satisfied") != std::string::npos) v.push_back(Outcome::Violated);
    else if (line.find("Formula is satisfied") != std::string::npos) v.push_back(Outcome::Satisfied);
  }
  return v;
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

inline VerifyResult verify_with_external(const std::filesystem::path& dir, const std::filesystem::path& verifier) {
  namespace fs = std::filesystem;
  if (verifier.empty()) throw NotFound("external verification needs a verifier path");
  if (!fs::exists(verifier)) throw NotFound("verifier not found: '" + verifier.string() + "'");
  VerifyResult r;
  r.dir = dir;
  r.id = property_id(dir);
  auto queries = formula::parse_query_file(read_file(dir / "queries.q"));
  std::string cmd = shell_quote(verifier.string()) + " " + shell_quote((dir / "adjusted_model.xml").string()) + " " +
                    shell_quote((dir / "queries.q").string()) + " 2>&1";
  std::string output;
  auto start = std::chrono::steady_clock::now();
  if (FILE* pipe = popen(cmd.c_str(), "r")) {
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), n);
    pclose(pipe);
  } else {
    throw NotFound("cannot run verifier '" + verifier.string() + "'");
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto outcomes = parse_verifier_output(output);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    QueryResult q;
    q.query = queries[i];
    q.seconds = secs;
    if (outcomes.size() == queries.size()) {
      q.outcome = outcomes[i];
    } else {
      q.outcome = Outcome::Unknown;
      q.note = "verifier output not understood";
    }
    r.queries.push_back(std::move(q));
  }
  return r;
}

inline nlohmann::json to_json(const VerifyResult& r) {
  nlohmann::json qs = nlohmann::json::array();
  for (const auto& q : r.queries) {
    nlohmann::json j = {{"query", q.query},
                        {"verdict", std::string(to_string(q.outcome))},
                        {"satisfied", q.outcome == Outcome::Satisfied},
                        {"states_explored", q.states_explored},
                        {"seconds", q.seconds}};
    if (q.trace_json) j["trace"] = *q.trace_json;
    if (!q.note.empty()) j["note"] = q.note;
    qs.push_back(j);
  }
  return {{"schema_version", kReportSchemaVersion}, {"id", r.id}, {"verdict", std::string(to_string(r.outcome()))},
          {"queries", qs}};
}

} // namespace pspta::pipeline
