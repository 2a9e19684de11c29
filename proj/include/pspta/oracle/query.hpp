#pragma once

#include <algorithm>
#include <chrono>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pspta/errors.hpp"
#include "pspta/oracle/explore.hpp"
#include "pspta/ta/expr.hpp"

namespace pspta::oracle {

enum class Shape { Invariantly, Possibly, PotentiallyAlways, Eventually, LeadsTo };

/// One query of the restricted TCTL subset: A[] φ, E<> φ, E[] φ, A<> φ, φ --> ψ.
struct Query {
  Shape shape = Shape::Invariantly;
  ta::Expr phi;
  std::optional<ta::Expr> psi;
  bool operator==(const Query&) const = default;
};

inline std::string strip_query_comments(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text.compare(i, 2, "//") == 0) {
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    if (text.compare(i, 2, "/*") == 0) {
      auto end = text.find("*/", i + 2);
      if (end == std::string_view::npos) throw ExprError("unterminated comment in query");
      i = end + 1;
      continue;
    }
    out += text[i];
  }
  return out;
}

inline Query parse_query(std::string_view raw) {
  std::string text = strip_query_comments(raw);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw ExprError("empty query");
  std::string_view t(text);
  t.remove_prefix(first);
  Query q;
  struct Prefix {
    std::string_view text;
    Shape shape;
  };
  for (Prefix p : {Prefix{"A[]", Shape::Invariantly}, Prefix{"E<>", Shape::Possibly},
                   Prefix{"E[]", Shape::PotentiallyAlways}, Prefix{"A<>", Shape::Eventually}}) {
    if (t.substr(0, p.text.size()) == p.text) {
      q.shape = p.shape;
      q.phi = ta::parse_expr(t.substr(p.text.size()));
      return q;
    }
  }
  auto arrow = t.find("-->");
  if (arrow == std::string_view::npos) throw ExprError("query must start with A[], E<>, E[], A<> or contain -->");
  q.shape = Shape::LeadsTo;
  q.phi = ta::parse_expr(t.substr(0, arrow));
  q.psi = ta::parse_expr(t.substr(arrow + 3));
  return q;
}

inline std::string to_string(const Query& q) {
  using ta::Style;
  switch (q.shape) {
    case Shape::Invariantly: return "A[] " + ta::to_string(q.phi, Style::Query);
    case Shape::Possibly: return "E<> " + ta::to_string(q.phi, Style::Query);
    case Shape::PotentiallyAlways: return "E[] " + ta::to_string(q.phi, Style::Query);
    case Shape::Eventually: return "A<> " + ta::to_string(q.phi, Style::Query);
    case Shape::LeadsTo:
      return ta::to_string(q.phi, Style::Query) + " --> " + ta::to_string(*q.psi, Style::Query);
  }
  return "";
}

/// A finite path, or a lasso when `loop_start` is set (the last state steps back to
/// `steps[*loop_start]`).
struct Trace {
  struct Step {
    State state;
    std::optional<Label> via;  // edge taken from the previous step
  };
  std::vector<Step> steps;
  std::optional<std::size_t> loop_start;
  std::optional<Label> loop_via;
};

struct Verdict {
  bool satisfied = false;
  std::optional<Trace> witness;
  std::size_t states_explored = 0;
  double seconds = 0;
};

namespace detail {

inline std::vector<char> mark(const StateGraph& g, const CExpr& e) {
  std::vector<char> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = eval(e, g.state(i), g.out_degree(i) == 0 ? 1 : 0) != 0;
  return out;
}

/// States from which some maximal path stays inside `inside` forever (or until a deadlock).
inline std::vector<char> exists_globally(const StateGraph& g, const std::vector<char>& inside) {
  const std::size_t n = g.size();
  std::vector<char> in = inside;
  std::vector<std::size_t> count(n, 0);
  std::deque<std::size_t> drop;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in[i]) continue;
    for (auto it = g.succ_begin(i); it != g.succ_end(i); ++it) count[i] += in[*it] ? 1 : 0;
    if (g.out_degree(i) > 0 && count[i] == 0) drop.push_back(i);
  }
  const auto& preds = g.predecessors();
  while (!drop.empty()) {
    std::size_t s = drop.front();
    drop.pop_front();
    if (!in[s]) continue;
    in[s] = 0;
    for (auto p : preds[s]) {
      if (!in[p]) continue;
      if (--count[p] == 0) drop.push_back(p);
    }
  }
  return in;
}

inline Trace path_to(const StateGraph& g, std::size_t target) {
  std::vector<std::size_t> ids;
  for (std::int64_t cur = static_cast<std::int64_t>(target); cur >= 0; cur = g.parent(static_cast<std::size_t>(cur)))
    ids.push_back(static_cast<std::size_t>(cur));
  std::reverse(ids.begin(), ids.end());
  Trace t;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Trace::Step st{g.state_vec(ids[i]), std::nullopt};
    if (i) st.via = g.label_between(ids[i - 1], ids[i]);
    t.steps.push_back(std::move(st));
  }
  return t;
}

/// Extends `t` along the first successor inside `inside` until a deadlock or until the walk
/// revisits a state at or after step `walk_start`, which closes the lasso.
inline void extend_lasso(const StateGraph& g, Trace& t, std::size_t walk_start, const std::vector<char>& inside) {
  std::vector<std::size_t> ids;
  for (std::size_t k = walk_start; k < t.steps.size(); ++k) ids.push_back(*g.find(t.steps[k].state));
  for (;;) {
    std::size_t cur = ids.back();
    if (g.out_degree(cur) == 0) return;
    std::optional<std::size_t> next;
    for (auto it = g.succ_begin(cur); it != g.succ_end(cur); ++it)
      if (inside[*it]) {
        next = *it;
        break;
      }
    if (!next) throw Error("internal: lasso walk left its fixpoint");
    Label via = g.label_between(cur, *next);
    auto seen = std::find(ids.begin(), ids.end(), *next);
    if (seen != ids.end()) {
      t.loop_start = walk_start + static_cast<std::size_t>(seen - ids.begin());
      t.loop_via = via;
      return;
    }
    ids.push_back(*next);
    t.steps.push_back({g.state_vec(*next), via});
  }
}

inline std::optional<std::size_t> first_marked(const std::vector<char>& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) return i;
  return std::nullopt;
}

} // namespace detail

/// Evaluates `q` on an explored graph. The graph must have been explored with the query's
/// clock constants (see `check(model, query, options)`).
inline Verdict check(const StateGraph& g, const Query& q) {
  using namespace detail;
  const Network& net = g.network();
  CExpr phi = net.compile_query(q.phi);
  Verdict v;
  v.states_explored = g.size();
  std::vector<char> mp = mark(g, phi);
  switch (q.shape) {
    case Shape::Invariantly: {
      std::vector<char> bad(mp.size());
      for (std::size_t i = 0; i < mp.size(); ++i) bad[i] = !mp[i];
      auto hit = first_marked(bad);
      v.satisfied = !hit;
      if (hit) v.witness = path_to(g, *hit);
      break;
    }
    case Shape::Possibly: {
      auto hit = first_marked(mp);
      v.satisfied = hit.has_value();
      if (hit) v.witness = path_to(g, *hit);
      break;
    }
    case Shape::PotentiallyAlways:
    case Shape::Eventually: {
      std::vector<char> inside = mp;
      if (q.shape == Shape::Eventually)
        for (auto& c : inside) c = !c;
      auto eg = exists_globally(g, inside);
      bool holds = !eg.empty() && eg[0];
      v.satisfied = q.shape == Shape::PotentiallyAlways ? holds : !holds;
      if (holds) {
        Trace t;
        t.steps.push_back({g.state_vec(0), std::nullopt});
        extend_lasso(g, t, 0, eg);
        v.witness = std::move(t);
      }
      break;
    }
    case Shape::LeadsTo: {
      CExpr psi = net.compile_query(*q.psi);
      std::vector<char> mq = mark(g, psi);
      std::vector<char> not_psi(mq.size());
      for (std::size_t i = 0; i < mq.size(); ++i) not_psi[i] = !mq[i];
      auto eg = exists_globally(g, not_psi);
      std::vector<char> bad(mp.size());
      for (std::size_t i = 0; i < mp.size(); ++i) bad[i] = mp[i] && eg[i];
      auto hit = first_marked(bad);
      v.satisfied = !hit;
      if (hit) {
        Trace t = path_to(g, *hit);
        extend_lasso(g, t, t.steps.size() - 1, eg);
        v.witness = std::move(t);
      }
      break;
    }
  }
  return v;
}

struct CheckResult {
  std::shared_ptr<StateGraph> graph;
  Verdict verdict;
};

/// Compiles, explores and checks in one go, with the clock saturation widened to the
/// query's constants. The graph is kept for rendering the witness.
inline CheckResult check_keeping_graph(const ta::NtaModel& m, const Query& q, const Options& opts = {}) {
  auto start = std::chrono::steady_clock::now();
  auto net = std::make_shared<const Network>(m, opts);
  CExpr phi = net->compile_query(q.phi);
  std::vector<const CExpr*> extra{&phi};
  std::optional<CExpr> psi;
  if (q.psi) {
    psi = net->compile_query(*q.psi);
    extra.push_back(&*psi);
  }
  CheckResult r;
  r.graph = explore(net, extra);
  r.verdict = check(*r.graph, q);
  r.verdict.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline Verdict check(const ta::NtaModel& m, const Query& q, const Options& opts = {}) {
  return check_keeping_graph(m, q, opts).verdict;
}

// ---------------------------------------------------------------------------
// Trace rendering

inline nlohmann::json state_json(const Network& net, const State& s) {
  nlohmann::json locs = nlohmann::json::object(), vars = nlohmann::json::object(),
                 clocks = nlohmann::json::object();
  for (std::size_t p = 0; p < net.procs.size(); ++p)
    locs[net.procs[p].name] = net.procs[p].locs[static_cast<std::size_t>(s[p])].display;
  for (std::size_t i = 0; i < net.slots.size(); ++i) {
    const Slot& sl = net.slots[i];
    auto v = s[net.procs.size() + i];
    if (sl.clock) clocks[sl.name] = v;
    else if (sl.boolean) vars[sl.name] = v != 0;
    else vars[sl.name] = v;
  }
  return {{"locations", locs}, {"variables", vars}, {"clocks", clocks}};
}

inline nlohmann::json trace_json(const Explorer& ex, const Trace& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& st : t.steps) {
    nlohmann::json j = state_json(ex.network(), st.state);
    if (st.via) j["edge"] = ex.describe(*st.via);
    steps.push_back(std::move(j));
  }
  nlohmann::json out{{"steps", steps}};
  if (t.loop_start) {
    out["loop_start"] = *t.loop_start;
    out["loop_edge"] = ex.describe(*t.loop_via);
  }
  return out;
}

inline std::string state_text(const Network& net, const State& s) {
  std::string out = "(";
  for (std::size_t p = 0; p < net.procs.size(); ++p)
    out += (p ? ", " : "") + net.procs[p].name + "." + net.procs[p].locs[static_cast<std::size_t>(s[p])].display;
  out += ")";
  for (std::size_t i = 0; i < net.slots.size(); ++i)
    out += " " + net.slots[i].name + "=" + std::to_string(s[net.procs.size() + i]);
  return out;
}

inline std::string trace_text(const Explorer& ex, const Trace& t) {
  std::string out;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& st = t.steps[i];
    if (st.via) out += "  --[" + ex.describe(*st.via) + "]-->\n";
    out += (t.loop_start == i ? "* " : "  ") + std::to_string(i) + ": " + state_text(ex.network(), st.state) + "\n";
  }
  if (t.loop_start)
    out += "  --[" + ex.describe(*t.loop_via) + "]--> back to step " + std::to_string(*t.loop_start) + "\n";
  return out;
}

} // namespace pspta::oracle
