#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pspta/errors.hpp"
#include "pspta/oracle/query.hpp"
#include "pspta/psp/spec.hpp"

// Pattern semantics evaluated straight on the original model's state graph.
//
// A location X "occurs" in a step when some process in the step takes an edge whose
// target is X (self-loops included); in the initial state every held location occurs.
// Conditions on what holds are read in the state reached by the step, so entries that
// happen together in one synchronisation are judged on the combined outcome. Elapsed
// time is counted in unit delays.

namespace pspta::oracle {

namespace direct {

enum class Status { Neutral, Pending, Bad };

struct Mon {
  int phase = 0;
  int k = 0;
  bool operator==(const Mon&) const = default;
};

struct Site {
  int proc = 0;
  int loc = 0;
};

/// What a monitor sees of one step.
struct Step {
  const std::int32_t* to = nullptr;
  bool delay = false;
  const std::vector<std::pair<int, int>>* parts = nullptr;  // null for the initial step
  const Network* net = nullptr;

  bool holds(const Site& x) const { return to[x.proc] == x.loc; }
  bool entered(const Site& x) const {
    if (!parts) return holds(x);
    for (auto [p, e] : *parts)
      if (p == x.proc && net->procs[static_cast<std::size_t>(p)].edges[static_cast<std::size_t>(e)].dst == x.loc)
        return true;
    return false;
  }
};

struct Monitor {
  bool liveness = false;
  std::function<Mon(Mon, const Step&)> step;
  std::function<Status(const Mon&)> status;
};

/// Builds the monitor for `spec`; nullopt when the combination has no direct semantics here.
inline std::optional<Monitor> monitor_for(const psp::PropertySpec& spec, const std::function<Site(psp::Role)>& site) {
  using psp::PatternKind;
  using psp::Role;
  using psp::ScopeKind;
  if (!spec.chain.empty() || spec.has(Role::Z)) return std::nullopt;
  const bool timed = spec.timed;
  const long long lo = timed ? spec.interval->lower : 0;
  const long long hi = timed && spec.interval->upper ? *spec.interval->upper : 0;
  if (timed && !spec.interval->upper) return std::nullopt;
  const int over = static_cast<int>(hi + 1);
  auto in_window = [=](int k) { return !timed || (k >= lo && k <= hi); };
  auto tick = [=](Mon m, const Step& st) {
    if (timed && st.delay && m.k < over) ++m.k;
    return m;
  };
  auto bad_if = [](int bad_phase) {
    return [bad_phase](const Mon& m) { return m.phase == bad_phase ? Status::Bad : Status::Neutral; };
  };

  const auto p = spec.pattern;
  const auto sc = spec.scope;
  constexpr int kBad = 9;

  if (sc == ScopeKind::Globally &&
      (p == PatternKind::Absence || p == PatternKind::Universality || p == PatternKind::Existence)) {
    Site P = site(Role::P);
    Monitor mon;
    if (p == PatternKind::Existence) {
      // 0 waiting, 1 seen
      mon.liveness = true;
      mon.step = [=](Mon m, const Step& st) {
        if (m.phase != 0) return m;
        m = tick(m, st);
        if (timed && m.k > hi) m.phase = kBad;
        else if (st.holds(P) && in_window(m.k)) m.phase = 1;
        return m;
      };
      mon.status = [](const Mon& m) {
        return m.phase == 0 ? Status::Pending : m.phase == kBad ? Status::Bad : Status::Neutral;
      };
    } else {
      const bool want = p == PatternKind::Universality;
      mon.step = [=](Mon m, const Step& st) {
        if (m.phase == kBad) return m;
        m = tick(m, st);
        if (in_window(m.k) && st.holds(P) != want) m.phase = kBad;
        return m;
      };
      mon.status = bad_if(kBad);
    }
    return mon;
  }

  if (sc == ScopeKind::After && !timed && (p == PatternKind::Absence || p == PatternKind::Universality)) {
    Site P = site(Role::P), Q = site(Role::Q);
    const bool want = p == PatternKind::Universality;
    Monitor mon;
    mon.step = [=](Mon m, const Step& st) {
      if (m.phase == kBad) return m;
      if (m.phase == 0 && st.entered(Q)) m.phase = 1;
      if (m.phase == 1 && st.holds(P) != want) m.phase = kBad;
      return m;
    };
    mon.status = bad_if(kBad);
    return mon;
  }

  if (p == PatternKind::Existence && sc == ScopeKind::After && timed) {
    if (lo != 0) return std::nullopt;
    Site P = site(Role::P), Q = site(Role::Q);
    // 0 before Q, 1 open, 2 satisfied
    Monitor mon;
    mon.liveness = true;
    mon.step = [=](Mon m, const Step& st) {
      if (m.phase == 0) {
        if (!st.entered(Q)) return m;
        m.phase = 1;
        m.k = 0;
      } else if (m.phase == 1) {
        m = tick(m, st);
      } else {
        return m;
      }
      if (m.k > hi) m.phase = kBad;
      else if (st.holds(P)) m.phase = 2;
      return m;
    };
    mon.status = [](const Mon& m) {
      return m.phase == 1 ? Status::Pending : m.phase == kBad ? Status::Bad : Status::Neutral;
    };
    return mon;
  }

  if (p == PatternKind::Existence && sc == ScopeKind::Between && !timed) {
    Site P = site(Role::P), Q = site(Role::Q), R = site(Role::R);
    // 0 closed, 1 open without P, 2 open with P
    Monitor mon;
    mon.step = [=](Mon m, const Step& st) {
      switch (m.phase) {
        case 0:
          if (st.entered(Q) && !st.holds(R)) m.phase = st.holds(P) ? 2 : 1;
          break;
        case 1:
          if (st.entered(R)) m.phase = kBad;
          else if (st.entered(P)) m.phase = 2;
          break;
        case 2:
          if (st.entered(R)) m.phase = 0;
          break;
        default:
          break;
      }
      return m;
    };
    mon.status = bad_if(kBad);
    return mon;
  }

  if (p == PatternKind::BoundedExistence && sc == ScopeKind::Between && !timed) {
    Site P = site(Role::P), Q = site(Role::Q), R = site(Role::R);
    const int n = static_cast<int>(*spec.count);
    // 0 closed, 1 open with k entries of P so far
    Monitor mon;
    mon.step = [=](Mon m, const Step& st) {
      if (m.phase == 0) {
        if (st.entered(Q) && !st.holds(R)) m = Mon{1, 0};
      } else if (m.phase == 1) {
        if (st.entered(R)) {
          m = Mon{0, 0};
        } else if (st.entered(P)) {
          if (++m.k > n) m.phase = kBad;
        }
      }
      return m;
    };
    mon.status = bad_if(kBad);
    return mon;
  }

  if (p == PatternKind::Response && sc == ScopeKind::Globally && timed) {
    if (lo != 0) return std::nullopt;
    Site P = site(Role::P), S = site(Role::S);
    // 0 idle, 1 waiting for S since the oldest open P
    Monitor mon;
    mon.liveness = true;
    mon.step = [=](Mon m, const Step& st) {
      if (m.phase == kBad) return m;
      if (m.phase == 1) {
        m = tick(m, st);
        if (m.k > hi) {
          m.phase = kBad;
          return m;
        }
        if (st.holds(S)) m = Mon{0, 0};
        return m;
      }
      if (st.entered(P) && !st.holds(S)) m = Mon{1, 0};
      return m;
    };
    mon.status = [](const Mon& m) {
      return m.phase == 1 ? Status::Pending : m.phase == kBad ? Status::Bad : Status::Neutral;
    };
    return mon;
  }

  if (p == PatternKind::Response && sc == ScopeKind::Between && !timed) {
    Site P = site(Role::P), S = site(Role::S), Q = site(Role::Q), R = site(Role::R);
    // 0 closed, 1 open, 2 open with an unanswered P
    Monitor mon;
    mon.step = [=](Mon m, const Step& st) {
      switch (m.phase) {
        case 0:
          if (st.entered(Q) && !st.holds(R)) m.phase = st.holds(P) && !st.holds(S) ? 2 : 1;
          break;
        case 1:
          if (st.entered(R)) m.phase = 0;
          else if (st.entered(P) && !st.holds(S)) m.phase = 2;
          break;
        case 2:
          if (st.entered(R)) m.phase = kBad;
          else if (st.holds(S)) m.phase = 1;
          break;
        default:
          break;
      }
      return m;
    };
    mon.status = bad_if(kBad);
    return mon;
  }

  if (p == PatternKind::ResponseInvariance && sc == ScopeKind::Globally && !timed) {
    Site P = site(Role::P), S = site(Role::S);
    Monitor mon;
    mon.step = [=](Mon m, const Step& st) {
      if (m.phase == 0 && st.holds(P)) m.phase = 1;
      if (m.phase == 1 && !st.holds(S)) m.phase = kBad;
      return m;
    };
    mon.status = bad_if(kBad);
    return mon;
  }

  if (p == PatternKind::Absence && sc == ScopeKind::Before && !timed) {
    Site P = site(Role::P), R = site(Role::R);
    // 0 before R, 1 P seen before R, 2 R reached
    Monitor mon;
    mon.step = [=](Mon m, const Step& st) {
      if (m.phase == 0) {
        if (st.holds(R)) m.phase = 2;
        else if (st.holds(P)) m.phase = 1;
      } else if (m.phase == 1 && st.entered(R)) {
        m.phase = kBad;
      }
      return m;
    };
    mon.status = bad_if(kBad);
    return mon;
  }

  return std::nullopt;
}

} // namespace direct

inline bool has_direct_semantics(const psp::PropertySpec& spec) {
  return direct::monitor_for(spec, [](psp::Role) { return direct::Site{}; }).has_value();
}

/// Checks `spec` on the uninstrumented model `m` by exploring its state graph together
/// with a monitor of the pattern's semantics.
inline Verdict check_pattern_direct(const ta::NtaModel& m, const psp::PropertySpec& spec, const Options& opts = {}) {
  auto start = std::chrono::steady_clock::now();
  if (!has_direct_semantics(spec))
    throw UnsupportedSpec("no direct semantics for " + std::string(psp::to_string(spec.pattern)) + " " +
                          std::string(psp::to_string(spec.scope)) + (spec.timed ? " (timed)" : "") +
                          (spec.timed && spec.interval && spec.interval->lower != 0 ? " with a nonzero lower bound" : ""));

  auto net = std::make_shared<const Network>(m, opts);
  auto g = explore(net);
  const Network& nw = *net;

  auto site = [&](psp::Role r) {
    auto h = ta::resolve_location(m, spec.ref(r));
    const std::string& tname = m.templates[h.template_index].name;
    auto pi = nw.proc_index(tname);
    if (!pi) throw UnsupportedSpec("template '" + tname + "' is not part of the system");
    const auto& locs = nw.procs[*pi].locs;
    for (std::size_t i = 0; i < locs.size(); ++i)
      if (locs[i].id == h.location_id) return direct::Site{static_cast<int>(*pi), static_cast<int>(i)};
    throw UnsupportedSpec("location '" + spec.ref(r) + "' not found");
  };
  auto mon = *direct::monitor_for(spec, site);

  // product of the state graph with the monitor
  struct Node {
    std::size_t g;
    direct::Mon m;
    std::size_t parent;
    std::optional<Label> via;
  };
  struct KeyHash {
    std::size_t operator()(const std::tuple<std::size_t, int, int>& k) const {
      auto [a, b, c] = k;
      return a * 1000003u ^ static_cast<std::size_t>(b) * 7919u ^ static_cast<std::size_t>(c);
    }
  };
  std::vector<Node> nodes;
  std::vector<std::vector<std::size_t>> succ;
  std::unordered_map<std::tuple<std::size_t, int, int>, std::size_t, KeyHash> index;
  auto intern = [&](std::size_t gi, direct::Mon mm, std::size_t parent, std::optional<Label> via) {
    auto key = std::make_tuple(gi, mm.phase, mm.k);
    auto [it, fresh] = index.emplace(key, nodes.size());
    if (fresh) {
      nodes.push_back({gi, mm, parent, std::move(via)});
      succ.emplace_back();
    }
    return std::make_pair(it->second, fresh);
  };

  const State s0 = g->state_vec(0);
  direct::Step init{s0.data(), false, nullptr, &nw};
  intern(0, mon.step(direct::Mon{}, init), 0, std::nullopt);

  std::vector<Move> moves;
  std::optional<std::size_t> bad;
  for (std::size_t i = 0; i < nodes.size() && !bad; ++i) {
    if (mon.status(nodes[i].m) == direct::Status::Bad) {
      bad = i;
      break;
    }
    if (nodes.size() > opts.state_limit) throw StateLimitExceeded("direct check exceeded " + std::to_string(opts.state_limit) + " product states");
    State s = g->state_vec(nodes[i].g);
    moves.clear();
    g->explorer().successors(s, moves);
    for (auto& mv : moves) {
      auto gi = g->find(mv.next);
      direct::Step st{mv.next.data(), mv.label.kind == Label::Kind::Delay, &mv.label.parts, &nw};
      auto [ni, fresh] = intern(*gi, mon.step(nodes[i].m, st), i, mv.label);
      succ[i].push_back(ni);
    }
  }

  auto path = [&](std::size_t target) {
    Trace t;
    std::vector<std::size_t> chain;
    for (std::size_t c = target;; c = nodes[c].parent) {
      chain.push_back(c);
      if (c == 0) break;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
      t.steps.push_back({g->state_vec(nodes[*it].g), nodes[*it].via});
    return t;
  };

  Verdict v;
  v.states_explored = nodes.size();
  if (bad) {
    v.satisfied = false;
    v.witness = path(*bad);
  } else if (mon.liveness) {
    // greatest fixpoint: pending nodes from which some maximal path stays pending
    std::vector<char> in(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) in[i] = mon.status(nodes[i].m) == direct::Status::Pending;
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!in[i] || succ[i].empty()) continue;
        bool keep = false;
        for (auto j : succ[i]) keep = keep || in[j];
        if (!keep) {
          in[i] = 0;
          changed = true;
        }
      }
    }
    v.satisfied = true;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (in[i]) {
        v.satisfied = false;
        v.witness = path(i);
        break;
      }
  } else {
    v.satisfied = true;
  }
  v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return v;
}

inline Verdict check_pattern_direct(const ta::NtaModel& m, const psp::PropertySpec& spec, int clock_ceiling) {
  Options o;
  o.ceiling = clock_ceiling;
  return check_pattern_direct(m, spec, o);
}

} // namespace pspta::oracle
