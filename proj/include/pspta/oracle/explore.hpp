#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pspta/errors.hpp"
#include "pspta/oracle/network.hpp"

namespace pspta::oracle {

using State = std::vector<std::int32_t>;

/// How a successor was produced.
struct Label {
  enum class Kind { Delay, Internal, Sync } kind = Kind::Delay;
  int chan = -1;
  /// (process, edge) pairs; for a synchronisation the sender comes first.
  std::vector<std::pair<int, int>> parts;

  bool operator==(const Label&) const = default;
};

struct Move {
  State next;
  Label label;
};

/// Discrete-time successor relation of a Network.
class Explorer {
public:
  Explorer(std::shared_ptr<const Network> net, std::vector<std::int32_t> caps)
      : net_(std::move(net)), caps_(std::move(caps)) {}

  const Network& network() const { return *net_; }
  const std::vector<std::int32_t>& caps() const { return caps_; }

  State initial() const { return net_->initial_state(); }

  bool invariants_hold(const std::int32_t* s) const {
    for (std::size_t p = 0; p < net_->procs.size(); ++p) {
      const CLoc& l = net_->procs[p].locs[static_cast<std::size_t>(s[p])];
      if (l.inv && !eval(*l.inv, s)) return false;
    }
    return true;
  }

  /// Appends every successor of `s` in a fixed order: actions by process, edge and
  /// receiver choice, then the unit delay.
  void successors(const State& s, std::vector<Move>& out) const {
    const auto& procs = net_->procs;
    const std::size_t n = procs.size();
    bool committed = false, frozen = false;
    for (std::size_t p = 0; p < n; ++p) {
      auto kind = loc_of(s, p).kind;
      committed |= kind == ta::LocationKind::Committed;
      frozen |= kind != ta::LocationKind::Normal;
    }
    auto is_committed = [&](int p) { return loc_of(s, static_cast<std::size_t>(p)).kind == ta::LocationKind::Committed; };

    for (std::size_t p = 0; p < n; ++p) {
      for (int ei : procs[p].out[static_cast<std::size_t>(s[p])]) {
        const CEdge& e = procs[p].edges[static_cast<std::size_t>(ei)];
        if (e.guard && !eval(*e.guard, s.data())) continue;
        const int ip = static_cast<int>(p);
        if (e.chan < 0) {
          if (committed && !is_committed(ip)) continue;
          emit(s, Label{Label::Kind::Internal, -1, {{ip, ei}}}, out);
          continue;
        }
        if (!e.send) continue;
        if (net_->broadcast[static_cast<std::size_t>(e.chan)]) {
          std::vector<std::vector<int>> choices(n);
          for (std::size_t q = 0; q < n; ++q)
            if (q != p) choices[q] = receivers(s, q, e.chan);
          std::vector<std::pair<int, int>> parts{{ip, ei}};
          bool any_committed = is_committed(ip);
          enumerate_broadcast(s, e.chan, choices, 0, parts, any_committed, committed, out);
        } else {
          for (std::size_t q = 0; q < n; ++q) {
            if (q == p) continue;
            for (int ri : receivers(s, q, e.chan)) {
              const int iq = static_cast<int>(q);
              if (committed && !is_committed(ip) && !is_committed(iq)) continue;
              emit(s, Label{Label::Kind::Sync, e.chan, {{ip, ei}, {iq, ri}}}, out);
            }
          }
        }
      }
    }

    if (!frozen) {
      State next = s;
      for (std::size_t i = 0; i < net_->slots.size(); ++i) {
        if (!net_->slots[i].clock) continue;
        auto& v = next[n + i];
        if (v < caps_[i]) ++v;
      }
      if (invariants_hold(next.data())) out.push_back({std::move(next), Label{}});
    }
  }

  std::string describe(const Label& l) const {
    const auto& procs = net_->procs;
    if (l.kind == Label::Kind::Delay) return "delay(1)";
    std::string out = l.kind == Label::Kind::Sync ? "sync " + net_->channels[static_cast<std::size_t>(l.chan)] + ": " : "";
    for (std::size_t i = 0; i < l.parts.size(); ++i) {
      const CProc& p = procs[static_cast<std::size_t>(l.parts[i].first)];
      const CEdge& e = p.edges[static_cast<std::size_t>(l.parts[i].second)];
      if (i) out += ", ";
      out += p.name + ": " + p.locs[static_cast<std::size_t>(e.src)].display + " -> " +
             p.locs[static_cast<std::size_t>(e.dst)].display;
    }
    return out;
  }

private:
  std::shared_ptr<const Network> net_;
  std::vector<std::int32_t> caps_;

  const CLoc& loc_of(const State& s, std::size_t p) const {
    return net_->procs[p].locs[static_cast<std::size_t>(s[p])];
  }

  std::vector<int> receivers(const State& s, std::size_t q, int chan) const {
    std::vector<int> r;
    const CProc& proc = net_->procs[q];
    for (int ei : proc.out[static_cast<std::size_t>(s[q])]) {
      const CEdge& e = proc.edges[static_cast<std::size_t>(ei)];
      if (e.chan == chan && !e.send && (!e.guard || eval(*e.guard, s.data()))) r.push_back(ei);
    }
    return r;
  }

  void enumerate_broadcast(const State& s, int chan, const std::vector<std::vector<int>>& choices, std::size_t q,
                           std::vector<std::pair<int, int>>& parts, bool any_committed, bool committed,
                           std::vector<Move>& out) const {
    if (q == choices.size()) {
      if (committed && !any_committed) return;
      emit(s, Label{Label::Kind::Sync, chan, parts}, out);
      return;
    }
    if (choices[q].empty()) {
      enumerate_broadcast(s, chan, choices, q + 1, parts, any_committed, committed, out);
      return;
    }
    const int iq = static_cast<int>(q);
    bool c = loc_of(s, q).kind == ta::LocationKind::Committed;
    for (int ri : choices[q]) {
      parts.emplace_back(iq, ri);
      enumerate_broadcast(s, chan, choices, q + 1, parts, any_committed || c, committed, out);
      parts.pop_back();
    }
  }

  void emit(const State& s, Label label, std::vector<Move>& out) const {
    State next = s;
    const std::size_t n = net_->procs.size();
    for (const auto& [p, ei] : label.parts) {
      const CEdge& e = net_->procs[static_cast<std::size_t>(p)].edges[static_cast<std::size_t>(ei)];
      for (const auto& a : e.assigns) {
        long long v = eval(a.value, next.data());
        const Slot& slot = net_->slot_at(a.pos);
        if (slot.clock) {
          if (v < 0) throw RangeError("negative value assigned to clock '" + slot.name + "'");
          v = std::min<long long>(v, caps_[static_cast<std::size_t>(a.pos) - n]);
        } else if (slot.boolean) {
          v = v != 0;
        } else if (v < slot.lo || v > slot.hi) {
          throw RangeError("value " + std::to_string(v) + " assigned to '" + slot.name + "' is outside [" +
                           std::to_string(slot.lo) + "," + std::to_string(slot.hi) + "]");
        }
        next[static_cast<std::size_t>(a.pos)] = static_cast<std::int32_t>(v);
      }
      next[static_cast<std::size_t>(p)] = e.dst;
    }
    if (!invariants_hold(next.data())) return;
    out.push_back({std::move(next), std::move(label)});
  }
};

/// Fully explored reachable state space. States are numbered in breadth-first
/// discovery order and `parent` records the BFS tree.
class StateGraph {
public:
  explicit StateGraph(std::shared_ptr<const Explorer> ex) : ex_(std::move(ex)), width_(ex_->network().width()) {}
  StateGraph(const StateGraph&) = delete;
  StateGraph& operator=(const StateGraph&) = delete;

  std::size_t size() const { return parent_.size(); }
  std::size_t width() const { return width_; }
  const Explorer& explorer() const { return *ex_; }
  const Network& network() const { return ex_->network(); }

  const std::int32_t* state(std::size_t i) const { return arena_.data() + i * width_; }
  State state_vec(std::size_t i) const { return State(state(i), state(i) + width_); }

  std::size_t out_degree(std::size_t i) const { return begin_[i + 1] - begin_[i]; }
  const std::uint32_t* succ_begin(std::size_t i) const { return succ_.data() + begin_[i]; }
  const std::uint32_t* succ_end(std::size_t i) const { return succ_.data() + begin_[i + 1]; }
  bool is_delay_edge(std::size_t edge) const { return delay_[edge] != 0; }
  std::size_t edge_begin(std::size_t i) const { return begin_[i]; }
  std::size_t edge_count() const { return succ_.size(); }
  std::size_t delay_edge_count() const {
    std::size_t n = 0;
    for (auto d : delay_) n += d;
    return n;
  }
  std::int64_t parent(std::size_t i) const { return parent_[i]; }

  /// Predecessor lists (with edge multiplicity), built on first use.
  const std::vector<std::vector<std::uint32_t>>& predecessors() const {
    if (preds_.empty() && size() > 0) {
      preds_.resize(size());
      for (std::size_t i = 0; i < size(); ++i)
        for (auto it = succ_begin(i); it != succ_end(i); ++it) preds_[*it].push_back(static_cast<std::uint32_t>(i));
    }
    return preds_;
  }

  std::optional<std::size_t> find(const State& s) const {
    auto it = index_.find(Key{this, s.data()});
    if (it == index_.end()) return std::nullopt;
    return *it;
  }

  /// Label of the first edge from `from` to `to`, recomputed from the successor relation.
  Label label_between(std::size_t from, std::size_t to) const {
    std::vector<Move> moves;
    ex_->successors(state_vec(from), moves);
    for (auto& mv : moves)
      if (std::equal(mv.next.begin(), mv.next.end(), state(to))) return mv.label;
    throw Error("internal: no edge between states");
  }

  void build(std::size_t limit) {
    std::vector<Move> moves;
    intern(ex_->initial(), -1);
    begin_.push_back(0);
    for (std::size_t cur = 0; cur < size(); ++cur) {
      moves.clear();
      ex_->successors(state_vec(cur), moves);
      for (auto& mv : moves) {
        std::size_t id = intern(mv.next, static_cast<std::int64_t>(cur));
        if (size() > limit) throw StateLimitExceeded("state limit of " + std::to_string(limit) + " exceeded");
        succ_.push_back(static_cast<std::uint32_t>(id));
        delay_.push_back(mv.label.kind == Label::Kind::Delay);
      }
      begin_.push_back(succ_.size());
    }
  }

private:
  struct Key {
    const StateGraph* g;
    const std::int32_t* data;  // null means "use the stored state at index"
    std::size_t index = 0;
    const std::int32_t* ptr() const { return data ? data : g->state(index); }
  };
  struct Hash {
    using is_transparent = void;
    const StateGraph* g;
    std::size_t operator()(std::size_t i) const { return hash(g->state(i), g->width_); }
    std::size_t operator()(const Key& k) const { return hash(k.ptr(), g->width_); }
    static std::size_t hash(const std::int32_t* p, std::size_t w) {
      std::size_t h = 1469598103934665603ull;
      for (std::size_t i = 0; i < w; ++i) {
        h ^= static_cast<std::uint32_t>(p[i]);
        h *= 1099511628211ull;
      }
      return h;
    }
  };
  struct Eq {
    using is_transparent = void;
    const StateGraph* g;
    bool same(const std::int32_t* a, const std::int32_t* b) const { return std::equal(a, a + g->width_, b); }
    bool operator()(std::size_t a, std::size_t b) const { return a == b; }
    bool operator()(const Key& a, std::size_t b) const { return same(a.ptr(), g->state(b)); }
    bool operator()(std::size_t a, const Key& b) const { return same(g->state(a), b.ptr()); }
  };

  std::shared_ptr<const Explorer> ex_;
  std::size_t width_;
  std::vector<std::int32_t> arena_;
  std::vector<std::int64_t> parent_;
  std::vector<std::size_t> begin_;
  std::vector<std::uint32_t> succ_;
  std::vector<std::uint8_t> delay_;
  std::unordered_set<std::size_t, Hash, Eq> index_{64, Hash{this}, Eq{this}};
  mutable std::vector<std::vector<std::uint32_t>> preds_;

  std::size_t intern(const State& s, std::int64_t parent) {
    auto it = index_.find(Key{this, s.data()});
    if (it != index_.end()) return *it;
    std::size_t id = parent_.size();
    arena_.insert(arena_.end(), s.begin(), s.end());
    parent_.push_back(parent);
    index_.insert(id);
    return id;
  }
};

/// Explores the reachable state space of `m`. Query expressions whose clock constants
/// must be distinguishable are passed in `query_exprs` (already compiled against the same
/// model via `Network::compile_query`).
inline std::shared_ptr<StateGraph> explore(std::shared_ptr<const Network> net,
                                           const std::vector<const CExpr*>& query_exprs = {}) {
  auto caps = net->clock_caps(query_exprs);
  auto ex = std::make_shared<const Explorer>(net, caps);
  auto g = std::make_shared<StateGraph>(ex);
  g->build(net->options().state_limit);
  return g;
}

inline std::shared_ptr<StateGraph> explore(const ta::NtaModel& m, const Options& opts = {}) {
  return explore(std::make_shared<const Network>(m, opts));
}

inline std::shared_ptr<StateGraph> explore(const ta::NtaModel& m, int clock_ceiling) {
  Options o;
  o.ceiling = clock_ceiling;
  return explore(m, o);
}

} // namespace pspta::oracle
