#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pspta/errors.hpp"
#include "pspta/ta/model.hpp"

namespace pspta::oracle {

using ta::Expr;
using ta::Op;

struct Options {
  /// Upper saturation bound for every clock value.
  int ceiling = 1000;
  std::size_t state_limit = 2'000'000;
  /// Range assumed for ints declared without one; empty means such ints are an error.
  std::optional<std::pair<long long, long long>> default_range = std::pair<long long, long long>{0, 255};
};

/// Expression with every name resolved to a state-vector position.
struct CExpr {
  enum class K : std::uint8_t { Const, Slot, Loc, Deadlock, Unary, Binary };
  K k = K::Const;
  Op op = Op::Not;
  long long v = 0;
  int pos = -1;  // Slot: state index; Loc: process index
  int loc = -1;  // Loc: location index
  std::vector<CExpr> args;
};

inline long long eval(const CExpr& e, const std::int32_t* s, int deadlock = -1) {
  switch (e.k) {
    case CExpr::K::Const: return e.v;
    case CExpr::K::Slot: return s[e.pos];
    case CExpr::K::Loc: return s[e.pos] == e.loc;
    case CExpr::K::Deadlock:
      if (deadlock < 0) throw NameError("'deadlock' is only meaningful in queries");
      return deadlock;
    case CExpr::K::Unary: {
      long long a = eval(e.args[0], s, deadlock);
      return e.op == Op::Not ? !a : -a;
    }
    case CExpr::K::Binary: {
      if (e.op == Op::And) return eval(e.args[0], s, deadlock) && eval(e.args[1], s, deadlock);
      if (e.op == Op::Or) return eval(e.args[0], s, deadlock) || eval(e.args[1], s, deadlock);
      if (e.op == Op::Imply) return !eval(e.args[0], s, deadlock) || eval(e.args[1], s, deadlock);
      long long a = eval(e.args[0], s, deadlock), b = eval(e.args[1], s, deadlock);
      switch (e.op) {
        case Op::Eq: return a == b;
        case Op::Ne: return a != b;
        case Op::Lt: return a < b;
        case Op::Le: return a <= b;
        case Op::Gt: return a > b;
        case Op::Ge: return a >= b;
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div:
          if (b == 0) throw RangeError("division by zero");
          return a / b;
        case Op::Mod:
          if (b == 0) throw RangeError("modulo by zero");
          return a % b;
        default: break;
      }
    }
  }
  return 0;
}

struct Slot {
  std::string name;  // "v" for globals, "Tpl.v" for locals
  bool clock = false;
  bool boolean = false;
  long long lo = 0, hi = 0;
  long long initial = 0;
};

struct CAssign {
  int pos;
  CExpr value;
};

struct CEdge {
  int index;  // position in the template's transition list
  int src, dst;
  std::optional<CExpr> guard;
  int chan = -1;
  bool send = false;
  std::vector<CAssign> assigns;
};

struct CLoc {
  std::string id;
  std::string display;
  ta::LocationKind kind;
  std::optional<CExpr> inv;
};

struct CProc {
  std::string name;
  std::vector<CLoc> locs;
  std::vector<CEdge> edges;
  std::vector<std::vector<int>> out;  // per location, edge indices in declaration order
  int initial = 0;
};

/// Flattened, index-resolved form of an NtaModel. State vectors are laid out as
/// [location per process..., variable and clock slots...].
class Network {
public:
  std::vector<CProc> procs;
  std::vector<Slot> slots;
  std::vector<std::string> channels;
  std::vector<bool> broadcast;

  Network(const ta::NtaModel& m, const Options& opts) : opts_(opts), nprocs_(m.system.size()) {
    add_scope(m.global_decls, "", globals_);
    for (const auto& name : m.system) {
      const ta::TemplateAutomaton* t = m.find_template(name);
      if (!t) throw RefError("system references unknown template '" + name + "'");
      auto& locals = locals_[name];
      add_scope(t->local_decls, name + ".", locals);
    }
    for (const auto& [c, kind] : m.global_decls.channels) add_channel(c, kind, "");
    for (const auto& name : m.system) {
      const ta::TemplateAutomaton& t = *m.find_template(name);
      for (const auto& [c, kind] : t.local_decls.channels) add_channel(c, kind, name);
    }
    for (const auto& name : m.system) compile_template(*m.find_template(name));
    for (const auto& p : procs)
      for (const auto& e : p.edges) scan_clock_bounds(e.guard, e.assigns);
    for (const auto& p : procs)
      for (const auto& l : p.locs) scan_clock_bounds(l.inv, {});
  }

  std::size_t width() const { return nprocs_ + slots.size(); }
  int slot_pos(std::size_t slot) const { return static_cast<int>(nprocs_ + slot); }
  const Slot& slot_at(int pos) const { return slots[static_cast<std::size_t>(pos) - nprocs_]; }

  std::vector<std::int32_t> initial_state() const {
    std::vector<std::int32_t> s(width());
    for (std::size_t i = 0; i < procs.size(); ++i) s[i] = procs[i].initial;
    for (std::size_t i = 0; i < slots.size(); ++i) s[procs.size() + i] = static_cast<std::int32_t>(slots[i].initial);
    return s;
  }

  /// Resolves a query-level expression: `Tpl.Loc`, `Tpl.var`, globals, constants, `deadlock`.
  CExpr compile_query(const Expr& e) const {
    switch (e.kind) {
      case Expr::Kind::Int:
      case Expr::Kind::Bool: return konst(e.value);
      case Expr::Kind::Ident: {
        if (e.name == "deadlock") {
          CExpr c;
          c.k = CExpr::K::Deadlock;
          return c;
        }
        if (auto c = constant("", e.name)) return konst(*c);
        if (auto it = globals_.find(e.name); it != globals_.end()) return slot_ref(it->second);
        throw NameError("unknown name '" + e.name + "' in query");
      }
      case Expr::Kind::Member: {
        auto pi = proc_index(e.name);
        if (!pi) throw NameError("unknown process '" + e.name + "' in query");
        const CProc& p = procs[*pi];
        for (int pass = 0; pass < 2; ++pass)
          for (std::size_t l = 0; l < p.locs.size(); ++l)
            if ((pass == 0 ? p.locs[l].display : p.locs[l].id) == e.member) {
              CExpr c;
              c.k = CExpr::K::Loc;
              c.pos = static_cast<int>(*pi);
              c.loc = static_cast<int>(l);
              return c;
            }
        if (auto c = constant(e.name, e.member)) return konst(*c);
        auto& locals = locals_.at(e.name);
        if (auto it = locals.find(e.member); it != locals.end()) return slot_ref(it->second);
        throw NameError("'" + e.name + "' has no location or variable '" + e.member + "'");
      }
      case Expr::Kind::Unary:
      case Expr::Kind::Binary: {
        CExpr c;
        c.k = e.kind == Expr::Kind::Unary ? CExpr::K::Unary : CExpr::K::Binary;
        c.op = e.op;
        for (const auto& a : e.args) c.args.push_back(compile_query(a));
        return c;
      }
    }
    throw NameError("unsupported query expression");
  }

  /// Saturation value per clock slot: one past the largest constant the clock is compared
  /// with (including `extra` query expressions), bounded by the ceiling.
  std::vector<std::int32_t> clock_caps(const std::vector<const CExpr*>& extra = {}) const {
    auto maxc = max_const_;
    bool diff = difference_;
    for (const CExpr* e : extra) scan(*e, maxc, diff, false);
    std::vector<std::int32_t> caps(slots.size(), 0);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (!slots[i].clock) continue;
      long long c = diff ? opts_.ceiling : std::min<long long>(opts_.ceiling, maxc[i] + 1);
      caps[i] = static_cast<std::int32_t>(std::max<long long>(c, 0));
    }
    return caps;
  }

  const Options& options() const { return opts_; }

  std::optional<std::size_t> proc_index(const std::string& name) const {
    for (std::size_t i = 0; i < procs.size(); ++i)
      if (procs[i].name == name) return i;
    return std::nullopt;
  }

private:
  Options opts_;
  std::size_t nprocs_;
  std::map<std::string, std::size_t> globals_;
  std::map<std::string, std::map<std::string, std::size_t>> locals_;
  std::map<std::string, long long> global_consts_;
  std::map<std::string, std::map<std::string, long long>> local_consts_;
  std::map<std::string, int> global_chans_;
  std::map<std::string, std::map<std::string, int>> local_chans_;
  std::vector<long long> max_const_;
  bool difference_ = false;

  static CExpr konst(long long v) {
    CExpr c;
    c.v = v;
    return c;
  }

  CExpr slot_ref(std::size_t slot) const {
    CExpr c;
    c.k = CExpr::K::Slot;
    c.pos = slot_pos(slot);
    return c;
  }

  std::optional<long long> constant(const std::string& tpl, const std::string& name) const {
    if (!tpl.empty()) {
      auto it = local_consts_.find(tpl);
      if (it != local_consts_.end())
        if (auto jt = it->second.find(name); jt != it->second.end()) return jt->second;
      return std::nullopt;
    }
    if (auto it = global_consts_.find(name); it != global_consts_.end()) return it->second;
    return std::nullopt;
  }

  void add_scope(const ta::DeclarationSet& d, const std::string& prefix, std::map<std::string, std::size_t>& index) {
    std::string tpl = prefix.empty() ? "" : prefix.substr(0, prefix.size() - 1);
    for (const auto& [n, v] : d.constants) (tpl.empty() ? global_consts_ : local_consts_[tpl])[n] = v;
    for (const auto& [n, decl] : d.ints) {
      Slot s;
      s.name = prefix + n;
      s.initial = decl.initial;
      if (decl.range) {
        std::tie(s.lo, s.hi) = *decl.range;
      } else if (opts_.default_range) {
        std::tie(s.lo, s.hi) = *opts_.default_range;
      } else {
        throw UnboundedVariable("int '" + s.name + "' has no declared range");
      }
      if (s.initial < s.lo || s.initial > s.hi)
        throw RangeError("initial value of '" + s.name + "' outside its range");
      index[n] = slots.size();
      slots.push_back(s);
    }
    for (const auto& [n, init] : d.bools) {
      Slot s;
      s.name = prefix + n;
      s.boolean = true;
      s.lo = 0;
      s.hi = 1;
      s.initial = init ? 1 : 0;
      index[n] = slots.size();
      slots.push_back(s);
    }
    for (const auto& c : d.clocks) {
      Slot s;
      s.name = prefix + c;
      s.clock = true;
      index[c] = slots.size();
      slots.push_back(s);
    }
    max_const_.resize(slots.size(), 0);
  }

  void add_channel(const std::string& c, ta::ChannelKind kind, const std::string& tpl) {
    int id = static_cast<int>(channels.size());
    channels.push_back(tpl.empty() ? c : tpl + "." + c);
    broadcast.push_back(kind == ta::ChannelKind::Broadcast);
    (tpl.empty() ? global_chans_ : local_chans_[tpl])[c] = id;
  }

  CExpr compile_local(const Expr& e, const std::string& tpl) const {
    switch (e.kind) {
      case Expr::Kind::Int:
      case Expr::Kind::Bool: return konst(e.value);
      case Expr::Kind::Ident: {
        if (auto c = constant(tpl, e.name)) return konst(*c);
        auto& locals = locals_.at(tpl);
        if (auto it = locals.find(e.name); it != locals.end()) return slot_ref(it->second);
        if (auto c = constant("", e.name)) return konst(*c);
        if (auto it = globals_.find(e.name); it != globals_.end()) return slot_ref(it->second);
        throw RefError("undeclared identifier '" + e.name + "' in template " + tpl);
      }
      case Expr::Kind::Member: throw UnsupportedFeature("qualified name '" + e.name + "." + e.member + "' in a model label");
      case Expr::Kind::Unary:
      case Expr::Kind::Binary: {
        CExpr c;
        c.k = e.kind == Expr::Kind::Unary ? CExpr::K::Unary : CExpr::K::Binary;
        c.op = e.op;
        for (const auto& a : e.args) c.args.push_back(compile_local(a, tpl));
        return c;
      }
    }
    throw RefError("unsupported expression");
  }

  bool is_clock(const CExpr& e) const { return e.k == CExpr::K::Slot && slot_at(e.pos).clock; }

  bool mentions_clock(const CExpr& e) const {
    if (is_clock(e)) return true;
    for (const auto& a : e.args)
      if (mentions_clock(a)) return true;
    return false;
  }

  static bool constant_valued(const CExpr& e) {
    if (e.k == CExpr::K::Const) return true;
    if (e.k == CExpr::K::Unary || e.k == CExpr::K::Binary) {
      for (const auto& a : e.args)
        if (!constant_valued(a)) return false;
      return true;
    }
    return false;
  }

  /// Records clock comparison constants; `strict_check` rejects open clock constraints.
  void scan(const CExpr& e, std::vector<long long>& maxc, bool& diff, bool strict_check, bool negated = false) const {
    if (e.k == CExpr::K::Unary && e.op == Op::Not) {
      scan(e.args[0], maxc, diff, strict_check, !negated);
      return;
    }
    if (e.k == CExpr::K::Binary) {
      bool cmp = e.op == Op::Eq || e.op == Op::Ne || e.op == Op::Lt || e.op == Op::Le || e.op == Op::Gt ||
                 e.op == Op::Ge;
      if (cmp && (mentions_clock(e.args[0]) || mentions_clock(e.args[1]))) {
        bool open = e.op == Op::Lt || e.op == Op::Gt || e.op == Op::Ne;
        if (strict_check && (open != negated))
          throw UnsupportedFeature("strict clock comparison is not supported by the discrete-time checker");
        const CExpr* clk = is_clock(e.args[0]) ? &e.args[0] : is_clock(e.args[1]) ? &e.args[1] : nullptr;
        const CExpr* other = clk == &e.args[0] ? &e.args[1] : &e.args[0];
        if (clk && constant_valued(*other) && !mentions_clock(*other)) {
          long long k = eval(*other, nullptr);
          auto& m = maxc[static_cast<std::size_t>(clk->pos) - nprocs_];
          m = std::max(m, k);
        } else {
          diff = true;
        }
        return;
      }
    }
    for (const auto& a : e.args) scan(a, maxc, diff, strict_check, negated);
  }

  void scan_clock_bounds(const std::optional<CExpr>& e, const std::vector<CAssign>& assigns) {
    if (e) scan(*e, max_const_, difference_, true);
    for (const auto& a : assigns) {
      if (!slot_at(a.pos).clock) continue;
      if (!constant_valued(a.value)) throw UnsupportedFeature("clock assigned a non-constant value");
      auto& m = max_const_[static_cast<std::size_t>(a.pos) - nprocs_];
      m = std::max(m, eval(a.value, nullptr));
    }
  }

  void compile_template(const ta::TemplateAutomaton& t) {
    CProc p;
    p.name = t.name;
    std::map<std::string, int> loc_index;
    for (const auto& l : t.locations) {
      CLoc cl{l.id, l.display(), l.kind, std::nullopt};
      if (l.invariant) cl.inv = compile_local(*l.invariant, t.name);
      loc_index[l.id] = static_cast<int>(p.locs.size());
      p.locs.push_back(std::move(cl));
    }
    auto li = [&](const std::string& id) {
      auto it = loc_index.find(id);
      if (it == loc_index.end()) throw RefError("template " + t.name + " has no location '" + id + "'");
      return it->second;
    };
    p.initial = li(t.initial);
    p.out.resize(p.locs.size());
    for (std::size_t i = 0; i < t.transitions.size(); ++i) {
      const auto& tr = t.transitions[i];
      CEdge e;
      e.index = static_cast<int>(i);
      e.src = li(tr.source);
      e.dst = li(tr.target);
      if (tr.guard) e.guard = compile_local(*tr.guard, t.name);
      if (tr.sync) {
        auto lt = local_chans_.find(t.name);
        if (lt != local_chans_.end() && lt->second.count(tr.sync->channel))
          e.chan = lt->second.at(tr.sync->channel);
        else if (global_chans_.count(tr.sync->channel))
          e.chan = global_chans_.at(tr.sync->channel);
        else
          throw RefError("undeclared channel '" + tr.sync->channel + "' in " + ta::detail::transition_label(t, i));
        e.send = tr.sync->send;
      }
      for (const auto& a : tr.assignments) {
        CExpr target = compile_local(Expr::ident(a.target), t.name);
        if (target.k != CExpr::K::Slot) throw RefError("cannot assign to constant '" + a.target + "'");
        e.assigns.push_back({target.pos, compile_local(a.value, t.name)});
      }
      p.out[static_cast<std::size_t>(e.src)].push_back(static_cast<int>(p.edges.size()));
      p.edges.push_back(std::move(e));
    }
    procs.push_back(std::move(p));
  }
};

} // namespace pspta::oracle
