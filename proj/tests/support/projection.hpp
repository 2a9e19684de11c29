#pragma once

#include <set>
#include <string>
#include <vector>

#include "pspta/adjust/adjuster.hpp"
#include "pspta/oracle/explore.hpp"

namespace pspta::testing {

using Projected = std::vector<std::string>;

/// Reachable states with no process inside an instrumentation pseudo-location (nor an added
/// process in a committed location), reduced to the processes, variables and clocks of
/// `original`.
inline std::set<Projected> settled_projection(const oracle::StateGraph& g, const ta::NtaModel& adjusted,
                                              const ta::NtaModel& original) {
  const auto& net = g.network();
  std::vector<int> keep;
  for (std::size_t i = 0; i < net.slots.size(); ++i) {
    const auto& name = net.slots[i].name;
    bool ours = false;
    auto dot = name.find('.');
    if (dot == std::string::npos) {
      ours = original.global_decls.declares(name);
    } else if (const auto* t = original.find_template(name.substr(0, dot))) {
      ours = t->local_decls.declares(name.substr(dot + 1));
    }
    if (ours) keep.push_back(net.slot_pos(i));
  }
  std::set<Projected> out;
  for (std::size_t s = 0; s < g.size(); ++s) {
    const auto* st = g.state(s);
    Projected row;
    bool settled = true;
    for (std::size_t p = 0; p < net.procs.size() && settled; ++p) {
      const auto& loc = net.procs[p].locs[static_cast<std::size_t>(st[p])];
      const auto* t = adjusted.find_template(net.procs[p].name);
      const auto* l = t->find_location(loc.id);
      if (!original.find_template(net.procs[p].name)) {
        settled = l->kind != ta::LocationKind::Committed;
        continue;
      }
      settled = !adjust::is_pseudo(*l);
      row.push_back(net.procs[p].name + "." + loc.display);
    }
    if (!settled) continue;
    for (int pos : keep) row.push_back(net.slot_at(pos).name + "=" + std::to_string(st[pos]));
    out.insert(std::move(row));
  }
  return out;
}

inline std::set<Projected> projection(const oracle::StateGraph& g, const ta::NtaModel& m) {
  return settled_projection(g, m, m);
}

} // namespace pspta::testing
