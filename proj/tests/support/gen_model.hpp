#pragma once

#include <random>
#include <string>
#include <vector>

#include "support/builder.hpp"

namespace pspta::testing {

struct GenOptions {
  int max_templates = 2;
  int max_locations = 4;  // per template
  int max_edges = 6;      // per template
  int max_const = 4;
};

/// A small random network: global clock x, counter n in [0,2], broadcast b and plain h.
/// Every location is Normal and every clock comparison is non-strict.
inline ta::NtaModel random_model(std::mt19937& rng, const GenOptions& o = {}) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  ModelBuilder b("clock x; int[0,2] n = 0; broadcast chan b; chan h;");
  const int ntpl = pick(1, o.max_templates);
  for (int t = 0; t < ntpl; ++t) {
    std::string name(1, static_cast<char>('A' + t));
    auto tb = b.tpl(name);
    const int nloc = pick(2, o.max_locations);
    for (int l = 0; l < nloc; ++l) {
      std::string inv;
      if (pick(0, 2) == 0) inv = "x <= " + std::to_string(pick(1, o.max_const));
      tb.loc("L" + std::to_string(l), inv);
    }
    const int nedge = pick(1, o.max_edges);
    for (int e = 0; e < nedge; ++e) {
      // keep the graph connected-ish: the first edges walk the location chain
      int from = e < nloc - 1 ? e : pick(0, nloc - 1);
      int to = e < nloc - 1 ? e + 1 : pick(0, nloc - 1);
      std::string guard, sync, assign;
      switch (pick(0, 5)) {
        case 0: guard = "x >= " + std::to_string(pick(1, o.max_const)); break;
        case 1: guard = "x <= " + std::to_string(pick(0, o.max_const)); break;
        case 2: guard = "n < 2"; assign = "n = n + 1"; break;
        case 3: guard = "n == " + std::to_string(pick(0, 2)); break;
        default: break;
      }
      switch (pick(0, 5)) {
        case 0: sync = "b!"; break;
        case 1: sync = "b?"; break;
        case 2: sync = "h!"; break;
        case 3: sync = "h?"; break;
        default: break;
      }
      // a receiver's guard is read before the sender's update, so only senders count
      if (sync.size() == 2 && sync[1] == '?' && assign == "n = n + 1") assign.clear();
      switch (pick(0, 3)) {
        case 0: assign += std::string(assign.empty() ? "" : ", ") + "x = 0"; break;
        case 1: if (assign.empty()) assign = "n = 0"; break;
        default: break;
      }
      tb.edge("L" + std::to_string(from), "L" + std::to_string(to), guard, sync, assign);
    }
  }
  return b.build();
}

/// "Tpl.Loc" for every location of the model.
inline std::vector<std::string> all_refs(const ta::NtaModel& m) {
  std::vector<std::string> out;
  for (const auto& t : m.templates)
    for (const auto& l : t.locations) out.push_back(t.name + "." + l.display());
  return out;
}

} // namespace pspta::testing
