#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "pspta/psp/grammar.hpp"
#include "pspta/route/router.hpp"

using namespace pspta;
using namespace pspta::psp;
using namespace pspta::route;

TEST(Router, PaperExamples) {
  EXPECT_EQ(classify(parse_property("Globally, it is never the case that {A.a} holds.")), ProcessKind::FormulaOnly);
  EXPECT_EQ(classify(parse_property("After {Q.q}, {A.a} holds eventually within 10 ms.")), ProcessKind::Observer);
  EXPECT_EQ(classify(parse_property("After {Q.q}, {A.a} holds eventually.")), ProcessKind::Flag);
  for (auto scope : kAllScopes) {
    auto d = decide(PatternKind::Precedence, scope, true);
    EXPECT_FALSE(d.process);
    EXPECT_NE(d.reason.find("not applicable in UPPAAL"), std::string::npos);
  }
  EXPECT_THROW(classify(parse_property(
                   "Globally, if {P.p} holds, then it must have been the case that {S.s} has occurred before {P.p} "
                   "holds within 5 ms.")),
               Unsupported);
}

TEST(Router, MatchesCheckedInTable) {
  auto rows = load_routing_table();
  ASSERT_EQ(rows.size(), 200u);
  std::set<std::tuple<PatternKind, ScopeKind, bool>> seen;
  for (const auto& r : rows) {
    EXPECT_TRUE(seen.insert({r.pattern, r.scope, r.timed}).second) << "duplicate row";
    auto d = decide(r.pattern, r.scope, r.timed);
    EXPECT_EQ(d.process, r.process) << to_string(r.pattern) << " " << to_string(r.scope) << " "
                                    << (r.timed ? "timed" : "qualitative");
    EXPECT_EQ(d.process.has_value(), d.reason.empty());
  }
  EXPECT_EQ(seen.size(), 200u);
}

TEST(Router, CellCounts) {
  std::map<std::optional<ProcessKind>, int> cells;
  std::set<std::pair<PatternKind, ScopeKind>> formula_pairs, flag_pairs;
  for (auto p : kAllPatterns)
    for (auto s : kAllScopes)
      for (bool timed : {false, true}) {
        auto d = decide(p, s, timed);
        ++cells[d.process];
        if (d.process == ProcessKind::FormulaOnly) formula_pairs.insert({p, s});
        if (d.process == ProcessKind::Flag) flag_pairs.insert({p, s});
      }
  EXPECT_EQ(cells[std::nullopt], 40);
  EXPECT_EQ(200 - cells[std::nullopt], 160);
  EXPECT_EQ(formula_pairs.size(), 4u);
  EXPECT_EQ(flag_pairs.size(), 4u);
  EXPECT_EQ(cells[ProcessKind::Flag], 4);
  EXPECT_EQ(cells[ProcessKind::FormulaOnly], 7);
}

TEST(Router, TableParserRejectsGarbage) {
  std::istringstream bad("pattern,scope,variant,process\nAbsence,Globally,qualitative,Maybe\n");
  EXPECT_THROW(parse_routing_table(bad), SchemaError);
  std::istringstream short_row("Absence,Globally\n");
  EXPECT_THROW(parse_routing_table(short_row), SchemaError);
}
