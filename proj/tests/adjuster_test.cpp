#include <gtest/gtest.h>

#include "pspta/adjust/adjuster.hpp"
#include "pspta/oracle/query.hpp"
#include "pspta/psp/grammar.hpp"
#include "pspta/ta/xml.hpp"
#include "support/builder.hpp"
#include "support/projection.hpp"

using namespace pspta;
using pspta::testing::ModelBuilder;

namespace {

// L0 -> P -> L1, with P in the middle
ta::NtaModel chain3() {
  ModelBuilder b("clock x; chan go;");
  b.tpl("A")
      .loc("L0", "x <= 2")
      .loc("P", "x <= 4")
      .loc("L1")
      .edge("L0", "P", "x >= 1", "go!", "x = 0")
      .edge("P", "L1", "x >= 2");
  b.tpl("B").loc("W").loc("G").edge("W", "G", "", "go?");
  return b.build();
}

ta::NtaModel fan() {
  ModelBuilder b("int[0,3] n = 0;");
  b.tpl("A")
      .loc("I")
      .loc("J")
      .loc("P")
      .loc("X")
      .loc("Y")
      .edge("I", "P", "n == 0", "", "n = 1")
      .edge("J", "P")
      .edge("I", "J", "n == 0")
      .edge("P", "X")
      .edge("P", "Y", "n < 3", "", "n = n + 1")
      .edge("P", "I", "n == 3");
  return b.build();
}

bool settled_flag_law(const ta::NtaModel& m, const adjust::AdjustmentReport& r, const std::string& ref) {
  const auto& s = r.at(ref);
  const std::string mf = r.generated_names.at("mayFire");
  std::string in_p = ref;
  auto q = "A[] " + mf + " != 0 or (" + s.holds_flag + " == 1 and " + in_p + ") or (" + s.holds_flag + " == 0 and not " +
           in_p + ")";
  return oracle::check(m, oracle::parse_query(q)).satisfied;
}

} // namespace

TEST(Adjuster, CountLawOneInOneOut) {
  auto [m, r] = adjust::apply_flag(chain3(), "A.P");
  EXPECT_EQ(r.states_added, 2u);
  EXPECT_EQ(r.transitions_added, 2u);
  const auto* a = m.find_template("A");
  EXPECT_EQ(a->locations.size(), 5u);
  EXPECT_EQ(a->transitions.size(), 4u);
  ASSERT_EQ(r.per_state.size(), 1u);
  EXPECT_EQ(r.per_state[0].enter_location, "P_ENTER");
  ASSERT_EQ(r.per_state[0].left_locations.size(), 1u);
  EXPECT_EQ(r.per_state[0].left_locations[0], "P_LEFTTO_L1");
  EXPECT_EQ(r.per_state[0].reached_channel, "P_reached");
  EXPECT_EQ(m.global_decls.channels.at("P_left"), ta::ChannelKind::Broadcast);
  EXPECT_EQ(m.global_decls.ints.at("P_held_once").range, (std::pair<long long, long long>{0, 1}));
  EXPECT_EQ(m.global_decls.ints.at("mayFire").range, (std::pair<long long, long long>{0, 2}));
  EXPECT_TRUE(m.global_decls.bools.count("nxtCmt"));
}

TEST(Adjuster, CountLawSinkAndFan) {
  ModelBuilder b;
  b.tpl("A").loc("S").loc("P").edge("S", "P");
  auto [m1, r1] = adjust::apply_flag(b.build(), "A.P");
  EXPECT_EQ(r1.states_added, 1u);
  EXPECT_EQ(r1.transitions_added, 1u);

  auto [m2, r2] = adjust::apply_flag(fan(), "A.P");
  EXPECT_EQ(r2.states_added, 4u);
  EXPECT_EQ(r2.transitions_added, 4u);
  EXPECT_EQ(r2.per_state[0].redirected_incoming, 2u);
  EXPECT_EQ(r2.per_state[0].redirected_outgoing, 3u);
}

TEST(Adjuster, PreservesLabelsAndGuardsEveryTransition) {
  auto orig = chain3();
  auto [m, r] = adjust::apply_flag(orig, "A.P");
  const auto* a = m.find_template("A");
  const auto& first = a->transitions[0];
  ASSERT_TRUE(first.sync);
  EXPECT_EQ(first.sync->channel, "go");
  EXPECT_EQ(ta::to_string(*first.guard), "x >= 1 && mayFire == 0 && !nxtCmt");
  // entering the pseudo-location raises the semaphore after the original updates
  ASSERT_EQ(first.assignments.size(), 2u);
  EXPECT_EQ(first.assignments[0].target, "x");
  EXPECT_EQ(ta::to_string(first.assignments[1].value), "mayFire + 1");
  // B's transition is in the system, so it is guarded too
  EXPECT_EQ(ta::to_string(*m.find_template("B")->transitions[0].guard), "mayFire == 0 && !nxtCmt");
  for (const auto& tr : a->transitions) {
    if (!adjust::is_pseudo(*a->find_location(tr.source))) continue;
    EXPECT_FALSE(tr.guard);
    ASSERT_TRUE(tr.sync);
    EXPECT_TRUE(tr.sync->send);
  }
}

TEST(Adjuster, InitialLocationStartsInEntry) {
  ModelBuilder b;
  b.tpl("A").loc("P").loc("Q").edge("P", "Q").edge("Q", "P");
  b.tpl("B").loc("Z");
  auto [m, r] = adjust::apply_flag(b.build(), "A.P");
  const auto* a = m.find_template("A");
  EXPECT_EQ(a->find_location(a->initial)->display(), "P_ENTER");
  EXPECT_EQ(m.global_decls.ints.at("mayFire").initial, 1);
  EXPECT_TRUE(oracle::check(m, oracle::parse_query("A[] A.P imply P_held_once == 1")).satisfied);
  EXPECT_TRUE(settled_flag_law(m, r, "A.P"));
}

TEST(Adjuster, RejectsNonNormalTargets) {
  ModelBuilder b;
  b.tpl("A").loc("S").committed("C").urgent("U").edge("S", "C").edge("C", "U").edge("U", "S");
  auto m = b.build();
  EXPECT_THROW(adjust::apply_flag(m, "A.C"), UnsupportedTarget);
  EXPECT_THROW(adjust::apply_flag(m, "A.U"), UnsupportedTarget);
  EXPECT_THROW(adjust::apply_flag(m, "A.Nope"), NotFound);
  auto [once, r] = adjust::apply_flag(m, "A.S");
  EXPECT_THROW(adjust::apply_flag(once, "A.S_ENTER"), UnsupportedTarget);
}

TEST(Adjuster, GeneratedNamesAvoidClashes) {
  ModelBuilder b("clock gc; int mayFire; int[0,1] P_holds;");
  b.tpl("A").loc("P").loc("Q").edge("P", "Q").edge("Q", "P");
  adjust::Adjuster a(b.build());
  a.apply_flag("A.P");
  EXPECT_EQ(a.add_global_clock(), "gc_1");
  EXPECT_EQ(a.name_of("mayFire"), "mayFire_1");
  EXPECT_EQ(a.at("A.P").holds_flag, "P_1_holds");
  EXPECT_EQ(a.at("A.P").reached_channel, "P_1_reached");
  EXPECT_TRUE(a.model().global_decls.clocks.count("gc_1"));
}

TEST(Adjuster, LocationNameClashGetsSuffix) {
  ModelBuilder b;
  b.tpl("A").loc("P").loc("P_ENTER").edge("P_ENTER", "P").edge("P", "P_ENTER");
  auto [m, r] = adjust::apply_flag(b.build(), "A.P");
  EXPECT_EQ(r.per_state[0].enter_location, "P_ENTER_1");
  EXPECT_EQ(r.per_state[0].left_locations[0], "P_LEFTTO_P_ENTER");
}

TEST(Adjuster, SelfLoopReentersThroughEntry) {
  ModelBuilder b("int[0,2] n = 0;");
  b.tpl("A").loc("P").edge("P", "P", "n < 2", "", "n = n + 1");
  auto [m, r] = adjust::apply_flag(b.build(), "A.P");
  EXPECT_EQ(r.states_added, 2u);
  EXPECT_EQ(r.per_state[0].left_locations[0], "P_LEFTTO_P");
  EXPECT_TRUE(settled_flag_law(m, r, "A.P"));
  EXPECT_TRUE(oracle::check(m, oracle::parse_query("E<> n == 2 and P_holds == 1")).satisfied);
}

TEST(Adjuster, Idempotent) {
  adjust::Adjuster a(fan());
  a.apply_flag("A.P");
  auto once = a.model();
  a.apply_flag("A.P");
  EXPECT_EQ(a.model(), once);
  EXPECT_EQ(a.report().states_added, 4u);

  auto [again, r] = adjust::apply_flag(once, "A.P");
  EXPECT_EQ(again, once);
  EXPECT_EQ(r.states_added, 0u);
  EXPECT_EQ(r.at("A.P").holds_flag, "P_holds");
  EXPECT_EQ(r.at("A.P").left_locations.size(), 3u);
}

TEST(Adjuster, TwoLocationsShareSemaphores) {
  adjust::Adjuster a(fan());
  a.apply_flag("A.P");
  a.apply_flag("A.I");
  const auto& m = a.model();
  EXPECT_EQ(m.global_decls.ints.count("mayFire"), 1u);
  EXPECT_TRUE(settled_flag_law(m, a.report(), "A.P"));
  EXPECT_TRUE(settled_flag_law(m, a.report(), "A.I"));
  // pseudo edges straddling two instrumented locations keep the count consistent
  EXPECT_TRUE(oracle::check(m, oracle::parse_query("A[] mayFire <= 1")).satisfied);
}

TEST(Adjuster, PreservesSettledBehaviour) {
  for (const auto& [orig, ref] : {std::pair{chain3(), std::string("A.P")}, std::pair{fan(), std::string("A.P")},
                                  std::pair{fan(), std::string("A.X")}}) {
    auto [m, r] = adjust::apply_flag(orig, ref);
    auto g0 = oracle::explore(orig);
    auto g1 = oracle::explore(m);
    EXPECT_EQ(pspta::testing::projection(*g0, orig), pspta::testing::settled_projection(*g1, m, orig)) << ref;
  }
}

TEST(Adjuster, InstrumentForSpec) {
  auto spec = psp::parse_property("Globally, if {A.L0} has occurred, then in response {A.P} eventually holds within 5 ms.");
  auto a = adjust::instrument_for(spec, chain3());
  EXPECT_EQ(a.report().per_state.size(), 2u);
  EXPECT_EQ(a.name_of("gc"), "gc");
  auto untimed = psp::parse_property("Globally, {A.P} eventually holds.");
  auto b = adjust::instrument_for(untimed, chain3());
  EXPECT_FALSE(b.model().global_decls.clocks.count("gc"));
}

TEST(Adjuster, SurvivesXmlRoundTrip) {
  auto [m, r] = adjust::apply_flag(fan(), "A.P");
  auto back = ta::parse_model(ta::serialize_model(m));
  EXPECT_EQ(back.templates[0].locations.size(), m.templates[0].locations.size());
  std::size_t pseudo = 0;
  for (const auto& l : back.templates[0].locations) pseudo += adjust::is_pseudo(l);
  EXPECT_EQ(pseudo, 4u);
  auto [again, r2] = adjust::apply_flag(back, "A.P");
  EXPECT_EQ(r2.states_added, 0u);
}

TEST(Adjuster, ReportJson) {
  auto [m, r] = adjust::apply_flag(chain3(), "A.P");
  auto j = r.to_json();
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["states_added"], 2);
  EXPECT_EQ(j["per_state"][0]["enter_location"], "P_ENTER");
  EXPECT_EQ(j["generated_names"]["mayFire"], "mayFire");
}
