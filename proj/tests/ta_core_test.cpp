#include <gtest/gtest.h>

#include <random>

#include "pspta/ta/xml.hpp"
#include "support/files.hpp"

using namespace pspta;
using namespace pspta::ta;
using pspta::testing::fixture;

TEST(Expr, PrecedenceAndPrinting) {
  Expr e = parse_expr("x >= 3 && !flag || n == 1");
  ASSERT_EQ(e.kind, Expr::Kind::Binary);
  EXPECT_EQ(e.op, Op::Or);
  EXPECT_EQ(to_string(e), "x >= 3 && !flag || n == 1");
  EXPECT_EQ(to_string(e, Style::Query), "x >= 3 && (not flag) || n == 1");
  EXPECT_EQ(to_string(parse_expr("(a || b) && c")), "(a || b) && c");
  EXPECT_EQ(to_string(parse_expr("a - (b - c)")), "a - (b - c)");
  EXPECT_EQ(to_string(parse_expr("a imply b imply c")), "a imply b imply c");
  EXPECT_EQ(to_string(parse_expr("(a imply b) imply c")), "(a imply b) imply c");
  EXPECT_EQ(to_string(parse_expr("Tpl.Loc and not x")), "Tpl.Loc && !x");
}

TEST(Expr, KeywordOperatorsBindLoosely) {
  EXPECT_EQ(parse_expr("not n == 2"), parse_expr("!(n == 2)"));
  EXPECT_EQ(parse_expr("!n == 2"), parse_expr("(!n) == 2"));
  EXPECT_EQ(parse_expr("a || b and c"), parse_expr("(a || b) && c"));
  EXPECT_EQ(parse_expr("a and b or c && d"), parse_expr("(a && b) || (c && d)"));
  EXPECT_EQ(parse_expr("not a && b"), parse_expr("!(a && b)"));
  EXPECT_EQ(to_string(parse_expr("not n == 2"), Style::Query), "not n == 2");
  EXPECT_EQ(to_string(parse_expr("(not a) && b"), Style::Query), "(not a) && b");
  EXPECT_EQ(to_string(parse_expr("a imply not b"), Style::Query), "a imply not b");
}

TEST(Expr, RejectsUnsupportedSyntax) {
  EXPECT_THROW(parse_expr("f(1)"), ExprError);
  EXPECT_THROW(parse_expr("a[2]"), ExprError);
  EXPECT_THROW(parse_expr("x <="), ExprError);
  EXPECT_THROW(parse_expr("x $ 1"), ExprError);
}

TEST(Expr, AssignmentsAndSync) {
  auto as = parse_assignments("x := 0, n = n + 1");
  ASSERT_EQ(as.size(), 2u);
  EXPECT_EQ(as[0].target, "x");
  EXPECT_EQ(as[0].value, Expr::integer(0));
  EXPECT_EQ(to_string(as), "x = 0, n = n + 1");
  EXPECT_EQ(parse_sync("go!"), (SyncLabel{"go", true}));
  EXPECT_EQ(parse_sync(" go ? "), (SyncLabel{"go", false}));
  EXPECT_THROW(parse_sync("go"), ExprError);
}

TEST(Expr, PrintParseIdentityOnRandomTrees) {
  std::mt19937 rng(7);
  std::function<Expr(int)> gen = [&](int depth) -> Expr {
    int pick = depth == 0 ? static_cast<int>(rng() % 3) : static_cast<int>(rng() % 6);
    switch (pick) {
      case 0: return Expr::integer(static_cast<long long>(rng() % 20) - 5);
      case 1: return Expr::ident(std::string(1, static_cast<char>('a' + rng() % 4)));
      case 2: return Expr::dotted("T", "L" + std::to_string(rng() % 3));
      case 3: return Expr::unary(Op::Not, gen(depth - 1));
      default: {
        static const Op ops[] = {Op::Imply, Op::Or, Op::And, Op::Eq, Op::Ne, Op::Lt, Op::Le,
                                 Op::Gt,    Op::Ge, Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Mod};
        return Expr::binary(ops[rng() % 14], gen(depth - 1), gen(depth - 1));
      }
    }
  };
  for (int i = 0; i < 500; ++i) {
    Expr e = gen(4);
    EXPECT_EQ(parse_expr(to_string(e)), e) << to_string(e);
    EXPECT_EQ(parse_expr(to_string(e, Style::Query)), e) << to_string(e, Style::Query);
  }
}

TEST(Declarations, ParseAllKinds) {
  auto d = parse_declarations(
      "// comment\nconst int N = 2; clock x, y; int[0,N+1] k = 1, j; bool b = true; chan c; broadcast chan bc;");
  EXPECT_EQ(d.constants.at("N"), 2);
  EXPECT_EQ(d.clocks, (std::set<std::string>{"x", "y"}));
  EXPECT_EQ(d.ints.at("k").initial, 1);
  EXPECT_EQ(d.ints.at("k").range, (std::pair<long long, long long>{0, 3}));
  EXPECT_EQ(d.ints.at("j").initial, 0);
  EXPECT_TRUE(d.bools.at("b"));
  EXPECT_EQ(d.channels.at("c"), ChannelKind::Plain);
  EXPECT_EQ(d.channels.at("bc"), ChannelKind::Broadcast);
  EXPECT_EQ(parse_declarations(to_string(d)), d);
}

TEST(Declarations, RejectsUnsupportedFeatures) {
  EXPECT_THROW(parse_declarations("int a[3];"), UnsupportedFeature);
  EXPECT_THROW(parse_declarations("void f() { }"), UnsupportedFeature);
  EXPECT_THROW(parse_declarations("typedef int[0,3] id_t;"), UnsupportedFeature);
  EXPECT_THROW(parse_declarations("urgent chan u;"), UnsupportedFeature);
  EXPECT_THROW(parse_declarations("int a; bool a;"), SchemaError);
}

TEST(ParseModel, MinimalModel) {
  NtaModel m = parse_model(fixture("minimal.xml"));
  ASSERT_EQ(m.templates.size(), 1u);
  EXPECT_EQ(m.templates[0].locations.size(), 1u);
  EXPECT_EQ(m.templates[0].transitions.size(), 0u);
  EXPECT_TRUE(m.global_decls.empty());
  EXPECT_EQ(m.system, std::vector<std::string>{"Single"});
}

TEST(ParseModel, TransitionLabelsFieldByField) {
  NtaModel m = parse_model(fixture("two_locations.xml"));
  const auto& t = m.templates.at(0);
  ASSERT_EQ(t.transitions.size(), 1u);
  const auto& tr = t.transitions[0];
  EXPECT_EQ(tr.source, "id0");
  EXPECT_EQ(tr.target, "id1");
  ASSERT_TRUE(tr.guard.has_value());
  EXPECT_EQ(*tr.guard, Expr::binary(Op::Le, Expr::ident("x"), Expr::integer(5)));
  ASSERT_TRUE(tr.sync.has_value());
  EXPECT_EQ(tr.sync->channel, "go");
  EXPECT_TRUE(tr.sync->send);
  ASSERT_EQ(tr.assignments.size(), 1u);
  EXPECT_EQ(tr.assignments[0], (Assignment{"b", Expr::integer(1)}));
  EXPECT_EQ(m.system, (std::vector<std::string>{"Sender", "Receiver"}));
}

TEST(ParseModel, UndeclaredChannelNamesTheTransition) {
  try {
    parse_model(fixture("undeclared_channel.xml"));
    FAIL() << "expected RefError";
  } catch (const RefError& e) {
    EXPECT_NE(std::string(e.what()).find("transition #0"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
  }
}

TEST(ParseModel, SchemaAndExpressionErrors) {
  EXPECT_THROW(parse_model("<nta><template>"), SchemaError);
  EXPECT_THROW(parse_model("<foo/>"), SchemaError);
  const std::string bad_guard = R"(<nta><declaration>int b;</declaration><template><name>T</name>
    <location id="l0"/><init ref="l0"/><transition><source ref="l0"/><target ref="l0"/>
    <label kind="guard">b &lt;&lt;= 2</label></transition></template><system>system T;</system></nta>)";
  EXPECT_THROW(parse_model(bad_guard), ExprError);
  const std::string undeclared_var = R"(<nta><declaration></declaration><template><name>T</name>
    <location id="l0"/><init ref="l0"/><transition><source ref="l0"/><target ref="l0"/>
    <label kind="guard">z == 2</label></transition></template><system>system T;</system></nta>)";
  EXPECT_THROW(parse_model(undeclared_var), RefError);
  const std::string lower_inv = R"(<nta><declaration>clock x;</declaration><template><name>T</name>
    <location id="l0"><label kind="invariant">x &gt;= 2</label></location><init ref="l0"/></template>
    <system>system T;</system></nta>)";
  EXPECT_THROW(parse_model(lower_inv), SchemaError);
  const std::string params = R"(<nta><declaration></declaration><template><name>T</name>
    <parameter>int id</parameter><location id="l0"/><init ref="l0"/></template>
    <system>system T;</system></nta>)";
  EXPECT_THROW(parse_model(params), UnsupportedFeature);
  const std::string bad_system = R"(<nta><declaration></declaration><template><name>T</name>
    <location id="l0"/><init ref="l0"/></template><system>system U;</system></nta>)";
  EXPECT_THROW(parse_model(bad_system), RefError);
}

TEST(ParseModel, DeterministicParsing) {
  auto text = fixture("committed_broadcast.xml");
  EXPECT_EQ(parse_model(text), parse_model(text));
}

TEST(Serialize, RoundTripMinimal) {
  NtaModel m = parse_model(fixture("minimal.xml"));
  EXPECT_EQ(parse_model(serialize_model(m)), m);
}

TEST(Serialize, RoundTripKeepsKindsAndChannels) {
  NtaModel m = parse_model(fixture("committed_broadcast.xml"));
  NtaModel back = parse_model(serialize_model(m));
  ASSERT_EQ(back.templates.size(), 2u);
  const auto& ticker = back.templates[0];
  EXPECT_EQ(ticker.find_location("a1")->kind, LocationKind::Committed);
  EXPECT_EQ(ticker.find_location("a2")->kind, LocationKind::Urgent);
  EXPECT_EQ(ticker.find_location("a0")->kind, LocationKind::Normal);
  EXPECT_EQ(back.global_decls.channels.at("tick"), ChannelKind::Broadcast);
  EXPECT_EQ(back.global_decls.channels.at("plain"), ChannelKind::Plain);
  EXPECT_EQ(ticker.local_decls.clocks, std::set<std::string>{"y"});
  EXPECT_EQ(back.templates[0].transitions, m.templates[0].transitions);
  EXPECT_EQ(back.templates[1], m.templates[1]);
  EXPECT_EQ(back.global_decls, m.global_decls);
  EXPECT_EQ(back, m);
}

TEST(Serialize, AnnotationsSurvive) {
  NtaModel m = parse_model(fixture("annotated.xml"));
  const auto& t = m.templates[0];
  EXPECT_EQ(t.locations[0].annotations.at("x"), "-100");
  EXPECT_EQ(t.locations[0].annotations.at("invariant.y"), "57");
  EXPECT_EQ(t.locations[0].annotations.at("comments"), "waiting for work");
  EXPECT_EQ(t.transitions[0].annotations.at("nails"), "-20,-20;20,-20");
  EXPECT_EQ(t.transitions[0].annotations.at("id"), "t7");
  NtaModel back = parse_model(serialize_model(m));
  EXPECT_EQ(back, m);
  EXPECT_EQ(serialize_model(back), serialize_model(m));
}

TEST(ResolveLocation, FoundMissingAmbiguous) {
  NtaModel m = parse_model(fixture("annotated.xml"));
  auto h = resolve_location(m, "Scheduler.Done");
  EXPECT_EQ(h.template_index, 0u);
  EXPECT_EQ(h.location_id, "id1");
  EXPECT_THROW(resolve_location(m, "Scheduler.Missing"), NotFound);
  EXPECT_THROW(resolve_location(m, "Nobody.Done"), NotFound);
  EXPECT_THROW(resolve_location(m, "SchedulerDone"), NotFound);
  NtaModel dup = parse_model(fixture("duplicate_names.xml"));
  EXPECT_THROW(resolve_location(dup, "Scheduler.Done"), Ambiguous);
  EXPECT_EQ(resolve_location(dup, "Scheduler.Idle").location_id, "id2");
}
