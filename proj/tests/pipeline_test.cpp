#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pspta/pipeline.hpp"

using namespace pspta;
namespace fs = std::filesystem;

namespace {

const observe::Catalog& catalog() {
  static const observe::Catalog c = observe::Catalog::builtin();
  return c;
}

std::string sample(const std::string& name) { return pipeline::read_file(fs::path(PSPTA_SAMPLES) / name); }

ta::NtaModel bsn(int detect_delay = 3) {
  auto xml = sample("bsn/model.xml");
  auto at = xml.find("DETECT_DELAY = 3;");
  xml.replace(at, 17, "DETECT_DELAY = " + std::to_string(detect_delay) + ";");
  return ta::parse_model(xml);
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("pspta_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

std::size_t count_locations(const ta::NtaModel& m, const std::string& except = "") {
  std::size_t n = 0;
  for (const auto& t : m.templates)
    if (t.name != except) n += t.locations.size();
  return n;
}

std::size_t count_transitions(const ta::NtaModel& m, const std::string& except = "") {
  std::size_t n = 0;
  for (const auto& t : m.templates)
    if (t.name != except) n += t.transitions.size();
  return n;
}

const char* kP04 = "Between Sensornode.HIGH and Bodyhub.DETECTED, Scheduler.DONE holds at most one time.";
const char* kP05 = "Globally, if Sensornode.HIGH has occurred, then in response Bodyhub.DETECTED holds within 250 ms.";
const char* kP09 = "Globally, if Sensornode.COLLECTED has occurred, then in response Bodyhub.PROCESSED eventually holds.";

} // namespace

TEST(Pipeline, PropertyFile) {
  auto props = pipeline::parse_property_file("# comment\n\nBSN-P04: Between A.b and C.d, E.f holds at most 1 times.\n"
                                             "Globally, {A.b} eventually holds.\n  AV-P01(a):  Globally, {A.b} eventually holds.  \n");
  ASSERT_EQ(props.size(), 3u);
  EXPECT_EQ(props[0].id, "BSN-P04");
  EXPECT_EQ(props[1].id, "P2");
  EXPECT_EQ(props[1].text, "Globally, {A.b} eventually holds.");
  EXPECT_EQ(props[2].id, "AV-P01(a)");
  EXPECT_EQ(props[2].text, "Globally, {A.b} eventually holds.");
}

TEST(Pipeline, ObserverProcessOnBsn) {
  auto m = bsn();
  auto a = pipeline::compile(m, {"BSN-P05", kP05}, catalog());
  EXPECT_EQ(a.process, route::ProcessKind::Observer);
  ASSERT_TRUE(a.observer);
  EXPECT_EQ(a.model.system.back(), "Obs");
  EXPECT_EQ(a.query.text, "Obs.PENDING --> Obs.IDLE");
  EXPECT_NE(a.queries_q.find("// BSN-P05 Globally"), std::string::npos);
  EXPECT_NE(a.queries_q.find("Obs.PENDING --> Obs.IDLE\n"), std::string::npos);
  auto r = a.report();
  EXPECT_EQ(r["schema_version"], 1);
  EXPECT_EQ(r["process"], "Observer");
  EXPECT_EQ(r["property"]["id"], "BSN-P05");
  EXPECT_TRUE(r.contains("ptime_seconds"));
}

TEST(Pipeline, FormulaOnlyLeavesModelAlone) {
  auto m = bsn();
  auto a = pipeline::compile(m, {"BSN-P09", kP09}, catalog());
  EXPECT_EQ(a.process, route::ProcessKind::FormulaOnly);
  EXPECT_EQ(a.adjustment.states_added, 0u);
  EXPECT_EQ(a.adjustment.transitions_added, 0u);
  EXPECT_EQ(a.model_xml, ta::serialize_model(m));
  EXPECT_EQ(a.query.text, "Sensornode.COLLECTED --> Bodyhub.PROCESSED");

  // timed: only the clock is new
  auto t = pipeline::compile(m, {"T", "Globally, it is never the case that {Bodyhub.DETECTED} holds within 2 ms."}, catalog());
  auto expected = m;
  expected.global_decls.clocks.insert("gc");
  EXPECT_EQ(t.model, expected);
}

TEST(Pipeline, ReportCountsMatchStructuralDiff) {
  auto m = bsn();
  for (const char* text : {kP04, kP05, kP09, "After Sensornode.HIGH, it is never the case that Bodyhub.WAIT holds."}) {
    auto a = pipeline::compile(m, {"X", text}, catalog());
    std::string obs = a.observer ? a.observer->name : "";
    auto r = a.report();
    EXPECT_EQ(r["states_added"].get<std::size_t>(), count_locations(a.model, obs) - count_locations(m)) << text;
    EXPECT_EQ(r["transitions_added"].get<std::size_t>(), count_transitions(a.model, obs) - count_transitions(m)) << text;
  }
}

TEST(Pipeline, CompileIsDeterministic) {
  auto m = bsn();
  auto d1 = scratch("det1"), d2 = scratch("det2");
  pipeline::write_artifacts(pipeline::compile(m, {"BSN-P04", kP04}, catalog()), d1);
  pipeline::write_artifacts(pipeline::compile(m, {"BSN-P04", kP04}, catalog()), d2);
  for (const char* f : {"adjusted_model.xml", "queries.q"})
    EXPECT_EQ(pipeline::read_file(d1 / f), pipeline::read_file(d2 / f)) << f;
  auto r1 = nlohmann::json::parse(pipeline::read_file(d1 / "report.json"));
  auto r2 = nlohmann::json::parse(pipeline::read_file(d2 / "report.json"));
  r1.erase("ptime_seconds");
  r2.erase("ptime_seconds");
  r1["adjustment"].erase("seconds_elapsed");
  r2["adjustment"].erase("seconds_elapsed");
  EXPECT_EQ(r1, r2);
}

TEST(Pipeline, ErrorsNameTheProperty) {
  auto m = bsn();
  try {
    pipeline::compile(m, {"BAD-1", "Globally, {Bodyhub.WAIT holds."}, catalog());
    FAIL();
  } catch (const pipeline::CompileError& e) {
    EXPECT_EQ(e.id(), "BAD-1");
    EXPECT_NE(std::string(e.what()).find("BAD-1: syntax error"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
  }
  EXPECT_THROW(pipeline::compile(m, {"BAD-2", "Globally, {Bodyhub.NOPE} eventually holds."}, catalog()),
               pipeline::CompileError);
  // routed to an observer the catalog does not have
  EXPECT_THROW(pipeline::compile(m, {"BAD-4", "Globally, if {Bodyhub.DETECTED} holds, then it must have been the case "
                                              "that {Sensornode.HIGH} has occurred before {Bodyhub.DETECTED} holds within 5 ms."},
                                 catalog()),
               pipeline::CompileError);
}

TEST(Pipeline, VerifyWithOracle) {
  auto good = scratch("good"), bad = scratch("bad");
  pipeline::write_artifacts(pipeline::compile(bsn(3), {"BSN-P04", kP04}, catalog()), good);
  pipeline::write_artifacts(pipeline::compile(bsn(8), {"BSN-P04", kP04}, catalog()), bad);
  auto g = pipeline::verify_with_oracle(good);
  auto b = pipeline::verify_with_oracle(bad);
  EXPECT_EQ(g.id, "BSN-P04");
  EXPECT_EQ(g.outcome(), pipeline::Outcome::Satisfied);
  EXPECT_EQ(b.outcome(), pipeline::Outcome::Violated);
  ASSERT_TRUE(b.queries[0].trace_text);
  EXPECT_NE(b.queries[0].trace_text->find("Obs.ERROR"), std::string::npos);
  EXPECT_TRUE(b.queries[0].trace_json->contains("steps"));
  EXPECT_EQ(pipeline::exit_code({g}), 0);
  EXPECT_EQ(pipeline::exit_code({g, b}), 1);
  EXPECT_EQ(pipeline::to_json(b)["verdict"], "violated");
}

TEST(Pipeline, StateLimitIsInconclusive) {
  auto dir = scratch("limit");
  pipeline::write_artifacts(pipeline::compile(bsn(), {"BSN-P05", kP05}, catalog()), dir);
  oracle::Options o;
  o.state_limit = 50;
  auto r = pipeline::verify_with_oracle(dir, o);
  EXPECT_EQ(r.outcome(), pipeline::Outcome::Inconclusive);
  EXPECT_EQ(pipeline::exit_code({r}), 3);
}

TEST(Pipeline, BatchDirectories) {
  auto root = scratch("batch");
  auto m = bsn();
  pipeline::write_artifacts(pipeline::compile(m, {"B", kP09}, catalog()), root / "B");
  pipeline::write_artifacts(pipeline::compile(m, {"A", kP04}, catalog()), root / "A");
  auto dirs = pipeline::artifact_dirs(root);
  ASSERT_EQ(dirs.size(), 2u);
  EXPECT_EQ(dirs[0].filename(), "A");
  EXPECT_THROW(pipeline::artifact_dirs(scratch("empty")), NotFound);
}

TEST(Pipeline, ExternalVerifier) {
  auto dir = scratch("external");
  pipeline::write_artifacts(pipeline::compile(bsn(), {"BSN-P04", kP04}, catalog()), dir);
  auto script = dir / "fake-verifyta.sh";
  auto write_script = [&](const std::string& body) {
    std::ofstream(script) << "#!/bin/sh\n" << body;
    fs::permissions(script, fs::perms::owner_all);
  };
  write_script("echo 'Verifying formula 1 at line 2'\necho ' -- Formula is NOT satisfied.'\n");
  EXPECT_EQ(pipeline::verify_with_external(dir, script).outcome(), pipeline::Outcome::Violated);
  write_script("echo ' -- Formula is satisfied.'\n");
  EXPECT_EQ(pipeline::verify_with_external(dir, script).outcome(), pipeline::Outcome::Satisfied);
  write_script("echo 'license expired'\n");
  auto r = pipeline::verify_with_external(dir, script);
  EXPECT_EQ(r.queries[0].outcome, pipeline::Outcome::Unknown);
  EXPECT_EQ(pipeline::exit_code({r}), 3);
  EXPECT_THROW(pipeline::verify_with_external(dir, dir / "missing"), NotFound);
}
