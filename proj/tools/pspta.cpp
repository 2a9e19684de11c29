// pspta: pattern-based properties for UPPAAL timed automata.
//
//   pspta compile --model M.xml --property "..." | --property-file F --out DIR [--verify MODE]
//   pspta verify --mode oracle|external [--verifier PATH] [--ceiling N] [--state-limit N] DIR
//   pspta catalog list|lint [--catalog DIR]
//   pspta catalog export DIR
//   pspta route --pattern P --scope S [--timed]
//
// Every option can also be given through a PSPTA_* environment variable (see --help).

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "pspta/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pspta;

namespace {

constexpr int kExitError = 2;

struct VerifyOptions {
  std::string mode = "oracle";
  std::string verifier;
  int ceiling = oracle::Options{}.ceiling;
  std::size_t state_limit = oracle::Options{}.state_limit;
  bool json = false;
};

void add_verify_options(CLI::App* cmd, VerifyOptions& v, bool with_mode_default_none) {
  auto* mode = cmd->add_option(with_mode_default_none ? "--verify" : "--mode", v.mode,
                               with_mode_default_none ? "Verify after compiling: none, oracle or external"
                                                      : "oracle (built-in checker) or external (UPPAAL verifyta)");
  mode->check(CLI::IsMember({"none", "oracle", "external"}))->envname("PSPTA_VERIFY_MODE");
  cmd->add_option("--verifier", v.verifier, "Path of the external verifier binary")->envname("PSPTA_VERIFIER");
  cmd->add_option("--ceiling", v.ceiling, "Clock ceiling for the built-in checker")
      ->check(CLI::NonNegativeNumber)
      ->envname("PSPTA_CEILING");
  cmd->add_option("--state-limit", v.state_limit, "State limit for the built-in checker")->envname("PSPTA_STATE_LIMIT");
  cmd->add_flag("--json", v.json, "Print verdicts as JSON lines");
}

observe::Catalog load_catalog(const std::string& dir) {
  return dir.empty() ? observe::Catalog::builtin() : observe::Catalog::with_directory(dir);
}

void print_result(const pipeline::VerifyResult& r, bool json) {
  if (json) {
    std::cout << pipeline::to_json(r).dump() << "\n";
    return;
  }
  for (const auto& q : r.queries) {
    std::cout << r.id << ": " << pipeline::to_string(q.outcome) << "  " << q.query << "  (" << q.states_explored
              << " states, " << q.seconds << " s)";
    if (!q.note.empty()) std::cout << "  " << q.note;
    std::cout << "\n";
    if (q.trace_text) std::cout << *q.trace_text;
  }
}

int run_verify(const std::vector<fs::path>& dirs, const VerifyOptions& v) {
  oracle::Options opts;
  opts.ceiling = v.ceiling;
  opts.state_limit = v.state_limit;
  std::vector<pipeline::VerifyResult> results;
  for (const auto& dir : dirs) {
    auto r = v.mode == "external" ? pipeline::verify_with_external(dir, v.verifier) : pipeline::verify_with_oracle(dir, opts);
    pipeline::write_file(dir / "verdict.json", pipeline::to_json(r).dump(2) + "\n");
    print_result(r, v.json);
    results.push_back(std::move(r));
  }
  return pipeline::exit_code(results);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pattern-based property specification for UPPAAL timed automata"};
  app.require_subcommand(1);

  // compile
  auto* compile = app.add_subcommand("compile", "Turn a property and a model into adjusted_model.xml, queries.q, report.json");
  std::string model_path, property, property_file, out_dir, catalog_dir;
  VerifyOptions compile_verify;
  compile_verify.mode = "none";
  compile->add_option("--model", model_path, "UPPAAL XML model")->required()->envname("PSPTA_MODEL");
  auto* prop_opt = compile->add_option("--property", property, "Structured English property");
  auto* file_opt = compile->add_option("--property-file", property_file, "File with one property per line")
                       ->envname("PSPTA_PROPERTY_FILE");
  prop_opt->excludes(file_opt);
  compile->add_option("--out", out_dir, "Output directory")->required()->envname("PSPTA_OUT");
  compile->add_option("--catalog", catalog_dir, "Observer catalog directory overriding the built-ins")
      ->envname("PSPTA_CATALOG");
  add_verify_options(compile, compile_verify, true);

  // verify
  auto* verify = app.add_subcommand("verify", "Check the queries of compiled artifact sets");
  VerifyOptions verify_opts;
  std::string verify_dir;
  add_verify_options(verify, verify_opts, false);
  verify->add_option("dir", verify_dir, "Artifact directory (or a directory of them)")->required();

  // catalog
  auto* catalog = app.add_subcommand("catalog", "Inspect the observer template catalog");
  catalog->require_subcommand(1);
  std::string cat_dir;
  catalog->add_option("--catalog", cat_dir, "Catalog directory overriding the built-ins")->envname("PSPTA_CATALOG");
  auto* cat_list = catalog->add_subcommand("list", "List template keys");
  auto* cat_lint = catalog->add_subcommand("lint", "Report template findings");
  auto* cat_export = catalog->add_subcommand("export", "Write the catalog in directory layout");
  std::string export_dir;
  cat_export->add_option("dir", export_dir)->required();

  // route
  auto* route_cmd = app.add_subcommand("route", "Print the process used for a pattern, scope and variant");
  std::string pattern_name, scope_name;
  bool timed = false;
  route_cmd->add_option("--pattern", pattern_name)->required();
  route_cmd->add_option("--scope", scope_name)->required();
  route_cmd->add_flag("--timed", timed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compile) {
      std::vector<pipeline::PropertyInput> props;
      if (!property.empty()) {
        props.push_back({"P1", property});
      } else if (!property_file.empty()) {
        props = pipeline::parse_property_file(pipeline::read_file(property_file));
      } else if (const char* env = std::getenv("PSPTA_PROPERTY")) {
        props.push_back({"P1", env});
      } else {
        std::cerr << "compile: give --property or --property-file\n";
        return kExitError;
      }
      if (props.empty()) {
        std::cerr << "compile: no properties in " << property_file << "\n";
        return kExitError;
      }
      auto model = ta::parse_model(pipeline::read_file(model_path));
      auto cat = load_catalog(catalog_dir);
      std::vector<fs::path> dirs;
      int status = 0;
      for (const auto& p : props) {
        fs::path dir = props.size() == 1 ? fs::path(out_dir) : fs::path(out_dir) / p.id;
        try {
          auto a = pipeline::compile(model, p, cat);
          pipeline::write_artifacts(a, dir);
          dirs.push_back(dir);
          std::cout << p.id << ": " << route::to_string(a.process) << ", S+ " << a.adjustment.states_added << ", T+ "
                    << a.adjustment.transitions_added << " -> " << dir.string() << "\n";
        } catch (const pipeline::CompileError& e) {
          std::cerr << "error: " << e.what() << "\n";
          status = kExitError;
        }
      }
      if (status != 0) return status;
      if (compile_verify.mode == "none") return 0;
      return run_verify(dirs, compile_verify);
    }

    if (*verify) {
      if (verify_opts.mode == "none") return 0;
      return run_verify(pipeline::artifact_dirs(verify_dir), verify_opts);
    }

    if (*catalog) {
      auto cat = load_catalog(cat_dir);
      if (*cat_list) {
        for (const auto& k : cat.keys()) {
          const auto& t = cat.lookup(k);
          std::cout << observe::to_string(k) << "  "
                    << (t.verdict.kind == observe::VerdictKind::Safety ? "safety" : "liveness") << "  " << t.source
                    << "\n";
        }
        return 0;
      }
      if (*cat_lint) {
        int status = 0;
        for (const auto& k : cat.keys())
          for (const auto& f : observe::lint_template(cat.lookup(k))) {
            std::cout << observe::to_string(k) << ": " << f.code << ": " << f.message << "\n";
            status = 1;
          }
        if (status == 0) std::cout << cat.keys().size() << " templates, no findings\n";
        return status;
      }
      cat.export_to(export_dir);
      return 0;
    }

    if (*route_cmd) {
      auto p = psp::pattern_from_string(pattern_name);
      auto s = psp::scope_from_string(scope_name);
      if (!p || !s) {
        std::cerr << "route: unknown pattern or scope\n";
        return kExitError;
      }
      auto d = route::decide(*p, *s, timed);
      std::cout << pattern_name << " " << scope_name << " " << (timed ? "timed" : "qualitative") << ": "
                << (d.process ? std::string(route::to_string(*d.process)) : "N/A (" + d.reason + ")") << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
