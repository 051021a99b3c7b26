// bvq: runs the identity suites on a lattice model and writes a JSON report.
//
//   bvq run [--config file] [--model kg|maxwell2d] [--seed n] [--suite s]...
//           [--extended] [--report-out file]
//   bvq explain <id>
//   bvq list-suites
//
// Exit codes: 0 all identities hold, 1 an identity failed, 2 usage or config error.
// BVQ_WORKERS overrides the worker count.

#include "bvq/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bvq::ConfigError("cannot read config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw bvq::ConfigError("config file '" + path + "': " + e.what());
  }
}

std::string model_of(const nlohmann::json& j) {
  if (!j.contains("model")) return "kg";
  const auto& m = j["model"];
  if (m.is_string()) return m.get<std::string>();
  if (m.is_object() && m.contains("name") && m["name"].is_string()) return m["name"].get<std::string>();
  return "kg";
}

int run(const std::string& config_path, const std::string& model_flag, std::optional<std::uint64_t> seed,
        const std::vector<std::string>& suites, bool extended, const std::string& report_out) {
  nlohmann::json j = nlohmann::json::object();
  if (!config_path.empty()) j = read_json(config_path);
  const std::string model = model_flag.empty() ? model_of(j) : model_flag;
  bvq::RunConfig c = bvq::parse_config(j, bvq::default_config(model));
  c.model = model;
  if (seed) c.seed = *seed;
  if (!suites.empty()) c.suites = {suites.begin(), suites.end()};
  if (extended || c.extended) c = bvq::extend(c);
  bvq::validate(c);

  const bvq::Report rep = bvq::run_suites(c, bvq::default_workers());
  const std::string text = rep.to_json().dump(2) + "\n";
  if (report_out == "-") {
    std::cout << text;
  } else {
    for (const auto& r : rep.records) {
      std::cout << (r.pass ? "PASS " : "FAIL ") << r.suite << "/" << r.id << "  [" << r.anchor << "]  checked "
                << r.checked << "\n";
      if (!r.pass) std::cout << "     counterexample: " << r.counterexample.dump() << "\n";
    }
    if (!report_out.empty()) {
      std::ofstream out(report_out);
      if (!out) throw bvq::ConfigError("cannot write report to '" + report_out + "'");
      out << text;
    }
  }
  return rep.pass() ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact verification of BV and Moyal-Weyl quantization identities on lattice spacetimes"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run identity suites and report");
  std::string config_path, model, report_out;
  std::uint64_t seed_value = 0;
  std::vector<std::string> suites;
  bool extended = false;
  run_cmd->add_option("--config", config_path, "JSON config file");
  run_cmd->add_option("--model", model, "Built-in model")->check(CLI::IsMember({"kg", "maxwell2d"}));
  auto* seed_opt = run_cmd->add_option("--seed", seed_value, "RNG seed");
  run_cmd->add_option("--suite", suites, "Suite to run (repeatable; 'all' for every suite)");
  run_cmd->add_flag("--extended", extended, "Scale windows and sample counts up");
  run_cmd->add_option("--report-out", report_out, "Write the JSON report here ('-' for stdout)");

  auto* explain_cmd = app.add_subcommand("explain", "Describe one identity");
  std::string explain_id;
  explain_cmd->add_option("id", explain_id, "Identity id")->required();

  auto* list_cmd = app.add_subcommand("list-suites", "List suites and their identities");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run_cmd) {
      std::optional<std::uint64_t> seed;
      if (*seed_opt) seed = seed_value;
      return run(config_path, model, seed, suites, extended, report_out);
    }
    if (*explain_cmd) {
      const bvq::Identity* id = bvq::find_identity(explain_id);
      if (!id) {
        std::cerr << "unknown identity '" << explain_id << "'; valid ids: " << bvq::valid_ids() << "\n";
        return kExitUsage;
      }
      std::cout << id->id << " (" << id->suite << ")\n"
                << "anchor:    " << id->anchor << "\n"
                << "statement: " << id->statement << "\n"
                << "strategy:  " << id->strategy << "\n";
      return 0;
    }
    if (*list_cmd) {
      for (const auto& s : bvq::suite_names()) {
        std::cout << s << "\n";
        for (const auto& id : bvq::catalog())
          if (id.suite == s) std::cout << "  " << id.id << "  " << id.anchor << "\n";
      }
      return 0;
    }
  } catch (const bvq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
