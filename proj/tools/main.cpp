#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "lab.hpp"

using namespace edunkl;
using namespace edunkl::lab;

namespace {

struct Common {
  std::string config;
  std::string suite;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance_scale;
};

void add_common(CLI::App* cmd, Common& c, bool with_suite) {
  cmd->add_option("--config", c.config, "Flat-key JSON config file")->required()->check(CLI::ExistingFile);
  if (with_suite) cmd->add_option("--suite", c.suite, "Comma-separated suites, or 'all'");
  cmd->add_option("--seed", c.seed, "Override the config seed");
  cmd->add_option("--out", c.out, "Write the JSON report here (stdout otherwise)");
  cmd->add_option("--tolerance-scale", c.tolerance_scale, "Multiply every residual tolerance");
}

LabConfig resolve(const Common& c) {
  LabConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.tolerance_scale) {
    if (*c.tolerance_scale <= 0.0) throw LabError(ErrorCode::ConfigError, "--tolerance-scale must be positive");
    cfg.tolerance_scale = *c.tolerance_scale;
  }
  return cfg;
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw LabError(ErrorCode::ConfigError, "cannot write '" + out + "'");
  f << j.dump(2) << "\n";
}

int summarize(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LabError(ErrorCode::ConfigError, "cannot open report '" + path + "'");
  json rep;
  try {
    in >> rep;
  } catch (const json::parse_error& e) {
    throw LabError(ErrorCode::ConfigError, std::string("report is not valid JSON: ") + e.what());
  }
  json body = rep;
  body.erase("header");
  const bool hash_ok = rep.contains("header") && rep["header"].value("content_sha256", "") == content_hash(body);
  std::cout << body.value("command", "?") << " report for " << body["config"].value("family", "?") << ", seed "
            << body.value("seed", 0ULL) << "\n";
  std::cout << "content hash " << (hash_ok ? "verified" : "MISMATCH") << "\n";
  bool all = true;
  for (const auto& r : body["residuals"]) {
    const bool pass = r.value("pass", false);
    all = all && pass;
    std::cout << (pass ? "  PASS " : "  FAIL ") << r.value("suite", "") << "." << r.value("name", "") << " = "
              << r.value("value", 0.0) << (r.value("kind", "max") == "min" ? " (min " : " (max ")
              << r.value("tolerance", 0.0) << ")\n";
  }
  bool numeric = false;
  for (const auto& e : body["errors"]) {
    all = false;
    numeric = numeric || e.value("numeric", false);
    std::cout << "  ERROR " << e.value("suite", "") << ": " << e.value("message", "") << "\n";
  }
  if (body.contains("orientation")) std::cout << "orientation: " << body["orientation"].get<std::string>() << "\n";
  if (body.contains("monodromy") && body["monodromy"].contains("degeneration"))
    std::cout << body["monodromy"]["degeneration"]["status"].get<std::string>() << "\n";
  if (!hash_ok) return 1;
  return numeric ? 3 : (all ? 0 : 1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification lab for elliptic Dunkl operators"};
  app.require_subcommand(1);

  std::string families_out;
  auto* families = app.add_subcommand("families", "List the built-in families");
  families->add_option("--out", families_out, "Write the listing here");

  Common verify_opts, mono_opts;
  auto* verify = app.add_subcommand("verify", "Run operator and connection checks");
  add_common(verify, verify_opts, true);
  auto* monodromy = app.add_subcommand("monodromy", "Transport, Hecke relations and duality");
  add_common(monodromy, mono_opts, false);

  std::string report_path;
  auto* report = app.add_subcommand("report", "Summarize a saved report and check its hash");
  report->add_option("path", report_path, "Report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*families) {
      emit(families_listing(), families_out);
      return 0;
    }
    if (*report) return summarize(report_path);
    if (*verify) {
      const LabConfig cfg = resolve(verify_opts);
      const RunResult r = run_verify(cfg, parse_suite_list(verify_opts.suite));
      emit(finalize_report(r), verify_opts.out);
      return r.exit_code();
    }
    if (*monodromy) {
      const RunResult r = run_monodromy(resolve(mono_opts));
      emit(finalize_report(r), mono_opts.out);
      return r.exit_code();
    }
  } catch (const LabError& e) {
    std::cerr << e.what() << "\n";
    if (e.code() == ErrorCode::StepUnderflow || e.code() == ErrorCode::ToleranceNotMet) return 3;
    if (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::StabilizedBundle ||
        e.code() == ErrorCode::NotLatticePreserving || e.code() == ErrorCode::NotFinite)
      return 2;
    return 1;
  }
  return 0;
}
