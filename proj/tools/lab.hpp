#pragma once

#include "json.hpp"
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edunkl/monodromy.hpp"

namespace edunkl::lab {

using nlohmann::json;

struct LabConfig {
  std::string family_name;  // "cyclic(2)", "symmetric(3)", "wreath(2,4)", "custom"
  Family family;
  std::optional<RVec> multipliers;  // seeded generic bundle when absent
  CVec connection;
  std::optional<cplx> constant_C;
  std::map<std::pair<std::size_t, int>, cplx> explicit_C;
  std::optional<double> random_C_scale;
  std::uint64_t seed = 1;
  double tolerance_scale = 1.0;
  int sample_points = 20;
  int duality_words = 10;
  bool parameter_probe = true;
  json source;  // flat key/value object as read
};

/// Parses a flat-key JSON object. Throws LabError(ConfigError).
LabConfig parse_config(const json& flat);
LabConfig load_config(const std::string& path);

struct Instance {
  Arrangement arr;
  FlatLineBundle L;
  ParameterSet P;
};

Instance instantiate(const LabConfig& cfg);

struct Residual {
  std::string suite;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool lower_bound = false;  // negative controls must exceed the tolerance
  bool pass() const { return lower_bound ? value > tolerance : value <= tolerance; }
};

struct SuiteFailure {
  std::string suite;
  std::string code;
  std::string message;
  bool numeric = false;
};

struct RunResult {
  json body;  // deterministic part of the report
  std::vector<Residual> residuals;
  std::vector<SuiteFailure> failures;
  double runtime_ms = 0.0;
  int exit_code() const;
};

const std::vector<std::string>& all_suites();
std::set<std::string> parse_suite_list(const std::string& list);

RunResult run_verify(const LabConfig& cfg, const std::set<std::string>& suites);
RunResult run_monodromy(const LabConfig& cfg);

/// {"header": {runtime_ms, content_sha256}, ...body}; the hash covers the body only.
json finalize_report(const RunResult& r);
std::string content_hash(const json& body);

json families_listing();
json complex_json(cplx z);
json matrix_json(const CMat& M);

}  // namespace edunkl::lab
