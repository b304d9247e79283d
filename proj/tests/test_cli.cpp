#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "doctest.h"
#include "lab.hpp"

using namespace edunkl;
using namespace edunkl::lab;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EDUNKL_LAB_EXE) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string write_temp(const std::string& name, const json& j) {
  const std::string path = std::string(EDUNKL_TEST_TMP) + "/" + name;
  std::ofstream(path) << j.dump();
  return path;
}

}  // namespace

TEST_CASE("config parsing") {
  const LabConfig cfg = parse_config(json{{"family", "wreath(2,4)"},
                                          {"parameters.C.0.1", {0.1, 0.2}},
                                          {"bundle.connection", {{0.0, 1.0}, 0.5}},
                                          {"seed", 9}});
  CHECK(cfg.family.name == "wreath(2,4)");
  CHECK(cfg.seed == 9);
  CHECK(cfg.connection(0) == cplx{0.0, 1.0});
  CHECK(cfg.connection(1) == cplx{0.5, 0.0});
  CHECK(cfg.explicit_C.at({0, 1}) == cplx{0.1, 0.2});

  CHECK_THROWS_AS(parse_config(json{{"family", "cyclic(5)"}}), LabError);
  try {
    parse_config(json{{"family", "cyclic(5)"}});
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("{2, 3, 4, 6}") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(json{{"family", "cyclic(2)"}, {"typo", 1}}), LabError);
  CHECK_THROWS_AS(parse_config(json{{"family", "cyclic(2)"}, {"bundle.multipliers", {0.1}}}), LabError);
  CHECK_THROWS_AS(instantiate(parse_config(json{{"family", "cyclic(2)"}, {"parameters.C.0.2", 0.1}})), LabError);
  CHECK_THROWS_AS(instantiate(parse_config(json{{"family", "cyclic(2)"}, {"bundle.multipliers", {0.0, 0.0}}})),
                  LabError);
  CHECK_THROWS_AS(parse_suite_list("sections,nonsense"), LabError);
  CHECK(parse_suite_list("all").size() == 6);
}

TEST_CASE("verify at C = 0 passes every suite") {
  const LabConfig cfg = parse_config(json{{"family", "cyclic(2)"}, {"seed", 4}});
  const RunResult r = run_verify(cfg, parse_suite_list("all"));
  CHECK(r.failures.empty());
  CHECK(r.exit_code() == 0);
  for (const auto& x : r.residuals) {
    CAPTURE(x.name);
    CHECK(x.pass());
  }
}

TEST_CASE("verify on symmetric(3) with seeded random parameters") {
  const LabConfig cfg =
      parse_config(json{{"family", "symmetric(3)"}, {"parameters.random_scale", 0.4}, {"seed", 12}, {"verify.points", 8}});
  const RunResult r = run_verify(cfg, parse_suite_list("sections,commutativity,equivariance,lemma-inv"));
  CHECK(r.exit_code() == 0);
  CHECK(r.residuals.size() >= 12);
  const json& rep = r.body;
  CHECK(rep["basis_ordering"].size() == 6);
  CHECK(rep["hypertori"].size() > 0);
}

TEST_CASE("monodromy report contents") {
  const LabConfig cfg = parse_config(json{{"family", "cyclic(2)"}, {"parameters.C", {0.3, 0.0}}, {"seed", 2}});
  const RunResult r = run_monodromy(cfg);
  CHECK(r.exit_code() == 0);
  const json& m = r.body["monodromy"];
  CHECK(m["generators"].size() == 6);
  CHECK(m["matrices"].size() == 6);
  CHECK(r.body["orientation"].get<std::string>().find("as stated") != std::string::npos);
  const cplx a = -std::exp(kPi * kI * 0.3), b = std::exp(-kPi * kI * 0.3);
  for (const auto& orbit : m["eigenvalues"]) {
    for (const auto& ev : orbit["observed"]) {
      const cplx z{ev[0].get<double>(), ev[1].get<double>()};
      CHECK(std::min(std::abs(z - a), std::abs(z - b)) < 1e-5);
    }
  }
  const RunResult zero = run_monodromy(parse_config(json{{"family", "cyclic(3)"}, {"seed", 2}}));
  CHECK(zero.body["monodromy"]["degeneration"]["status"] == "group-algebra degeneration: pass");
}

TEST_CASE("reports are deterministic") {
  const json flat{{"family", "symmetric(2)"}, {"parameters.random_scale", 0.3}, {"seed", 77}, {"monodromy.words", 3}};
  const RunResult a = run_monodromy(parse_config(flat));
  const RunResult b = run_monodromy(parse_config(flat));
  CHECK(a.body.dump() == b.body.dump());
  CHECK(finalize_report(a)["header"]["content_sha256"] == finalize_report(b)["header"]["content_sha256"]);
  const RunResult c = run_monodromy(parse_config(json{{"family", "symmetric(2)"},
                                                      {"parameters.random_scale", 0.3},
                                                      {"seed", 78},
                                                      {"monodromy.words", 3}}));
  CHECK(content_hash(a.body) != content_hash(c.body));
}

TEST_CASE("command line exit codes") {
  const std::string good = write_temp("cli_good.json", {{"family", "cyclic(2)"}, {"seed", 1}});
  const std::string bad = write_temp("cli_bad.json", {{"family", "cyclic(5)"}});
  const std::string out1 = std::string(EDUNKL_TEST_TMP) + "/cli_out1.json";
  const std::string out2 = std::string(EDUNKL_TEST_TMP) + "/cli_out2.json";
  CHECK(run_cli("families") == 0);
  CHECK(run_cli("verify --config " + good + " --suite sections,flatness --out " + out1) == 0);
  CHECK(run_cli("report " + out1) == 0);
  CHECK(run_cli("verify --config " + bad) == 2);
  CHECK(run_cli("verify --config " + good + " --suite bogus") == 2);
  CHECK(run_cli("monodromy --config " + good + " --seed 5 --out " + out1) == 0);
  CHECK(run_cli("monodromy --config " + good + " --seed 5 --out " + out2) == 0);
  json r1, r2;
  std::ifstream(out1) >> r1;
  std::ifstream(out2) >> r2;
  CHECK(r1["header"]["content_sha256"] == r2["header"]["content_sha256"]);
  r1.erase("header");
  r2.erase("header");
  CHECK(r1.dump() == r2.dump());
  CHECK(r1["seed"] == 5);
  // An impossibly tight tolerance turns residuals into failures.
  const std::string hard = write_temp("cli_hard.json", {{"family", "cyclic(2)"}, {"parameters.C", 0.2}, {"seed", 1}});
  CHECK(run_cli("verify --config " + hard + " --suite sections --tolerance-scale 1e-12") == 1);
}
