#include "lab.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <regex>
#include <sstream>

namespace edunkl::lab {

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw LabError(ErrorCode::ConfigError, msg); }

cplx read_complex(const json& j, const std::string& key) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  config_error("key '" + key + "' must be a number or an [re, im] pair");
}

CVec read_complex_vector(const json& j, const std::string& key) {
  if (!j.is_array()) config_error("key '" + key + "' must be a list of [re, im] pairs");
  CVec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = read_complex(j[i], key);
  return v;
}

CMat read_complex_matrix(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) config_error("key '" + key + "' must be a list of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  CMat M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (j[r].size() != static_cast<std::size_t>(cols)) config_error("ragged matrix in '" + key + "'");
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = read_complex(j[r][c], key);
  }
  return M;
}

Family family_from(const std::string& name, const json& flat) {
  std::optional<cplx> modulus;
  if (flat.contains("family.modulus")) modulus = read_complex(flat["family.modulus"], "family.modulus");
  std::smatch m;
  const std::regex one(R"(\s*(cyclic|symmetric)\s*\(\s*(-?\d+)\s*\)\s*)");
  const std::regex two(R"(\s*wreath\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)\s*)");
  if (std::regex_match(name, m, one)) {
    const int k = std::stoi(m[2]);
    if (m[1] == "cyclic") return cyclic_family(k, modulus);
    return symmetric_family(k, modulus.value_or(cplx{0.0, 1.0}));
  }
  if (std::regex_match(name, m, two)) return wreath_family(std::stoi(m[1]), std::stoi(m[2]), modulus);
  if (name == "custom") {
    if (!flat.contains("custom.generators") || !flat.contains("custom.lattice"))
      config_error("custom family needs 'custom.generators' and 'custom.lattice'");
    std::vector<CMat> gens;
    for (const auto& g : flat["custom.generators"]) gens.push_back(read_complex_matrix(g, "custom.generators"));
    std::vector<CVec> basis;
    for (const auto& b : flat["custom.lattice"]) basis.push_back(read_complex_vector(b, "custom.lattice"));
    Family f = custom_family(gens, basis);
    for (const CMat& g : f.generators) (void)lattice_action(g, f.torus);
    return f;
  }
  config_error("unknown family '" + name + "' (expected cyclic(l), symmetric(n), wreath(n,l) or custom)");
}

const std::set<std::string> kKnownKeys{"family",
                                       "family.modulus",
                                       "custom.generators",
                                       "custom.lattice",
                                       "bundle.multipliers",
                                       "bundle.connection",
                                       "parameters.C",
                                       "parameters.random_scale",
                                       "seed",
                                       "tolerance_scale",
                                       "verify.points",
                                       "monodromy.words",
                                       "monodromy.parameter_probe"};

bool is_zero(const ParameterSet& P) {
  for (const auto& [k, v] : P.values)
    if (v != cplx{0.0, 0.0}) return false;
  return true;
}

json rvec_json(const RVec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json ivec_json(const IVec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json cvec_json(const CVec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v(i)));
  return out;
}

json resolved_config(const LabConfig& cfg, const Instance& inst) {
  json c;
  c["family"] = inst.arr.family.name;
  json lattice = json::array();
  for (const CVec& b : inst.arr.torus().lattice_basis()) lattice.push_back(cvec_json(b));
  c["lattice_basis"] = lattice;
  json gens = json::array();
  for (const CMat& g : inst.arr.family.generators) gens.push_back(matrix_json(g));
  c["generators"] = gens;
  c["bundle"] = {{"multipliers", rvec_json(inst.L.multipliers)}, {"connection", cvec_json(inst.L.connection)}};
  json params = json::array();
  for (const auto& [key, value] : inst.P.values)
    params.push_back({{"orbit", key.first}, {"j", key.second}, {"C", complex_json(value)}});
  c["parameters"] = params;
  c["seed"] = cfg.seed;
  c["tolerance_scale"] = cfg.tolerance_scale;
  c["verify_points"] = cfg.sample_points;
  c["duality_words"] = cfg.duality_words;
  c["parameter_probe"] = cfg.parameter_probe;
  return c;
}

json hypertori_json(const Arrangement& arr) {
  json out = json::array();
  for (std::size_t h = 0; h < arr.hypertori.size(); ++h) {
    const auto& H = arr.hypertori[h];
    out.push_back({{"index", h},
                   {"orbit", H.orbit_id},
                   {"order", H.order},
                   {"generator", H.generator},
                   {"normal", cvec_json(H.normal)},
                   {"base_point", cvec_json(H.base_point)},
                   {"scale", complex_json(H.scale)},
                   {"modulus", complex_json(H.modulus)}});
  }
  return out;
}

json basis_ordering(const Arrangement& arr, const FlatLineBundle& L) {
  json out = json::array();
  const auto& G = arr.group();
  for (std::size_t w = 0; w < G.size(); ++w) {
    out.push_back({{"component", w},
                   {"element", matrix_json(G[w].matrix)},
                   {"bundle", "(L^w)*"},
                   {"multipliers", rvec_json(dual_multipliers(bundle_pullback(G, w, L).multipliers))}});
  }
  return out;
}

json versions_json() {
  return {{"edunkl", "0.1.0"},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

class Recorder {
 public:
  explicit Recorder(RunResult& r, double scale) : r_(r), scale_(scale) {}

  void add(const std::string& suite, const std::string& name, double value, double tol) {
    r_.residuals.push_back({suite, name, value, tol * scale_, false});
  }
  void add_lower(const std::string& suite, const std::string& name, double value, double bound) {
    r_.residuals.push_back({suite, name, value, bound, true});
  }

  // Runs `body`; module errors become structured failure entries.
  void guard(const std::string& suite, const std::function<void()>& body) {
    try {
      body();
    } catch (const LabError& e) {
      const bool numeric = e.code() == ErrorCode::StepUnderflow || e.code() == ErrorCode::ToleranceNotMet;
      r_.failures.push_back({suite, to_string(e.code()), e.what(), numeric});
    }
  }

 private:
  RunResult& r_;
  double scale_;
};

json residuals_json(const RunResult& r) {
  json out = json::array();
  for (const Residual& x : r.residuals)
    out.push_back({{"suite", x.suite},
                   {"name", x.name},
                   {"value", x.value},
                   {"tolerance", x.tolerance},
                   {"kind", x.lower_bound ? "min" : "max"},
                   {"pass", x.pass()}});
  return out;
}

json failures_json(const RunResult& r) {
  json out = json::array();
  for (const SuiteFailure& f : r.failures)
    out.push_back({{"suite", f.suite}, {"error", f.code}, {"message", f.message}, {"numeric", f.numeric}});
  return out;
}

VectorJetFn exp_quadratic_sections(int components, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  auto rv = [&](double s) {
    CVec v(n);
    for (int k = 0; k < n; ++k) v(k) = s * cplx{g(rng), g(rng)};
    return v;
  };
  std::vector<CVec> ls;
  std::vector<CMat> Qs;
  for (int w = 0; w < components; ++w) {
    ls.push_back(rv(0.3));
    CMat Q(n, n);
    for (int i = 0; i < n; ++i) Q.col(i) = rv(0.2);
    Qs.push_back(0.5 * (Q + Q.transpose()));
  }
  return [ls, Qs](const CVec& z) {
    std::vector<Jet> out;
    for (std::size_t w = 0; w < ls.size(); ++w) {
      const cplx e = std::exp(cplx((ls[w].transpose() * z)(0)) + 0.5 * cplx((z.transpose() * Qs[w] * z)(0)));
      const CVec gr = ls[w] + Qs[w] * z;
      out.push_back({e, e * gr, e * (Qs[w] + gr * gr.transpose()), 2});
    }
    return out;
  };
}

CVec unit(int n, int k) {
  CVec v = CVec::Zero(n);
  v(k) = 1.0;
  return v;
}

void suite_sections(const LabConfig& cfg, const Instance& inst, Recorder& rec) {
  const auto& arr = inst.arr;
  const auto pts = regular_points(arr, 5, cfg.seed + 1);
  IVec shift = IVec::Zero(arr.torus().real_rank());
  for (Eigen::Index i = 0; i < shift.size(); ++i) shift(i) = static_cast<long long>(i % 3) - 1;
  double automorphy = 0.0, residue = 0.0, uniqueness = 0.0;
  for (const auto& [h, j] : arr.strata()) {
    const SectionHandle f = section_f(arr.torus(), arr.group(), inst.L, arr.hypertori, h, j);
    automorphy = std::max(automorphy, automorphy_residual(arr.torus(), f, pts));
    residue = std::max(residue, std::abs(residue_at(f, arr.hypertori[h]) - 1.0));
    SectionOptions opt;
    opt.base_shift = shift;
    const SectionHandle g = section_f(arr.torus(), arr.group(), inst.L, arr.hypertori, h, j, opt);
    for (const CVec& z : pts) {
      const CVec a = f.value(z);
      uniqueness = std::max(uniqueness, (a - g.value(z)).norm() / std::max(1.0, a.norm()));
    }
  }
  rec.add("sections", "automorphy", automorphy, 1e-9);
  rec.add("sections", "residue", residue, 1e-8);
  rec.add("sections", "uniqueness", uniqueness, 1e-9);
}

void suite_commutativity(const LabConfig& cfg, const Instance& inst, Recorder& rec) {
  const auto& arr = inst.arr;
  const int n = arr.dim();
  const auto pts = regular_points(arr, static_cast<std::size_t>(cfg.sample_points), cfg.seed + 2);
  std::vector<std::pair<CVec, CVec>> pairs;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) pairs.emplace_back(unit(n, a), unit(n, b));
  std::mt19937_64 rng(cfg.seed + 3);
  std::normal_distribution<double> g;
  CVec u(n), v(n);
  for (int k = 0; k < n; ++k) {
    u(k) = cplx{g(rng), g(rng)};
    v(k) = cplx{g(rng), g(rng)};
  }
  pairs.emplace_back(u, v);
  double second = 0.0, first = 0.0, zeroth = 0.0, identity = 0.0;
  for (const auto& [a, b] : pairs) {
    const CommutatorReport r = commutator_coefficients(arr, inst.L, inst.P, a, b, pts);
    second = std::max(second, r.second_order);
    first = std::max(first, r.first_order);
    zeroth = std::max(zeroth, r.max_zeroth());
    if (r.zeroth_order.count(0)) identity = std::max(identity, r.zeroth_order.at(0));
  }
  rec.add("commutativity", "second_order", second, 1e-9);
  rec.add("commutativity", "first_order", first, 1e-9);
  rec.add("commutativity", "zeroth_order", zeroth, 1e-8);
  rec.add("commutativity", "zeroth_order_identity", identity, 1e-10);
}

void suite_equivariance(const LabConfig& cfg, const Instance& inst, Recorder& rec) {
  const auto& arr = inst.arr;
  const int n = arr.dim();
  const auto pts = regular_points(arr, static_cast<std::size_t>(std::min(cfg.sample_points, 10)), cfg.seed + 4);
  double worst = 0.0;
  for (std::size_t w = 0; w < arr.group().size(); ++w)
    for (int k = 0; k < n; ++k) worst = std::max(worst, check_equivariance(arr, inst.L, inst.P, w, unit(n, k), pts));
  rec.add("equivariance", "conjugation", worst, 1e-9);
}

void suite_section_identities(const LabConfig& cfg, const Instance& inst, Recorder& rec) {
  const auto pts = regular_points(inst.arr, static_cast<std::size_t>(std::min(cfg.sample_points, 10)), cfg.seed + 5);
  const SectionIdentityReport r = check_section_identities(inst.arr, inst.L, inst.P, {1, 2, 3, 4}, pts, cfg.seed + 6);
  rec.add("lemma-inv", "adjoint", r.adjoint, 1e-9);
  rec.add("lemma-inv", "symmetry", r.symmetry, 1e-8);
  rec.add("lemma-inv", "twisted_quadratic", r.twisted_quadratic, 1e-9);
  rec.add("lemma-inv", "plain_quadratic", r.plain_quadratic, 1e-9);
}

void suite_flatness(const LabConfig& cfg, const Instance& inst, Recorder& rec) {
  const auto& arr = inst.arr;
  const ConnectionMatrixForm A = build_connection(arr, inst.L, inst.P);
  const ConnectionMatrixForm B = vectorized_dunkl_system(arr, inst.L, inst.P);
  std::mt19937_64 rng(cfg.seed + 7);
  std::normal_distribution<double> g;
  const int n = arr.dim();
  const VectorJetFn Y = exp_quadratic_sections(A.size(), n, rng);
  double mixed = 0.0;
  for (const CVec& z : regular_points(arr, 5, cfg.seed + 8)) {
    CVec u(n), v(n);
    for (int k = 0; k < n; ++k) {
      u(k) = cplx{g(rng), g(rng)};
      v(k) = cplx{g(rng), g(rng)};
    }
    mixed = std::max({mixed, mixed_partial_residual(A, u, v, Y, z), mixed_partial_residual(B, u, v, Y, z)});
  }
  rec.add("flatness", "mixed_partials", mixed, 1e-7);
  double loops = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const PathSpec rect = contractible_rectangle(arr, cfg.seed + 100 + s);
    const CMat M = transport(A, arr, rect, {}).matrix;
    loops = std::max(loops, (M - CMat::Identity(M.rows(), M.cols())).cwiseAbs().maxCoeff());
  }
  rec.add("flatness", "contractible_loops", loops, 1e-7);
}

void suite_holomorphy(const LabConfig& cfg, const Instance& inst, Recorder& rec) {
  const std::vector<double> radii{1e-2, 1e-3, 1e-4};
  const std::size_t comps = inst.arr.group().size() > 8 ? 4 : 0;
  const HolomorphyReport good = holomorphy_check(inst.arr, inst.L, inst.P, 1.0, radii, 3, cfg.seed + 9, comps);
  rec.add("holomorphy", "laurent", good.max_laurent, 1e-6);
  rec.add("holomorphy", "growth", good.max_growth, 1.5);
  if (!is_zero(inst.P)) {
    const HolomorphyReport bad = holomorphy_check(inst.arr, inst.L, inst.P, 2.0, radii, 3, cfg.seed + 9, comps);
    rec.add_lower("holomorphy", "negative_control_laurent", bad.max_laurent, 1e-2);
  }
}

json path_json(const PathSpec& p) {
  return {{"label", p.label},
          {"segments", p.segments.size()},
          {"start", cvec_json(p.start())},
          {"endpoint_group_element", p.endpoint_group_element},
          {"endpoint_lattice", ivec_json(p.endpoint_lattice)},
          {"clearance", p.clearance}};
}

json cplx_list(const std::vector<cplx>& v) {
  json out = json::array();
  for (cplx z : v) out.push_back(complex_json(z));
  return out;
}

}  // namespace

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

json matrix_json(const CMat& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(complex_json(M(r, c)));
    rows.push_back(row);
  }
  return rows;
}

LabConfig parse_config(const json& flat) {
  if (!flat.is_object()) config_error("config must be a JSON object with flat dotted keys");
  for (const auto& [key, value] : flat.items()) {
    (void)value;
    if (!kKnownKeys.count(key) && key.rfind("parameters.C.", 0) != 0) config_error("unknown config key '" + key + "'");
  }
  LabConfig cfg;
  cfg.source = flat;
  if (!flat.contains("family") || !flat["family"].is_string()) config_error("missing string key 'family'");
  cfg.family_name = flat["family"].get<std::string>();
  cfg.family = family_from(cfg.family_name, flat);
  const int n = cfg.family.torus.dim();
  cfg.connection = CVec::Zero(n);
  if (flat.contains("bundle.multipliers")) {
    const auto& m = flat["bundle.multipliers"];
    if (!m.is_array() || static_cast<int>(m.size()) != 2 * n)
      config_error("'bundle.multipliers' must list " + std::to_string(2 * n) + " reals");
    RVec mv(2 * n);
    for (int i = 0; i < 2 * n; ++i) {
      if (!m[i].is_number()) config_error("'bundle.multipliers' must list reals");
      mv(i) = m[i].get<double>();
    }
    cfg.multipliers = mv;
  }
  if (flat.contains("bundle.connection")) {
    cfg.connection = read_complex_vector(flat["bundle.connection"], "bundle.connection");
    if (cfg.connection.size() != n) config_error("'bundle.connection' must have " + std::to_string(n) + " entries");
  }
  if (flat.contains("parameters.C")) cfg.constant_C = read_complex(flat["parameters.C"], "parameters.C");
  if (flat.contains("parameters.random_scale")) {
    if (!flat["parameters.random_scale"].is_number()) config_error("'parameters.random_scale' must be a number");
    cfg.random_C_scale = flat["parameters.random_scale"].get<double>();
  }
  const std::regex entry(R"(parameters\.C\.(\d+)\.(\d+))");
  for (const auto& [key, value] : flat.items()) {
    std::smatch m;
    if (key.rfind("parameters.C.", 0) != 0) continue;
    if (!std::regex_match(key, m, entry)) config_error("parameter key '" + key + "' must be parameters.C.<orbit>.<j>");
    cfg.explicit_C[{std::stoul(m[1]), std::stoi(m[2])}] = read_complex(value, key);
  }
  if (flat.contains("seed")) {
    if (!flat["seed"].is_number_integer() || flat["seed"].get<long long>() < 0)
      config_error("'seed' must be a non-negative integer");
    cfg.seed = flat["seed"].get<std::uint64_t>();
  }
  if (flat.contains("tolerance_scale")) {
    if (!flat["tolerance_scale"].is_number() || flat["tolerance_scale"].get<double>() <= 0.0)
      config_error("'tolerance_scale' must be a positive number");
    cfg.tolerance_scale = flat["tolerance_scale"].get<double>();
  }
  if (flat.contains("verify.points")) cfg.sample_points = flat["verify.points"].get<int>();
  if (flat.contains("monodromy.words")) cfg.duality_words = flat["monodromy.words"].get<int>();
  if (flat.contains("monodromy.parameter_probe")) cfg.parameter_probe = flat["monodromy.parameter_probe"].get<bool>();
  if (cfg.sample_points < 1 || cfg.duality_words < 0) config_error("sample and word counts must be positive");
  return cfg;
}

LabConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config '" + path + "'");
  json flat;
  try {
    in >> flat;
  } catch (const json::parse_error& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(flat);
}

Instance instantiate(const LabConfig& cfg) {
  Instance inst{Arrangement::build(cfg.family), {}, {}};
  const auto& G = inst.arr.group();
  std::mt19937_64 rng(cfg.seed);
  if (cfg.multipliers) {
    inst.L = make_bundle(*cfg.multipliers, cfg.connection, G);
    if (!inst.L.stabilizer_free) config_error("bundle multipliers are fixed by a nontrivial group element");
  } else {
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (;;) {
      RVec m(inst.arr.torus().real_rank());
      for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
      inst.L = make_bundle(m, cfg.connection, G);
      if (inst.L.stabilizer_free) break;
    }
  }
  if (cfg.random_C_scale) inst.P = ParameterSet::random(inst.arr, rng, *cfg.random_C_scale);
  if (cfg.constant_C) inst.P = ParameterSet::constant(inst.arr, *cfg.constant_C);
  for (const auto& [key, value] : cfg.explicit_C) {
    const auto [orbit, j] = key;
    if (orbit >= inst.arr.orbit_count()) config_error("parameter orbit " + std::to_string(orbit) + " does not exist");
    int order = 0;
    for (const auto& H : inst.arr.hypertori)
      if (H.orbit_id == orbit) order = H.order;
    if (j < 1 || j >= order) config_error("parameter index j must satisfy 1 <= j < n_H for orbit " + std::to_string(orbit));
    inst.P.values[key] = value;
  }
  return inst;
}

int RunResult::exit_code() const {
  for (const auto& f : failures)
    if (f.numeric) return 3;
  if (!failures.empty()) return 1;
  for (const auto& r : residuals)
    if (!r.pass()) return 1;
  return 0;
}

const std::vector<std::string>& all_suites() {
  static const std::vector<std::string> names{"sections",    "commutativity", "equivariance",
                                              "lemma-inv",   "flatness",      "holomorphy"};
  return names;
}

std::set<std::string> parse_suite_list(const std::string& list) {
  std::set<std::string> out;
  if (list.empty() || list == "all") return {all_suites().begin(), all_suites().end()};
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (std::find(all_suites().begin(), all_suites().end(), item) == all_suites().end())
      config_error("unknown suite '" + item + "'");
    out.insert(item);
  }
  return out;
}

RunResult run_verify(const LabConfig& cfg, const std::set<std::string>& suites) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  const Instance inst = instantiate(cfg);
  Recorder rec(r, cfg.tolerance_scale);
  const std::map<std::string, void (*)(const LabConfig&, const Instance&, Recorder&)> table{
      {"sections", suite_sections},   {"commutativity", suite_commutativity}, {"equivariance", suite_equivariance},
      {"lemma-inv", suite_section_identities}, {"flatness", suite_flatness},           {"holomorphy", suite_holomorphy}};
  for (const std::string& name : all_suites())
    if (suites.count(name)) rec.guard(name, [&] { table.at(name)(cfg, inst, rec); });

  r.body["command"] = "verify";
  r.body["suites"] = json(std::vector<std::string>(suites.begin(), suites.end()));
  r.body["config"] = resolved_config(cfg, inst);
  r.body["hypertori"] = hypertori_json(inst.arr);
  r.body["basis_ordering"] = basis_ordering(inst.arr, inst.L);
  r.body["residuals"] = residuals_json(r);
  r.body["errors"] = failures_json(r);
  r.body["versions"] = versions_json();
  r.body["seed"] = cfg.seed;
  r.body["pass"] = r.exit_code() == 0;
  r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

RunResult run_monodromy(const LabConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  const Instance inst = instantiate(cfg);
  const auto& arr = inst.arr;
  Recorder rec(r, cfg.tolerance_scale);
  json mono;
  std::string orientation = "unresolved";

  rec.guard("monodromy", [&] {
    const BraidGenerators gens = braid_generators(arr, default_basepoint(arr));
    const ConnectionMatrixForm A = build_connection(arr, inst.L, inst.P);
    mono["basepoint"] = cvec_json(gens.basepoint);

    std::vector<PathSpec> all = gens.translations;
    all.insert(all.end(), gens.hypertorus_loops.begin(), gens.hypertorus_loops.end());
    std::vector<MonodromyMatrix> mats;
    json gen_json = json::array(), mat_json = json::object();
    for (std::size_t i = 0; i < all.size(); ++i) {
      validate_path(arr, all[i]);
      mats.push_back(transport(A, arr, all[i], {}));
      json g = path_json(all[i]);
      g["kind"] = i < gens.translations.size() ? "translation" : "hypertorus";
      if (i >= gens.translations.size()) {
        const std::size_t h = gens.loop_hypertorus[i - gens.translations.size()];
        g["hypertorus"] = h;
        g["orbit"] = arr.hypertori[h].orbit_id;
      }
      g["error_estimate"] = mats.back().error_estimate;
      g["condition_number"] = mats.back().condition_number;
      gen_json.push_back(g);
      mat_json[all[i].label] = matrix_json(mats.back().matrix);
    }
    mono["generators"] = gen_json;
    mono["matrices"] = mat_json;

    const std::vector<MonodromyMatrix> loops(mats.begin() + static_cast<long>(gens.translations.size()), mats.end());
    const HeckeReport hecke = hecke_check(inst.P, arr, gens, loops);
    json eig = json::array(), hres = json::array(), tau = json::array();
    double tau_sum = 0.0, distance = 0.0, det = 0.0;
    bool as_stated = true;
    for (const auto& o : hecke.orbits) {
      json variants = json::object();
      for (const auto& [k, v] : o.variant_residuals) variants[k] = v;
      eig.push_back({{"orbit", o.orbit},
                     {"order", o.order},
                     {"predicted", cplx_list(o.predicted)},
                     {"observed", cplx_list(o.observed)},
                     {"multiplicities", o.multiplicities},
                     {"collision", o.collision}});
      hres.push_back({{"orbit", o.orbit},
                      {"polynomial", o.residual},
                      {"variants", variants},
                      {"eigenvalue_distance", o.eigenvalue_distance},
                      {"det", o.det_residual},
                      {"orientation", o.orientation}});
      tau.push_back({{"orbit", o.orbit}, {"tau", cplx_list(o.tau)}});
      cplx s{0.0, 0.0};
      for (cplx t : o.tau) s += t;
      tau_sum = std::max(tau_sum, std::abs(s));
      if (!o.collision) distance = std::max(distance, o.eigenvalue_distance);
      det = std::max(det, o.det_residual);
      if (o.orientation != "as-stated") as_stated = false;
    }
    mono["eigenvalues"] = eig;
    mono["hecke_residuals"] = hres;
    mono["tau"] = tau;
    orientation = as_stated ? "counterclockwise in the normalized transverse coordinate; tau formula as stated"
                            : "mismatch: see hecke_residuals.orientation";
    rec.add("monodromy", "hecke_polynomial", hecke.max_residual(), 1e-5);
    rec.add("monodromy", "hecke_eigenvalues", distance, 1e-5);
    rec.add("monodromy", "hecke_det", det, 1e-5);
    rec.add("monodromy", "tau_sum", tau_sum, 1e-12);

    const int letters = static_cast<int>(all.size());
    std::mt19937_64 rng(cfg.seed + 11);
    std::uniform_int_distribution<int> pick(0, letters - 1), len(1, 4), signed_pick(-letters, letters - 1);
    double composition = 0.0;
    for (int t = 0; t < 10; ++t) {
      const int a = pick(rng), b = pick(rng);
      const CMat ab = transport(A, arr, word_path(arr, gens, {a, b}), {}).matrix;
      composition = std::max(composition, (ab - mats[a].matrix * mats[b].matrix).cwiseAbs().maxCoeff());
    }
    rec.add("monodromy", "composition", composition, 1e-6);

    if (is_zero(inst.P)) {
      double power = 0.0, diagonal = 0.0;
      json powers = json::array();
      for (std::size_t i = 0; i < loops.size(); ++i) {
        const int order = arr.hypertori[gens.loop_hypertorus[i]].order;
        CMat T = CMat::Identity(loops[i].matrix.rows(), loops[i].matrix.cols());
        for (int k = 0; k < order; ++k) T = (T * loops[i].matrix).eval();
        const double res = (T - CMat::Identity(T.rows(), T.cols())).cwiseAbs().maxCoeff();
        powers.push_back(res);
        power = std::max(power, res);
      }
      const auto& G = arr.group();
      for (std::size_t i = 0; i < gens.translations.size(); ++i) {
        const PathSpec& p = gens.translations[i];
        const CVec gamma = arr.torus().lattice_vector(p.endpoint_lattice);
        CMat expect = CMat::Zero(G.size(), G.size());
        for (std::size_t w = 0; w < G.size(); ++w) {
          const RVec mw = dual_action(G, w, inst.L.multipliers);
          const cplx bw = (inst.L.connection.transpose() * (G[G.inverse(w)].matrix * gamma))(0);
          expect(w, w) = expo(mw.dot(p.endpoint_lattice.cast<double>())) * std::exp(bw);
        }
        diagonal = std::max(diagonal, (mats[i].matrix - expect).cwiseAbs().maxCoeff());
      }
      rec.add("monodromy", "degeneration_power", power, 1e-6);
      rec.add("monodromy", "degeneration_translations", diagonal, 1e-8);
      const bool pass = power <= 1e-6 * cfg.tolerance_scale && diagonal <= 1e-8 * cfg.tolerance_scale;
      mono["degeneration"] = {{"status", std::string("group-algebra degeneration: ") + (pass ? "pass" : "fail")},
                              {"power_residuals", powers},
                              {"translation_residual", diagonal}};
    }

    if (cfg.duality_words > 0) {
      const ConnectionMatrixForm B = vectorized_dunkl_system(arr, inst.L, inst.P);
      std::vector<Word> words;
      for (int i = 0; i < cfg.duality_words; ++i) {
        Word w(static_cast<std::size_t>(len(rng)));
        for (int& l : w) l = signed_pick(rng);
        words.push_back(w);
      }
      double worst = 0.0;
      json entries = json::array();
      for (const DualityEntry& e : dual_consistency_check(A, B, arr, gens, words, {})) {
        entries.push_back({{"word", e.word},
                           {"trace_rep", complex_json(e.trace_rep)},
                           {"trace_dual", complex_json(e.trace_dual)},
                           {"residual", e.residual}});
        worst = std::max(worst, e.residual);
      }
      mono["duality"] = entries;
      rec.add("monodromy", "duality", worst, 1e-5);
    }

    std::vector<CMat> raw;
    for (const auto& m : mats) raw.push_back(m.matrix);
    const CommutantReport comm = irreducibility_evidence(raw);
    mono["commutant"] = {{"dimension", comm.dimension},
                         {"gap_ratio", comm.gap_ratio},
                         {"smallest_singular_values", comm.smallest_singular_values}};

    if (cfg.parameter_probe) {
      const ParameterProbeReport probe = parameter_family_probe(arr, inst.L, inst.P);
      mono["parameter_probe"] = {{"rank", probe.rank},
                                 {"expected", probe.expected},
                                 {"singular_values", probe.singular_values},
                                 {"skipped", probe.skipped},
                                 {"words", probe.words}};
      rec.add("monodromy", "parameter_probe_rank_deficit", static_cast<double>(probe.expected - probe.rank), 0.0);
    }
  });

  r.body["command"] = "monodromy";
  r.body["config"] = resolved_config(cfg, inst);
  r.body["hypertori"] = hypertori_json(arr);
  r.body["basis_ordering"] = basis_ordering(arr, inst.L);
  r.body["orientation"] = orientation;
  r.body["monodromy"] = mono;
  r.body["residuals"] = residuals_json(r);
  r.body["errors"] = failures_json(r);
  r.body["versions"] = versions_json();
  r.body["seed"] = cfg.seed;
  r.body["pass"] = r.exit_code() == 0;
  r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string content_hash(const json& body) {
  const std::string text = body.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

json finalize_report(const RunResult& r) {
  json out = r.body;
  out["header"] = {{"runtime_ms", r.runtime_ms}, {"content_sha256", content_hash(r.body)}};
  return out;
}

json families_listing() {
  json out = json::array();
  std::vector<Family> presets{cyclic_family(2),      cyclic_family(3),      cyclic_family(4),
                              cyclic_family(6),      symmetric_family(2),   symmetric_family(3),
                              wreath_family(2, 2),   wreath_family(2, 3),   wreath_family(2, 4)};
  for (const Family& f : presets) {
    const Arrangement arr = Arrangement::build(f);
    json orbits = json::array();
    std::map<std::size_t, std::pair<int, int>> info;
    for (const auto& H : arr.hypertori) {
      info[H.orbit_id].first = H.order;
      ++info[H.orbit_id].second;
    }
    for (const auto& [id, v] : info) orbits.push_back({{"orbit", id}, {"order", v.first}, {"size", v.second}});
    out.push_back({{"family", f.name},
                   {"dim", f.torus.dim()},
                   {"group_order", arr.group().size()},
                   {"hypertori", arr.hypertori.size()},
                   {"orbits", orbits},
                   {"lattice_basis", [&] {
                      json b = json::array();
                      for (const CVec& v : f.torus.lattice_basis()) b.push_back(cvec_json(v));
                      return b;
                    }()}});
  }
  return out;
}

}  // namespace edunkl::lab
