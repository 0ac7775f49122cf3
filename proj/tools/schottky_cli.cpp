// Command-line front end: one subcommand per analysis, a JSON report per run, optional CSV.
// Exit codes: 0 success, 2 validation violations, 3 numerical reliability flag, 4 I/O or parse error.

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "schottky/config.hpp"
#include "schottky/config_io.hpp"
#include "schottky/fredholm.hpp"
#include "schottky/generator.hpp"
#include "schottky/parallel.hpp"
#include "schottky/periods.hpp"
#include "schottky/report.hpp"

using namespace schottky;

namespace {

enum Exit { kOk = 0, kViolations = 2, kUnreliable = 3, kIoError = 4 };

struct Options {
  std::string config_path;
  std::string out_path;
  std::string csv_path;
  std::optional<int> threads;
  std::optional<int> truncation;
  std::optional<double> rank_tol;
  std::optional<double> quad_tol;
  bool timing = false;
  int degree_twist = 0;
  std::string omega_path;
  std::vector<std::string> log_cocycle;
  std::vector<std::string> dust_points;
  int levels = 3;
  double radius_scale = 0.01;
  double radius_decay = 0.25;
  std::string config_out;
  std::string point;
  int rho_k = 1;
  long cells = 100000;
};

// Outcome of one subcommand: the report body and the exit code it asks for.
struct Outcome {
  Json result;
  int code = kOk;
  std::string csv;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Complex parse_complex(const std::string& text) {
  std::istringstream in(text);
  double re = 0, im = 0;
  char comma = 0;
  in >> re;
  if (in.fail()) throw CLI::ValidationError("complex value", "expected 're,im' but got '" + text + "'");
  if (in >> comma) {
    if (comma != ',' || !(in >> im)) throw CLI::ValidationError("complex value", "expected 're,im' but got '" + text + "'");
  }
  return {re, im};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << text;
  if (!out) throw IoError(path + ": write failed");
}

Json violations_json(const std::vector<Violation>& vs) {
  Json arr = Json::array();
  for (const Violation& v : vs) arr.push_back(Json{{"invariant", v.invariant}, {"label", v.label}, {"defect", v.defect}});
  return arr;
}

int truncation_of(const Options& o, const SchottkyConfig& c) { return o.truncation.value_or(c.truncation); }
double rank_tol_of(const Options& o, const SchottkyConfig& c) { return o.rank_tol.value_or(c.tolerances.rank_tol); }
double quad_tol_of(const Options& o, const SchottkyConfig& c) { return o.quad_tol.value_or(c.tolerances.quad_tol); }

// Commands that need a valid configuration stop here with the violations.
std::optional<Outcome> require_validated(const SchottkyConfig& c) {
  const ValidationReport v = validate(c);
  if (v.ok()) return std::nullopt;
  return Outcome{Json{{"violations", violations_json(v.violations)}, {"warnings", violations_json(v.warnings)}},
                 kViolations, ""};
}

Outcome cmd_validate(const SchottkyConfig& c) {
  const ValidationReport v = validate(c);
  return {Json{{"ok", v.ok()},
               {"genus", c.genus()},
               {"violations", violations_json(v.violations)},
               {"warnings", violations_json(v.warnings)}},
          v.ok() ? kOk : kViolations, ""};
}

Outcome cmd_distances(const SchottkyConfig& c) {
  const Eigen::MatrixXd l = distance_matrix(c);
  return {Json{{"circles", c.circle_count()}, {"distances", real_matrix_json(l)}}, kOk,
          render_matrix_csv(l.cast<Complex>())};
}

Outcome cmd_admissibility(const SchottkyConfig& c) {
  if (auto bad = require_validated(c)) return *bad;
  const AdmissibilityReport a = admissibility_report(c);
  Json r{{"distances", real_matrix_json(a.distances)},
         {"sum_e", a.sum_e},
         {"opnorm_half", a.opnorm_half},
         {"opnorm_full", a.opnorm_full},
         {"sanity_bound", a.sanity_bound},
         {"flags", Json{{"well_separated", a.well_separated},
                        {"hilbert_schmidt", a.hilbert_schmidt},
                        {"hs_bundle", a.hs_bundle}}}};
  const HsBundleReport h = hs_bundle_check(c, c.cocycle);
  r["hs_bundle"] = Json{{"sum", h.sum},
                        {"factors", h.factors},
                        {"terms", real_matrix_json(h.terms)},
                        {"constant_cocycle", h.constant},
                        {"within_budget", h.within_budget}};
  const bool ok = a.well_separated && a.hilbert_schmidt && a.hs_bundle;
  return {r, ok ? kOk : kViolations, render_matrix_csv(a.distances.cast<Complex>())};
}

Outcome cmd_rr_index(const SchottkyConfig& c, const Options& o) {
  if (auto bad = require_validated(c)) return *bad;
  std::vector<RationalFunction> cocycle = c.cocycle;
  if (cocycle.empty()) cocycle.assign(static_cast<std::size_t>(c.genus()), RationalFunction::constant(1.0));
  if (o.degree_twist != 0) {
    if (c.genus() == 0) throw CLI::ValidationError("--degree-twist", "needs at least one pair");
    RationalFunction& f = cocycle[0];
    const Complex center = c.pairs[0].K.center;
    for (int k = 0; k < std::abs(o.degree_twist); ++k) (o.degree_twist > 0 ? f.zeros : f.poles).push_back(center);
  }
  const int N = truncation_of(o, c);
  const RRIndex r = rr_index(c, cocycle, N, rank_tol_of(o, c));
  Json j{{"dim_ker", r.dim_ker},
         {"dim_coker", r.dim_coker},
         {"index", r.index},
         {"degree", r.degree},
         {"gap_ratio", std::isfinite(r.gap_ratio) ? Json(r.gap_ratio) : Json(nullptr)},
         {"gap_flag", r.gap_flag},
         {"refined", Json{{"truncation", N + 10}, {"dim_ker", r.dim_ker_refined}, {"dim_coker", r.dim_coker_refined}}},
         {"stable", r.stable},
         {"sigma_min", r.sigma_min},
         {"degree_twist", o.degree_twist}};
  return {j, (r.gap_flag || !r.stable) ? kUnreliable : kOk, ""};
}

Outcome cmd_toy_invert(const SchottkyConfig& c, const Options& o) {
  if (auto bad = require_validated(c)) return *bad;
  const int N = truncation_of(o, c);
  const ToyReport t = toy_invertibility(c, N, rank_tol_of(o, c));
  const AdmissibilityReport a = admissibility_report(c);
  return {Json{{"sigma_min", t.sigma_min},
               {"sigma_max", t.sigma_max},
               {"cond", std::isfinite(t.cond) ? Json(t.cond) : Json(nullptr)},
               {"sigma_min_refined", t.sigma_min_refined},
               {"opnorm_full", a.opnorm_full},
               {"bijective", t.bijective},
               {"verdict", t.verdict}},
          t.bijective ? kOk : kUnreliable, ""};
}

Json hodge_json(const HodgeFlags& h) {
  return Json{{"symmetric", h.symmetric},
              {"positive", h.positive},
              {"bounded_re", h.bounded_re},
              {"symmetry_defect", h.symmetry_defect},
              {"min_im_eig", h.min_im_eig},
              {"re_bound", std::isfinite(h.re_bound) ? Json(h.re_bound) : Json(nullptr)}};
}

Outcome cmd_periods(const SchottkyConfig& c, const Options& o) {
  if (auto bad = require_validated(c)) return *bad;
  const int N = truncation_of(o, c);
  const PeriodReport r = period_matrix(c, N);
  const double tol = 1e-6;
  Json j{{"normalization", "A-periods 2 pi i delta_jk; Omega = B-period / (2 pi i); real parts modulo 1"},
         {"omega", complex_matrix_json(r.omega)},
         {"omega_raw", complex_matrix_json(r.omega_raw)},
         {"a_periods", complex_matrix_json(r.a_periods)},
         {"symmetry_defect", r.symmetry_defect},
         {"min_im_eig", r.min_im_eig},
         {"hodge", hodge_json(validate_hodge(r.omega, tol))},
         {"lattice", Json{{"integer_generators", complex_matrix_json(r.lattice.leftCols(c.genus()))},
                          {"period_generators", complex_matrix_json(r.lattice.rightCols(c.genus()))}}},
         {"max_gluing_residual", r.max_gluing_residual},
         {"truncation", N}};
  const HodgeFlags h = validate_hodge(r.omega, tol);
  const bool reliable = h.symmetric && h.positive && r.max_gluing_residual <= 1e-8;
  return {j, reliable ? kOk : kUnreliable, render_matrix_csv(r.omega)};
}

Eigen::MatrixXcd read_omega(const std::string& path) {
  const std::string text = read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (j.is_object() && j.contains("result")) j = j["result"];
  if (j.is_object() && j.contains("omega")) j = j["omega"];
  if (!j.is_array()) throw ConfigError(path + ": expected a matrix of [re, im] pairs");
  const Eigen::Index g = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXcd m(g, g);
  for (Eigen::Index i = 0; i < g; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != g)
      throw ConfigError(path + ": row " + std::to_string(i) + " has the wrong length");
    for (Eigen::Index k = 0; k < g; ++k) {
      const Json& e = row[static_cast<std::size_t>(k)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw ConfigError(path + ": entry (" + std::to_string(i) + ", " + std::to_string(k) + ") is not [re, im]");
      m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

Outcome cmd_hodge_check(const std::optional<SchottkyConfig>& c, const Options& o) {
  Eigen::MatrixXcd omega;
  double tol = o.quad_tol.value_or(1e-6);
  if (!o.omega_path.empty()) {
    omega = read_omega(o.omega_path);
  } else {
    if (auto bad = require_validated(*c)) return *bad;
    omega = period_matrix(*c, truncation_of(o, *c)).omega;
  }
  const HodgeFlags h = validate_hodge(omega, tol);
  return {Json{{"omega", complex_matrix_json(omega)}, {"tolerance", tol}, {"hodge", hodge_json(h)}},
          (h.symmetric && h.positive && h.bounded_re) ? kOk : kViolations, render_matrix_csv(omega)};
}

Outcome cmd_jacobian_reduce(const SchottkyConfig& c, const Options& o) {
  if (auto bad = require_validated(c)) return *bad;
  const int g = c.genus();
  Eigen::VectorXcd u(g);
  if (!o.log_cocycle.empty()) {
    if (static_cast<int>(o.log_cocycle.size()) != g)
      throw CLI::ValidationError("--log-cocycle", "expects one complex value per pair");
    for (int j = 0; j < g; ++j) u(j) = parse_complex(o.log_cocycle[static_cast<std::size_t>(j)]);
  } else {
    for (int j = 0; j < g; ++j) {
      const RationalFunction f = c.psi(j);
      if (!f.is_constant()) throw CLI::ValidationError("jacobian-reduce", "needs a constant cocycle or --log-cocycle");
      u(j) = std::log(f.scale);
    }
  }
  const PeriodReport p = period_matrix(c, truncation_of(o, c));
  if (!p.hodge.positive) {
    return {Json{{"error", "imaginary part of the period matrix is not positive"},
                 {"omega", complex_matrix_json(p.omega)}},
            kViolations, ""};
  }
  const LatticeReduction r = jacobian_reduce(u, p.omega);
  std::vector<int> m(r.m.data(), r.m.data() + r.m.size()), n(r.n.data(), r.n.data() + r.n.size());
  Json reduced = Json::array();
  for (Eigen::Index i = 0; i < r.reduced.size(); ++i) reduced.push_back(complex_json(r.reduced(i)));
  Json input = Json::array();
  for (Eigen::Index i = 0; i < u.size(); ++i) input.push_back(complex_json(u(i)));
  return {Json{{"log_cocycle", input},
               {"omega", complex_matrix_json(p.omega)},
               {"m", m},
               {"n", n},
               {"reduced", reduced},
               {"residual", r.residual}},
          kOk, ""};
}

Outcome cmd_generate(const Options& o) {
  std::vector<Complex> dust;
  for (const std::string& s : o.dust_points) dust.push_back(parse_complex(s));
  if (dust.empty()) dust.push_back(0.0);
  const double scale = o.radius_scale, decay = o.radius_decay;
  const NetFamily fam = generate_net_family(dust, o.levels, [&](int k) { return scale * std::pow(decay, k); });
  // Net separation and disjointness, checked over all pairs; partial sums of e^{-l} per level.
  double worst_net = std::numeric_limits<double>::infinity();
  bool disjoint = true;
  const std::size_t n = fam.disks.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::abs(fam.disks[i].center - fam.disks[j].center);
      const double bound = 0.125 * std::ldexp(1.0, -std::max(fam.level[i], fam.level[j]) - 1);
      worst_net = std::min(worst_net, d / bound);
      disjoint = disjoint && d > fam.disks[i].radius + fam.disks[j].radius;
    }
  Json levels = Json::array();
  double partial = 0;
  for (int k = 1; k <= o.levels; ++k) {
    std::vector<Disk> upto;
    for (std::size_t i = 0; i < n; ++i)
      if (fam.level[i] <= k) upto.push_back(fam.disks[i]);
    const Eigen::MatrixXd l = distance_matrix(upto);
    partial = 0;
    for (Eigen::Index i = 0; i < l.rows(); ++i)
      for (Eigen::Index j = 0; j < l.cols(); ++j)
        if (i != j) partial += std::exp(-l(i, j));
    levels.push_back(Json{{"level", k},
                          {"disks", fam.level_counts[static_cast<std::size_t>(k - 1)]},
                          {"sum_e_partial", partial}});
  }
  const SchottkyConfig cfg = auto_pair(fam.disks);
  if (!o.config_out.empty()) save_config(cfg, o.config_out);
  Json disks = Json::array();
  for (std::size_t i = 0; i < n; ++i)
    disks.push_back(Json{{"center", complex_json(fam.disks[i].center)}, {"radius", fam.disks[i].radius},
                         {"level", fam.level[i]}});
  const bool net_ok = n < 2 || worst_net >= 1.0;
  return {Json{{"levels", levels},
               {"disk_count", static_cast<long>(n)},
               {"genus", cfg.genus()},
               {"net_property", net_ok},
               {"net_margin", n < 2 ? Json(nullptr) : Json(worst_net)},
               {"disjoint", disjoint},
               {"radius_schedule", Json{{"scale", scale}, {"decay", decay}}},
               {"disks", disks},
               {"config_out", o.config_out}},
          (net_ok && disjoint) ? kOk : kViolations, ""};
}

Outcome cmd_dust(const SchottkyConfig& c, const Options& o) {
  const Complex z0 = parse_complex(o.point);
  const double rho = dust_rho(c, z0, o.rho_k);
  return {Json{{"point", complex_json(z0)}, {"k", o.rho_k}, {"rho", rho}}, kOk, ""};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical analysis of Schottky configurations: gluing systems, periods and Jacobians."};
  app.require_subcommand(1);
  Options o;
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: machine parallelism)")->check(CLI::NonNegativeNumber);
  app.add_option("--truncation", o.truncation, "Mode truncation N (default: from the configuration)")
      ->check(CLI::PositiveNumber);
  app.add_option("--rank-tol", o.rank_tol, "Relative rank tolerance")->check(CLI::Range(1e-300, 1.0));
  app.add_option("--quad-tol", o.quad_tol, "Quadrature / validation tolerance")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out_path, "Report file (default: standard output)");
  app.add_option("--csv", o.csv_path, "CSV dump of the main matrix");
  app.add_flag("--timing", o.timing, "Record wall time in the manifest (breaks byte-identical reports)");

  auto with_config = [&](CLI::App* sub) { sub->add_option("config", o.config_path, "Configuration file")->required(); };
  CLI::App* validate_cmd = app.add_subcommand("validate", "Check the configuration invariants");
  with_config(validate_cmd);
  CLI::App* distances_cmd = app.add_subcommand("distances", "Conformal distance matrix of all circles");
  with_config(distances_cmd);
  CLI::App* admiss_cmd = app.add_subcommand("admissibility", "Separation sums, operator norms and bundle sums");
  with_config(admiss_cmd);
  CLI::App* rr_cmd = app.add_subcommand("rr-index", "Kernel and cokernel dimensions of the half-form gluing system");
  with_config(rr_cmd);
  rr_cmd->add_option("--degree-twist", o.degree_twist, "Multiply the first pair's cocycle by (z - c_K)^d");
  CLI::App* toy_cmd = app.add_subcommand("toy-invert", "Invertibility of the weight-0 gluing system");
  with_config(toy_cmd);
  CLI::App* periods_cmd = app.add_subcommand("periods", "Holomorphic basis, period matrix and Hodge flags");
  with_config(periods_cmd);
  CLI::App* hodge_cmd = app.add_subcommand("hodge-check", "Symmetry, positivity and real-part bound of a period matrix");
  hodge_cmd->add_option("config", o.config_path, "Configuration file");
  hodge_cmd->add_option("--omega", o.omega_path, "Read the matrix from a report or a JSON [[re, im], ...] file");
  CLI::App* jac_cmd = app.add_subcommand("jacobian-reduce", "Reduce a constant cocycle modulo the period lattice");
  with_config(jac_cmd);
  jac_cmd->add_option("--log-cocycle", o.log_cocycle, "Logarithms of the cocycle constants, one 're,im' per pair");
  CLI::App* gen_cmd = app.add_subcommand("generate", "Net family of disks around a dust set");
  gen_cmd->add_option("--dust", o.dust_points, "Dust points 're,im' (default: the origin)");
  gen_cmd->add_option("--levels", o.levels, "Number of shells")->check(CLI::Range(0, 12));
  gen_cmd->add_option("--radius-scale", o.radius_scale, "Radius schedule scale s in s * q^k / n_k")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--radius-decay", o.radius_decay, "Radius schedule ratio q")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--config-out", o.config_out, "Write the auto-paired configuration here");
  CLI::App* dust_cmd = app.add_subcommand("dust", "Boundary moment rho_k of the disks at a point");
  with_config(dust_cmd);
  dust_cmd->add_option("--point", o.point, "Evaluation point 're,im'")->required();
  dust_cmd->add_option("--k", o.rho_k, "Moment order")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kIoError;
  }
  if (threads == 0) {
    std::cerr << "note: --threads not given, using " << thread_count()
              << " workers; reductions are order-fixed so results do not depend on it\n";
  }
  set_thread_count(threads);

  const auto start = std::chrono::steady_clock::now();
  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  RunManifest manifest;
  manifest.command = name;
  manifest.threads = thread_count();
  try {
    std::optional<SchottkyConfig> config;
    if (!o.config_path.empty()) {
      const std::string text = read_text_file(o.config_path);
      config = parse_config(text, o.config_path);
      manifest.config_path = o.config_path;
      manifest.config_hash = sha256_hex(text);
    } else if (name == "hodge-check" && o.omega_path.empty()) {
      throw CLI::ValidationError("hodge-check", "needs a configuration or --omega");
    }
    if (config) {
      manifest.truncation = truncation_of(o, *config);
      manifest.rank_tol = rank_tol_of(o, *config);
      manifest.quad_tol = quad_tol_of(o, *config);
    } else {
      manifest.truncation = o.truncation.value_or(0);
      manifest.rank_tol = o.rank_tol.value_or(Tolerances{}.rank_tol);
      manifest.quad_tol = o.quad_tol.value_or(Tolerances{}.quad_tol);
    }

    Outcome out;
    if (name == "validate") out = cmd_validate(*config);
    else if (name == "distances") out = cmd_distances(*config);
    else if (name == "admissibility") out = cmd_admissibility(*config);
    else if (name == "rr-index") out = cmd_rr_index(*config, o);
    else if (name == "toy-invert") out = cmd_toy_invert(*config, o);
    else if (name == "periods") out = cmd_periods(*config, o);
    else if (name == "hodge-check") out = cmd_hodge_check(config, o);
    else if (name == "jacobian-reduce") out = cmd_jacobian_reduce(*config, o);
    else if (name == "generate") out = cmd_generate(o);
    else out = cmd_dust(*config, o);

    manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json manifest_json = manifest.to_json();
    if (!o.timing) manifest_json.erase("wall_seconds");
    const Json report{{"manifest", manifest_json}, {"result", out.result}, {"exit_code", out.code}};
    const std::string text = render_json(report);
    if (o.out_path.empty()) std::cout << text;
    else write_file(o.out_path, text);
    if (!o.csv_path.empty()) {
      if (out.csv.empty()) std::cerr << "note: " << name << " has no matrix output; CSV not written\n";
      else write_file(o.csv_path, out.csv);
    }
    if (out.code == kViolations) std::cerr << name << ": validation violations\n";
    if (out.code == kUnreliable) std::cerr << name << ": numerical reliability flag raised\n";
    return out.code;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const NonFiniteError& e) {
    std::cerr << "error: non-finite value in report: " << e.what() << "\n";
    return kUnreliable;
  } catch (const SingularSystemError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnreliable;
  } catch (const PathError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnreliable;
  } catch (const UndersampledError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnreliable;
  } catch (const GeometryError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kViolations;
  } catch (const std::logic_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnreliable;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnreliable;
  }
}
