#include "itep/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>

#include <CLI11.hpp>

#include "itep/io.hpp"
#include "itep/oracle_1d.hpp"
#include "itep/pencil_spectra.hpp"
#include "itep/resolvent_analysis.hpp"
#include "itep/symbol_checks.hpp"

namespace itep::cli {

namespace fs = std::filesystem;
using io::fmt;
using io::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

struct Flags {
  bool refine = false;
  bool verify_oracle = false;
  bool export_pencil = false;
};

// Reads one config section and records every resolved value for the manifests.
class Section {
 public:
  Section(const json& config, std::string name, json& resolved) : name_(std::move(name)), out_(resolved[name_]) {
    out_ = json::object();
    if (config.contains(name_)) {
      src_ = config.at(name_);
      if (!src_.is_object()) config_error("'" + name_ + "' must be an object");
    } else {
      src_ = json::object();
    }
  }

  double num(const std::string& key, double fallback) {
    const double v = io::get_double(src_, key, fallback);
    out_[key] = v;
    return v;
  }
  double positive(const std::string& key, double fallback) {
    const double v = num(key, fallback);
    if (!(v > 0)) config_error(name_ + "." + key + " must be positive");
    return v;
  }
  int count(const std::string& key, int fallback, int min_value = 1) {
    const int v = io::get_int(src_, key, fallback);
    if (v < min_value) config_error(name_ + "." + key + " must be at least " + std::to_string(min_value));
    out_[key] = v;
    return v;
  }
  std::vector<double> nums(const std::string& key, std::vector<double> fallback) {
    auto v = io::get_doubles(src_, key, std::move(fallback));
    out_[key] = v;
    return v;
  }
  bool flag(const std::string& key, bool fallback) {
    bool v = fallback;
    if (src_.contains(key)) {
      if (!src_.at(key).is_boolean()) config_error(name_ + "." + key + " must be true or false");
      v = src_.at(key).get<bool>();
    }
    out_[key] = v;
    return v;
  }
  std::optional<cplx> complex(const std::string& key) {
    if (!src_.contains(key)) return std::nullopt;
    const cplx z = io::parse_complex(src_.at(key), name_ + "." + key);
    out_[key] = io::complex_to_json(z);
    return z;
  }
  bool has(const std::string& key) const { return src_.contains(key); }
  void record(const std::string& key, json v) { out_[key] = std::move(v); }

 private:
  std::string name_;
  json src_;
  json& out_;
};

struct Context {
  std::string subcommand;
  json config;
  fs::path out_dir;
  std::uint64_t seed = 0;
  Flags flags;
  json resolved = json::object();
  bool resolving = true;  // errors before computation starts are config errors
  std::optional<io::PencilConfig> pencil_cfg;

  void emit_csv(const std::string& name, const io::CsvRow& header, const std::vector<io::CsvRow>& rows) const {
    io::write_csv(out_dir / name, header, rows);
    manifest(name);
  }
  void emit_json(const std::string& name, const json& value) const {
    io::write_json(out_dir / name, value);
    manifest(name);
  }
  void emit_matrix(const std::string& name, const CMat& M) const {
    io::write_matrix_csv(out_dir / name, M);
    manifest(name);
  }
  void manifest(const std::string& name) const {
    json cfg = resolved;
    cfg["flags"] = {{"refine", flags.refine}, {"verify_oracle", flags.verify_oracle},
                    {"export_pencil", flags.export_pencil}};
    io::write_manifest(out_dir / name, {subcommand, cfg, seed});
  }

  const io::PencilConfig& pencil() {
    if (!pencil_cfg) {
      if (!config.contains("pencil")) config_error("config has no 'pencil' section");
      pencil_cfg = io::parse_pencil(config.at("pencil"));
      resolved["pencil"] = pencil_cfg->to_json();
    }
    return *pencil_cfg;
  }

  DiscretePencil build(int extra_pts = 0) {
    const auto& cfg = pencil();
    try {
      return io::build_pencil(cfg, extra_pts);
    } catch (const Error& e) {
      config_error(e.what());
    }
  }
};

json complex_pair(cplx z) { return io::complex_to_json(z); }

double default_p(const io::PencilConfig& cfg) {
  if (cfg.type == io::PencilConfig::Type::Matrices) return 1.0;
  return (cfg.two_d ? 2 : 1) / 2.0 + 0.5;
}

// Eigen decomposition with the refined reference grid when requested.
EigenSolution solve(Context& ctx, Section& sec, const DiscretePencil& pencil) {
  EigenOptions opt;
  opt.lambda_prime = sec.complex("lambda_prime");
  opt.residual_tol = sec.positive("residual_tol", opt.residual_tol);
  opt.trust_tol = sec.positive("trust_tol", opt.trust_tol);
  if (ctx.flags.refine) {
    if (ctx.pencil().type == io::PencilConfig::Type::Matrices) config_error("--refine needs an assembled pencil");
    const int extra = sec.count("refine_extra_pts", 32);
    opt.reference = std::make_shared<const DiscretePencil>(ctx.build(extra));
  }
  ctx.resolving = false;
  return eigen(linearize(pencil), opt);
}

json report_json(const EllipticityReport& r) {
  return {{"min_modulus", r.min_modulus},
          {"witness",
           {{"q", r.witness.q_val},
            {"xi_sq", r.witness.xi_sq},
            {"lambda_re", r.witness.lambda.real()},
            {"lambda_im", r.witness.lambda.imag()}}},
          {"tolerance", r.tolerance},
          {"samples", r.samples},
          {"passed", r.passed}};
}

int cmd_check_ellipticity(Context& ctx) {
  const auto& pc = ctx.pencil();
  if (pc.type != io::PencilConfig::Type::Assembled) config_error("check-ellipticity needs an assembled pencil");
  Section sec(ctx.config, "ellipticity", ctx.resolved);
  const auto cone_v = sec.nums("cone", {-0.75 * std::numbers::pi, 0.75 * std::numbers::pi});
  if (cone_v.size() != 2 || !(cone_v[0] <= cone_v[1]) || cone_v[0] < -std::numbers::pi ||
      cone_v[1] > std::numbers::pi)
    config_error("ellipticity.cone must be [arg_min, arg_max] within [-pi, pi]");
  const Cone cone{cone_v[0], cone_v[1]};
  const int samples = sec.count("samples", 4096);
  const double tol = sec.positive("tolerance", 1e-8);

  double q_min = 0.0, q_max = 0.0;
  if (pc.profile.q.type == CoefficientSpec::Type::Constant) {
    q_min = q_max = pc.profile.q.data[0];
  } else {
    const DiscretePencil p = ctx.build();
    q_min = p.q_nodes.minCoeff();
    q_max = p.q_nodes.maxCoeff();
  }
  q_min = pc.profile.q_min.value_or(q_min);
  q_max = pc.profile.q_max.value_or(q_max);
  sec.record("q_range", {q_min, q_max});
  ctx.resolving = false;

  const auto c1 = check_condition1(pc.profile.kind, q_min, q_max, cone, samples, ctx.seed, tol);
  json report;
  report["condition1"] = report_json(c1);
  bool passed = c1.passed;
  try {
    const auto c2 = check_condition2(pc.profile.kind, pc.bc, q_min, q_max, cone, samples, ctx.seed, tol);
    report["condition2"] = report_json(c2);
    passed = passed && c2.passed;
  } catch (const Error& e) {
    report["condition2"] = {{"error", e.what()}, {"passed", false}};
    passed = false;
  }
  report["passed"] = passed;
  ctx.emit_json("ellipticity.json", report);
  std::cout << "check-ellipticity: condition1 min " << fmt(c1.min_modulus) << ", "
            << (passed ? "pass" : "fail") << '\n';
  return passed ? kPass : kFail;
}

int cmd_spectrum(Context& ctx) {
  Section sec(ctx.config, "spectrum", ctx.resolved);
  const auto& pc = ctx.pencil();
  std::optional<CharacteristicFunction> cf;
  SearchRect rect;
  double oracle_tol = 0.0;
  if (ctx.flags.verify_oracle) {
    cf = io::oracle_for(pc);
    if (!cf) config_error("--verify-oracle needs a 1D pencil with constant q");
    const double R = sec.positive("oracle_radius", 200.0);
    const auto r = sec.nums("oracle_rect", {-R - 0.3, R + 0.2, -R - 0.1, R + 0.4});
    if (r.size() != 4 || !(r[0] < r[1]) || !(r[2] < r[3])) config_error("spectrum.oracle_rect must be [re0, re1, im0, im1]");
    rect = {r[0], r[1], r[2], r[3]};
    oracle_tol = sec.positive("oracle_tol", 1e-6);
  }
  const DiscretePencil pencil = ctx.build();
  const EigenSolution eig = solve(ctx, sec, pencil);

  std::vector<io::CsvRow> rows;
  json clusters = json::array();
  int n_trusted = 0;
  for (const auto& c : eig.clusters) {
    rows.push_back({fmt(c.lambda.real()), fmt(c.lambda.imag()), std::to_string(c.multiplicity),
                    std::to_string(c.chain_length()), fmt(c.residual), c.trusted ? "1" : "0"});
    json lengths = json::array();
    for (const auto& ch : c.chains) lengths.push_back(ch.vectors.size());
    clusters.push_back({{"lambda", complex_pair(c.lambda)},
                        {"multiplicity", c.multiplicity},
                        {"chain_lengths", lengths},
                        {"residual", c.residual},
                        {"trusted", c.trusted}});
    n_trusted += c.trusted ? 1 : 0;
  }
  ctx.emit_csv("eigenvalues.csv", {"re", "im", "multiplicity", "chain_length", "residual", "trusted"}, rows);
  ctx.emit_json("chains.json", {{"lambda_prime", complex_pair(eig.lambda_prime)},
                                {"dimension", pencil.dim()},
                                {"clusters", clusters},
                                {"trusted", n_trusted}});
  if (ctx.flags.export_pencil) {
    ctx.emit_matrix("A0.csv", pencil.A0);
    ctx.emit_matrix("A1.csv", pencil.A1);
    ctx.emit_matrix("A2.csv", pencil.A2);
    ctx.emit_csv("weights.csv", {"weight"}, [&] {
      std::vector<io::CsvRow> w;
      for (Eigen::Index i = 0; i < pencil.weights.size(); ++i) w.push_back({fmt(pencil.weights(i))});
      return w;
    }());
  }

  int code = kPass;
  if (cf) {
    const RootSearch rs = search_roots(*cf, rect);
    const auto inside = [&](cplx z) {
      return z.real() > rs.rect.re_min && z.real() < rs.rect.re_max && z.imag() > rs.rect.im_min &&
             z.imag() < rs.rect.im_max;
    };
    int count = 0, untrusted = 0;
    double worst = 0.0;
    for (const auto& c : eig.clusters) {
      if (!inside(c.lambda)) continue;
      count += c.multiplicity;
      if (!c.trusted) ++untrusted;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& r : rs.roots) best = std::min(best, std::abs(r.lambda - c.lambda) / std::max(1.0, std::abs(r.lambda)));
      worst = std::max(worst, best);
    }
    const bool ok = count == rs.winding && untrusted == 0 && worst <= oracle_tol;
    ctx.emit_json("oracle_check.json", {{"rect", {rs.rect.re_min, rs.rect.re_max, rs.rect.im_min, rs.rect.im_max}},
                                        {"winding", rs.winding},
                                        {"eigenvalues_inside", count},
                                        {"untrusted_inside", untrusted},
                                        {"max_rel_error", worst},
                                        {"tolerance", oracle_tol},
                                        {"passed", ok}});
    std::cout << "spectrum: oracle winding " << rs.winding << ", discrete " << count << ", max rel error "
              << fmt(worst) << ", " << (ok ? "pass" : "fail") << '\n';
    code = ok ? kPass : kFail;
  }
  std::cout << "spectrum: " << eig.clusters.size() << " clusters, " << n_trusted << " trusted\n";
  return code;
}

int cmd_resolvent_scan(Context& ctx) {
  Section sec(ctx.config, "resolvent_scan", ctx.resolved);
  const auto& pc = ctx.pencil();
  const auto angles = sec.nums("angles", {0.0, std::numbers::pi / 4, std::numbers::pi / 2, 3 * std::numbers::pi / 4});
  const double r_min = sec.positive("r_min", 10.0);
  const double r_max = sec.positive("r_max", 1000.0);
  if (!(r_min < r_max)) config_error("resolvent_scan needs r_min < r_max");
  const int n_radii = sec.count("n_radii", 25, 2);
  const double target = sec.num("slope_target", -2.0);
  const double slope_tol = sec.positive("slope_tol", 0.15);
  const auto bands = sec.nums("band_starts", {8.0, 16.0, 32.0, 64.0});
  for (double b : bands)
    if (!(b > 0)) config_error("resolvent_scan.band_starts must be positive");
  const double p = sec.positive("p", default_p(pc));
  const double eps = sec.positive("eps", 0.1);
  const int n_samples = sec.count("circle_samples", 128, 8);
  const double gap = sec.positive("gap_fraction", 1e-2);
  const DiscretePencil pencil = ctx.build();
  ctx.resolving = false;

  const auto poles = companion_eigenvalues(pencil, default_lambda_prime(pencil));
  const auto radii = log_radii(r_min, r_max, n_radii);
  bool passed = true;
  json rays = json::array();
  for (std::size_t k = 0; k < angles.size(); ++k) {
    const RayScan rs = ray_scan(pencil, std::polar(1.0, angles[k]), radii, poles);
    std::vector<io::CsvRow> rows;
    for (std::size_t i = 0; i < rs.radii.size(); ++i) rows.push_back({fmt(rs.radii[i]), fmt(rs.norms[i])});
    ctx.emit_csv("ray_" + std::to_string(k) + ".csv", {"radius", "norm"}, rows);
    const bool ok = std::abs(rs.fitted_slope - target) <= slope_tol;
    passed = passed && ok;
    rays.push_back({{"angle", angles[k]}, {"slope", rs.fitted_slope}, {"passed", ok}});
    std::cout << "resolvent-scan: ray " << k << " slope " << fmt(rs.fitted_slope) << '\n';
  }

  json circles = nullptr;
  if (!bands.empty()) {
    const auto cg = circle_growth_scan(pencil, bands, poles, p, eps, n_samples, gap);
    std::vector<io::CsvRow> rows;
    for (const auto& c : cg.circles)
      rows.push_back({fmt(c.radius), fmt(c.max_log_norm), fmt(c.min_pole_distance)});
    ctx.emit_csv("circles.csv", {"radius", "max_log_norm", "min_pole_distance"}, rows);
    circles = {{"p", cg.p}, {"eps", cg.eps}, {"exponent", cg.exponent}, {"bounded", cg.bounded}, {"passed", cg.passed}};
    passed = passed && cg.passed;
  }
  ctx.emit_json("resolvent.json", {{"rays", rays}, {"circles", circles}, {"passed", passed}});
  std::cout << "resolvent-scan: " << (passed ? "pass" : "fail") << '\n';
  return passed ? kPass : kFail;
}

int cmd_counting(Context& ctx) {
  Section sec(ctx.config, "counting", ctx.resolved);
  const auto t_values = sec.nums("t_values", [] {
    std::vector<double> t;
    for (int i = 0; i <= 24; ++i) t.push_back(std::pow(10.0, 3.0 * i / 24.0));
    return t;
  }());
  for (double t : t_values)
    if (!(t >= 0)) config_error("counting.t_values must be nonnegative");

  EigenSolution eig;
  std::optional<CompanionOperator> comp;
  double p = 1.0;
  if (sec.has("eigenvalues")) {
    // Bare eigenvalue list: each entry is one trusted simple eigenvalue.
    const auto lp = sec.complex("lambda_prime");
    if (!lp) config_error("counting with an eigenvalue list needs lambda_prime");
    p = sec.positive("p", 1.0);
    const json& list = ctx.config.at("counting").at("eigenvalues");
    if (!list.is_array()) config_error("counting.eigenvalues must be a list");
    json listed = json::array();
    for (const auto& v : list) {
      EigenCluster c;
      c.lambda = io::parse_complex(v, "counting.eigenvalues");
      c.trusted = true;
      eig.clusters.push_back(c);
      listed.push_back(complex_pair(c.lambda));
    }
    sec.record("eigenvalues", listed);
    eig.lambda_prime = *lp;
    ctx.resolving = false;
  } else {
    p = sec.positive("p", default_p(ctx.pencil()));
    const bool schatten = sec.flag("schatten", true);
    const DiscretePencil pencil = ctx.build();
    eig = solve(ctx, sec, pencil);
    if (schatten) comp = linearize(pencil);
  }
  const CountingReport rep = counting(eig, eig.lambda_prime, p, t_values, comp ? &*comp : nullptr);

  std::vector<io::CsvRow> rows;
  for (std::size_t i = 0; i < rep.t_values.size(); ++i)
    rows.push_back({fmt(rep.t_values[i]), std::to_string(rep.counts[i]), fmt(rep.discrete_bound[i]),
                    fmt(rep.schatten_bound[i])});
  ctx.emit_csv("counting.csv", {"t", "count", "discrete_bound", "schatten_bound"}, rows);
  ctx.emit_json("counting.json", {{"p", rep.p},
                                  {"lambda_prime", complex_pair(rep.lambda_prime)},
                                  {"eigenvalues", eig.trusted_eigenvalues().size()},
                                  {"certified", rep.certified}});
  std::cout << "counting: " << (rep.certified ? "bound holds" : "bound violated") << '\n';
  return rep.certified ? kPass : kFail;
}

int cmd_completeness(Context& ctx) {
  Section sec(ctx.config, "completeness", ctx.resolved);
  const int n_samples = sec.count("samples", 20);
  const double threshold = sec.positive("threshold", 0.1);
  const double chain_tol = sec.positive("chain_tol", 1e-8);
  const int n_checks = sec.count("chain_checks", 10, 0);
  const DiscretePencil pencil = ctx.build();
  const EigenSolution eig = solve(ctx, sec, pencil);

  const int M = static_cast<int>(std::count_if(eig.clusters.begin(), eig.clusters.end(),
                                               [](const EigenCluster& c) { return c.trusted; }));
  if (M == 0) throw Error(ErrorCode::Convergence, "no trusted eigenvalues");
  std::vector<int> ms;
  const int steps = std::min(M, 32);
  for (int i = 1; i <= steps; ++i) ms.push_back(static_cast<int>(std::lround(static_cast<double>(i) * M / steps)));
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());

  std::vector<io::CsvRow> rows;
  double worst_final = 0.0;
  bool monotone = true;
  for (int s = 0; s < n_samples; ++s) {
    const CVec f = completeness_sample(pencil, ctx.seed + static_cast<std::uint64_t>(s));
    double prev = std::numeric_limits<double>::infinity();
    for (int m : ms) {
      const double r = completeness_residual(eig, pencil, f, m).residual;
      rows.push_back({std::to_string(s), std::to_string(m), fmt(r)});
      if (r > prev * (1.0 + 1e-12)) monotone = false;
      prev = r;
    }
    worst_final = std::max(worst_final, prev);
  }
  // A chain vector must be reproduced by the full trusted span.
  double chain_worst = 0.0;
  int checked = 0;
  for (const auto& c : eig.clusters) {
    if (checked >= n_checks) break;
    if (!c.trusted) continue;
    chain_worst = std::max(chain_worst, completeness_residual(eig, pencil, c.chains.front().vectors.front(), M).residual);
    ++checked;
  }
  const bool passed = worst_final < threshold && monotone && chain_worst <= chain_tol;
  ctx.emit_csv("completeness.csv", {"sample", "m", "residual"}, rows);
  ctx.emit_json("completeness.json", {{"trusted", M},
                                      {"max_final_residual", worst_final},
                                      {"monotone", monotone},
                                      {"chain_vector_residual", chain_worst},
                                      {"passed", passed}});
  std::cout << "completeness: max residual " << fmt(worst_final) << ", " << (passed ? "pass" : "fail") << '\n';
  return passed ? kPass : kFail;
}

int cmd_oracle(Context& ctx) {
  Section sec(ctx.config, "oracle", ctx.resolved);
  const auto cf = io::oracle_for(ctx.pencil());
  if (!cf) config_error("oracle needs a 1D pencil with constant q");
  const auto r = sec.nums("rect", {-200.3, 200.2, -200.1, 200.4});
  if (r.size() != 4 || !(r[0] < r[1]) || !(r[2] < r[3])) config_error("oracle.rect must be [re0, re1, im0, im1]");
  const int max_roots = sec.count("max_roots", 1000);
  try {
    validate(*cf);
  } catch (const Error& e) {
    config_error(e.what());
  }
  ctx.resolving = false;

  const RootSearch rs = search_roots(*cf, {r[0], r[1], r[2], r[3]}, max_roots);
  std::vector<io::CsvRow> rows;
  int total = 0;
  for (const auto& root : rs.roots) {
    rows.push_back({fmt(root.lambda.real()), fmt(root.lambda.imag()), std::to_string(root.multiplicity),
                    fmt(root.newton_residual)});
    total += root.multiplicity;
  }
  const bool ok = total == rs.winding;
  ctx.emit_csv("roots.csv", {"re", "im", "multiplicity", "newton_residual"}, rows);
  ctx.emit_json("oracle.json", {{"rect", {rs.rect.re_min, rs.rect.re_max, rs.rect.im_min, rs.rect.im_max}},
                                {"winding", rs.winding},
                                {"roots", total},
                                {"passed", ok}});
  std::cout << "oracle: " << total << " roots, winding " << rs.winding << '\n';
  return ok ? kPass : kFail;
}

std::string coefficient_name(int n) {
  return "laurent_C_" + (n < 0 ? "m" + std::to_string(-n) : std::to_string(n)) + ".csv";
}

int cmd_laurent(Context& ctx) {
  Section sec(ctx.config, "laurent", ctx.resolved);
  const auto lambda0 = sec.complex("lambda0");
  if (!lambda0) config_error("laurent.lambda0 is required");
  if (!sec.has("radius")) config_error("laurent.radius is required");
  const double radius = sec.positive("radius", 1.0);
  const int n_coeffs = sec.count("n_coeffs", 4);
  const int n_quad = sec.count("n_quad", 256, 16);
  const bool guard = sec.flag("guard", true);
  const bool range_check = sec.flag("range_check", true);
  const double rel_tol = sec.positive("relation_tol", 1e-7);
  const double angle_tol = sec.positive("angle_tol", 1e-6);
  const DiscretePencil pencil = ctx.build();
  ctx.resolving = false;

  std::vector<cplx> eigs;
  if (guard) eigs = companion_eigenvalues(pencil, default_lambda_prime(pencil));
  const LaurentData data = laurent_coefficients(pencil, *lambda0, radius, n_coeffs, n_quad, eigs);
  const auto residuals = laurent_relations(pencil, data);
  double worst = 0.0;
  for (double r : residuals) worst = std::max(worst, r);

  json angle = nullptr;
  bool passed = worst <= rel_tol;
  if (range_check && data.order > 0) {
    const EigenSolution eig = eigen(linearize(pencil), {});
    const EigenCluster* best = nullptr;
    for (const auto& c : eig.clusters)
      if (!best || std::abs(c.lambda - *lambda0) < std::abs(best->lambda - *lambda0)) best = &c;
    std::vector<CVec> vecs;
    if (best && std::abs(best->lambda - *lambda0) < radius)
      for (const auto& ch : best->chains) vecs.insert(vecs.end(), ch.vectors.begin(), ch.vectors.end());
    if (vecs.empty()) throw Error(ErrorCode::Convergence, "no eigenvector inside the Laurent contour");
    const double a = laurent_range_angle(pencil, data, vecs);
    angle = a;
    passed = passed && a <= angle_tol;
  }

  for (std::size_t i = 0; i < data.indices.size(); ++i) ctx.emit_matrix(coefficient_name(data.indices[i]), data.C[i]);
  ctx.emit_json("laurent.json", {{"lambda0", complex_pair(data.lambda0)},
                                 {"N", data.order},
                                 {"radius", data.radius},
                                 {"n_quad", data.n_quad},
                                 {"indices", data.indices},
                                 {"residuals", residuals},
                                 {"convergence_error", data.convergence_error},
                                 {"noise_floor", data.noise_floor},
                                 {"range_angle", angle},
                                 {"passed", passed}});
  std::cout << "laurent: order " << data.order << ", max relation residual " << fmt(worst) << ", "
            << (passed ? "pass" : "fail") << '\n';
  return passed ? kPass : kFail;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Interior transmission eigenvalue pencils: spectra, resolvents and oracles", "itep"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  Flags flags;
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(Context&);
  };
  const Sub subs[] = {
      {"check-ellipticity", "sample both ellipticity conditions over a cone", cmd_check_ellipticity},
      {"spectrum", "eigenvalues and Keldysh chains", cmd_spectrum},
      {"resolvent-scan", "resolvent decay on rays and growth on circles", cmd_resolvent_scan},
      {"counting", "eigenvalue counting function against its bound", cmd_counting},
      {"completeness", "projection residuals onto trusted chains", cmd_completeness},
      {"oracle", "roots of the constant-coefficient characteristic function", cmd_oracle},
      {"laurent", "Laurent coefficients of the inverse pencil", cmd_laurent},
  };
  std::vector<CLI::App*> handles;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    handles.push_back(sub);
    if (std::string(s.name) == "spectrum") {
      sub->add_flag("--verify-oracle", flags.verify_oracle, "compare with the characteristic-function roots");
      sub->add_flag("--export-pencil", flags.export_pencil, "write A0, A1, A2 and the weights");
    }
    if (std::string(s.name) == "spectrum" || std::string(s.name) == "counting" ||
        std::string(s.name) == "completeness")
      sub->add_flag("--refine", flags.refine, "trust only eigenvalues reproduced on a finer grid");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return kPass;
    std::cerr << app.help();
    return kConfig;
  }

  Context ctx;
  ctx.flags = flags;
  for (std::size_t i = 0; i < handles.size(); ++i)
    if (handles[i]->parsed()) ctx.subcommand = subs[i].name;

  try {
    set_num_threads(threads);
    ctx.config = io::read_json_file(config_path);
    if (!ctx.config.is_object()) config_error("config must be a JSON object");
    ctx.seed = seed ? *seed : static_cast<std::uint64_t>(io::get_int(ctx.config, "seed", 0));
    ctx.resolved["seed"] = ctx.seed;
    ctx.out_dir = out_dir;
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) config_error("cannot create output directory " + out_dir + ": " + ec.message());
    for (std::size_t i = 0; i < handles.size(); ++i)
      if (handles[i]->parsed()) return subs[i].fn(ctx);
    return kConfig;
  } catch (const Error& e) {
    std::cerr << "itep " << ctx.subcommand << ": " << e.what() << '\n';
    return (ctx.resolving || e.code() == ErrorCode::Config) ? kConfig : kFail;
  } catch (const json::exception& e) {
    std::cerr << "itep " << ctx.subcommand << ": " << e.what() << '\n';
    return ctx.resolving ? kConfig : kFail;
  } catch (const std::exception& e) {
    std::cerr << "itep " << ctx.subcommand << ": " << e.what() << '\n';
    return kFail;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace itep::cli
