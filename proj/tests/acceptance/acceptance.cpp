// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "itep/oracle_1d.hpp"
#include "itep/pencil_spectra.hpp"
#include "itep/resolvent_analysis.hpp"
#include "../support/generators.hpp"

using namespace itep;
using itep::testing::Gen;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kOracleRelTol = 1e-6;
constexpr double kOracleRadius = 200.0;
constexpr double kOracleRuntime = 60.0;  // seconds, criterion 1
constexpr int kOracleN = 96;
constexpr int kOracleRefN = 128;
constexpr double kChainTol = 1e-7;
constexpr double kSlopeTarget = -2.0;
constexpr double kSlopeTol = 0.15;
constexpr double kIdentityTol = 1e-9;
constexpr double kSpectrumGap = 0.1;
constexpr double kLaurentRelTol = 1e-7;
constexpr double kLaurentAngleTol = 1e-6;
constexpr double kNearPoleFactor = 10.0;
constexpr double kGrowthSlack = 0.1;
constexpr double kTorusTol = 1e-6;
constexpr long long kTorusCutoff = 4000000;
constexpr double kCompletenessTol = 0.1;
constexpr double kChainVectorTol = 1e-8;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

MediumProfile constant(PencilKind kind, double q) {
  MediumProfile p;
  p.kind = kind;
  p.q.data = {q};
  return p;
}

EigenSolution refined_eigen(const MediumProfile& prof, BoundaryPair bc, int n, int n_ref) {
  const DiscretePencil P = assemble_pencil(prof, make_grid(0, 1, n), bc);
  EigenOptions opt;
  opt.reference = std::make_shared<const DiscretePencil>(assemble_pencil(prof, make_grid(0, 1, n_ref), bc));
  return eigen(linearize(P), opt);
}

// Criteria 1 and 2: every discrete eigenvalue in the search rectangle is trusted and
// matches a root; multiplicities sum to the winding number.
Outcome oracle_agreement(const std::vector<BoundaryPair>& bcs) {
  const auto t0 = std::chrono::steady_clock::now();
  const SearchRect rect{-kOracleRadius - 0.3, kOracleRadius + 0.2, -kOracleRadius - 0.1, kOracleRadius + 0.4};
  bool ok = true;
  double worst = 0.0;
  int cases = 0;
  std::string why;
  for (PencilKind kind : {PencilKind::Helmholtz, PencilKind::Schrodinger})
    for (double q : {0.5, 1.0, 2.0})
      for (BoundaryPair bc : bcs) {
        ++cases;
        const std::string tag = to_string(kind) + " q=" + num(q) + " bc=(" + std::to_string(bc.m1) + "," +
                                std::to_string(bc.m2) + ")";
        const EigenSolution eig = refined_eigen(constant(kind, q), bc, kOracleN, kOracleRefN);
        const RootSearch s = search_roots({kind, q, 1.0, bc}, rect);
        int discrete = 0;
        for (const auto& c : eig.clusters) {
          const bool in_rect = c.lambda.real() >= s.rect.re_min && c.lambda.real() <= s.rect.re_max &&
                               c.lambda.imag() >= s.rect.im_min && c.lambda.imag() <= s.rect.im_max;
          if (!in_rect) continue;
          discrete += c.multiplicity;
          if (!c.trusted) {
            ok = false;
            why = tag + " untrusted eigenvalue at " + num(c.lambda.real()) + "+" + num(c.lambda.imag()) + "i";
            continue;
          }
          double best = std::numeric_limits<double>::infinity();
          for (const auto& r : s.roots) best = std::min(best, std::abs(r.lambda - c.lambda) / std::max(1.0, std::abs(r.lambda)));
          worst = std::max(worst, best);
          if (best > kOracleRelTol) {
            ok = false;
            why = tag + " unmatched eigenvalue";
          }
        }
        if (discrete != s.winding) {
          ok = false;
          why = tag + " count " + std::to_string(discrete) + " vs winding " + std::to_string(s.winding);
        }
      }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // The runtime budget is per criterion-1 sweep: six pencils for one boundary pair.
  const double budget = kOracleRuntime * static_cast<double>(bcs.size());
  if (secs > budget) {
    ok = false;
    why = "runtime " + num(secs) + " s over " + num(budget) + " s";
  }
  return {ok, std::to_string(cases) + " pencils, max rel error " + num(worst) + ", " + num(secs) + " s" +
                  (why.empty() ? "" : "; " + why)};
}

Outcome chain_equivalence() {
  Gen g(3003);
  bool ok = true;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int length = 1 + t % 3;
    const auto pl = itep::testing::planted_pencil(g, g.integer(length + 1, 8), length);
    const CompanionOperator comp = linearize(pl.pencil);
    const EigenSolution eig = eigen(comp);
    const EigenCluster* hit = nullptr;
    for (const auto& c : eig.clusters)
      if (std::abs(c.lambda - pl.lambda0) < 1e-4) hit = &c;
    if (!hit || hit->multiplicity != length || hit->chain_length() != length) {
      ok = false;
      continue;
    }
    const Eigen::Index n = pl.pencil.dim();
    for (const auto& jc : hit->jordan) {
      const KeldyshChain kc = keldysh_from_jordan(comp, pl.pencil, hit->lambda, jc);
      for (double r : verify_chain(pl.pencil, kc)) worst = std::max(worst, r);
      const JordanChain back = jordan_from_keldysh(pl.pencil, kc);
      if (back.size() != jc.size()) ok = false;
      for (std::size_t j = 0; ok && j < back.size(); ++j)
        if (back[j].head(n) != jc[j].head(n)) ok = false;
    }
  }
  ok = ok && worst <= kChainTol;
  return {ok, "50 planted pencils, max chain residual " + num(worst)};
}

Outcome ray_decay() {
  bool ok = true;
  double worst = 0.0;
  for (PencilKind kind : {PencilKind::Helmholtz, PencilKind::Schrodinger})
    for (double q : {0.5, 1.0, 2.0}) {
      const DiscretePencil P = assemble_pencil(constant(kind, q), make_grid(0, 1, 48), {0, 1});
      const auto poles = companion_eigenvalues(P, default_lambda_prime(P));
      for (double angle : {0.0, M_PI / 4, M_PI / 2, 3 * M_PI / 4}) {
        const RayScan s = ray_scan(P, std::polar(1.0, angle), log_radii(10.0, 1000.0, 25), poles);
        const double dev = std::abs(s.fitted_slope - kSlopeTarget);
        worst = std::max(worst, dev);
        ok = ok && dev <= kSlopeTol;
      }
    }
  return {ok, "24 rays, max |slope + 2| " + num(worst)};
}

Outcome block_inverse_identities() {
  Gen g(5005);
  bool ok = true;
  double worst = 0.0;
  int tested = 0;
  while (tested < 100) {
    const int n = g.integer(1, 16);
    const CMat A2 = CMat::Identity(n, n) + 0.3 * g.matrix(n, n) / std::sqrt(double(n));
    const DiscretePencil P = make_matrix_pencil(g.matrix(n, n), g.matrix(n, n), A2);
    const cplx l = g.in_disk(3.0), lp = g.in_disk(3.0);
    double gap = std::numeric_limits<double>::infinity();
    for (cplx z : companion_eigenvalues(P, 0.0)) gap = std::min({gap, std::abs(z - l), std::abs(z - lp)});
    if (gap < kSpectrumGap) continue;
    ++tested;
    const BlockInverseReport rep = companion_block_inverse_check(P, l);
    const double id = resolvent_identity_check(linearize(P), l, lp);
    worst = std::max({worst, rep.max_rel_error, id});
    ok = ok && rep.inequality_holds;
  }
  ok = ok && worst <= kIdentityTol;
  return {ok, "100 triples, max rel error " + num(worst)};
}

Outcome laurent_relations_check() {
  const MediumProfile prof = constant(PencilKind::Helmholtz, 1.0);
  const DiscretePencil P = assemble_pencil(prof, make_grid(0, 1, 48), {0, 1});
  EigenOptions opt;
  opt.reference = std::make_shared<const DiscretePencil>(assemble_pencil(prof, make_grid(0, 1, 80), {0, 1}));
  const EigenSolution eig = eigen(linearize(P), opt);
  std::vector<const EigenCluster*> trusted;
  for (const auto& c : eig.clusters)
    if (c.trusted) trusted.push_back(&c);
  std::sort(trusted.begin(), trusted.end(),
            [](const EigenCluster* a, const EigenCluster* b) { return std::abs(a->lambda) < std::abs(b->lambda); });
  if (trusted.size() < 3) return {false, "fewer than 3 trusted eigenvalues"};
  double rel = 0.0, angle = 0.0;
  for (int i = 0; i < 3; ++i) {
    const EigenCluster& c = *trusted[static_cast<std::size_t>(i)];
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& o : eig.clusters)
      if (&o != &c) gap = std::min(gap, std::abs(o.lambda - c.lambda));
    const LaurentData d = laurent_coefficients(P, c.lambda, 0.5 * gap, 3);
    for (double r : laurent_relations(P, d)) rel = std::max(rel, r);
    std::vector<CVec> vecs;
    for (const auto& ch : c.chains)
      for (const auto& v : ch.vectors) vecs.push_back(v);
    angle = std::max(angle, laurent_range_angle(P, d, vecs));
  }
  return {rel <= kLaurentRelTol && angle <= kLaurentAngleTol,
          "relations " + num(rel) + ", range angle " + num(angle)};
}

Outcome carleman() {
  const MediumProfile prof = constant(PencilKind::Helmholtz, 1.0);
  const DiscretePencil P = assemble_pencil(prof, make_grid(0, 1, 48), {0, 1});
  const CompanionOperator comp = linearize(P);
  EigenOptions opt;
  opt.reference = std::make_shared<const DiscretePencil>(assemble_pencil(prof, make_grid(0, 1, 80), {0, 1}));
  const EigenSolution eig = eigen(comp, opt);
  const double p = 0.5 * 1 + 0.5;  // n = 1
  const WeierstrassProduct wp = make_weierstrass(eig.trusted_eigenvalues(), eig.lambda_prime, p);
  const bool unit = phi_eval(wp, wp.lambda_prime) == cplx(1.0, 0.0);
  const std::vector<double> radii{10.0, 20.0, 40.0, 80.0, 160.0};
  bool cancel = true;
  double worst_ratio = 0.0;
  int probes = 0;
  for (double r : radii) {
    const CarlemanReport rep = carleman_check(comp, wp, r, 128);
    probes += rep.near_pole_samples;
    const double ratio = rep.near_pole_max / rep.median_lhs;
    worst_ratio = std::max(worst_ratio, ratio);
    cancel = cancel && ratio < kNearPoleFactor;
  }
  const GrowthFit fit = carleman_growth(comp, wp, radii, 128);
  const bool growth = fit.bounded || fit.exponent <= p + kGrowthSlack;
  return {unit && cancel && growth && probes > 0,
          std::string("phi(lambda') ") + (unit ? "= 1" : "!= 1") + ", near-pole/median " + num(worst_ratio) + " over " +
              std::to_string(probes) + " probes, exponent " + num(fit.exponent) + " (p = " + num(p) + ")"};
}

Outcome counting_bound() {
  const MediumProfile prof = constant(PencilKind::Helmholtz, 1.0);
  const DiscretePencil P = assemble_pencil(prof, make_grid(0, 1, 48), {0, 1});
  const CompanionOperator comp = linearize(P);
  EigenOptions opt;
  opt.reference = std::make_shared<const DiscretePencil>(assemble_pencil(prof, make_grid(0, 1, 80), {0, 1}));
  const EigenSolution eig = eigen(comp, opt);
  std::vector<double> ts;
  for (int i = 0; i <= 60; ++i) ts.push_back(std::pow(10.0, 0.05 * i));
  const CountingReport rep = counting(eig, eig.lambda_prime, 1.0, ts, &comp);
  bool pointwise = true;
  for (std::size_t i = 0; i < ts.size(); ++i) pointwise = pointwise && rep.counts[i] <= rep.discrete_bound[i];
  const TorusSum ts_sum = torus_embedding_sum(1, 1.0, kTorusCutoff);
  const double err = std::abs(ts_sum.partial - M_PI / std::tanh(M_PI));
  return {pointwise && rep.certified && err <= kTorusTol,
          std::to_string(ts.size()) + " t values, torus sum error " + num(err)};
}

Outcome completeness() {
  const MediumProfile prof = constant(PencilKind::Helmholtz, 1.0);
  const DiscretePencil P = assemble_pencil(prof, make_grid(0, 1, 48), {0, 1});
  EigenOptions opt;
  opt.reference = std::make_shared<const DiscretePencil>(assemble_pencil(prof, make_grid(0, 1, 80), {0, 1}));
  const EigenSolution eig = eigen(linearize(P), opt);
  int M = 0;
  for (const auto& c : eig.clusters) M += c.trusted;
  if (M == 0) return {false, "no trusted eigenvalues"};
  bool monotone = true;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const CVec f = completeness_sample(P, 9000 + s);
    double prev = std::numeric_limits<double>::infinity();
    for (int m = 1; m <= M; ++m) {
      const double r = completeness_residual(eig, P, f, m).residual;
      if (r > prev * (1.0 + 1e-12)) monotone = false;
      prev = r;
    }
    worst = std::max(worst, prev);
  }
  double chain = 0.0;
  for (const auto& c : eig.clusters)
    if (c.trusted)
      for (const auto& kc : c.chains)
        for (const auto& v : kc.vectors) chain = std::max(chain, completeness_residual(eig, P, v, M).residual);
  return {worst < kCompletenessTol && monotone && chain <= kChainVectorTol,
          std::to_string(M) + " trusted, max residual " + num(worst) + (monotone ? ", nonincreasing" : ", not monotone") +
              ", chain vectors " + num(chain)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Exit code, captured stdout and every file written, keyed by name.
std::map<std::string, std::string> cli_run(const std::string& sub, const fs::path& config, const fs::path& out) {
  fs::remove_all(out);
  fs::create_directories(out);
  const fs::path log = out.string() + ".stdout";
  const std::string cmd = std::string("\"") + ITEP_CLI_PATH + "\" " + sub + " --config \"" + config.string() +
                          "\" --out \"" + out.string() + "\" > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  std::map<std::string, std::string> files;
  files["<status>"] = std::to_string(status);
  files["<stdout>"] = slurp(log);
  for (const auto& e : fs::directory_iterator(out)) files[e.path().filename().string()] = slurp(e.path());
  return files;
}

Outcome determinism() {
  const std::vector<std::string> subs{"check-ellipticity", "spectrum",     "resolvent-scan", "counting",
                                      "completeness",      "oracle",       "laurent"};
  const fs::path work = fs::temp_directory_path() / "itep_acceptance";
  int runs = 0, differing = 0;
  std::string first;
  std::vector<fs::path> fixtures;
  for (const auto& e : fs::directory_iterator(ITEP_FIXTURE_DIR))
    if (e.path().extension() == ".json") fixtures.push_back(e.path());
  std::sort(fixtures.begin(), fixtures.end());
  for (const auto& fx : fixtures)
    for (const auto& sub : subs) {
      const auto a = cli_run(sub, fx, work / "a");
      const auto b = cli_run(sub, fx, work / "b");
      ++runs;
      if (a != b) {
        ++differing;
        if (first.empty()) first = fx.filename().string() + " " + sub;
      }
    }
  fs::remove_all(work);
  return {differing == 0 && runs > 0, std::to_string(runs) + " fixture/subcommand pairs run twice" +
                                          (first.empty() ? "" : ", first difference: " + first)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle agreement, bc (0,1)", [] { return oracle_agreement({{0, 1}}); }},
      {"oracle agreement, bc (0,2) (1,3) (2,3)", [] { return oracle_agreement({{0, 2}, {1, 3}, {2, 3}}); }},
      {"Jordan/Keldysh chain equivalence", chain_equivalence},
      {"resolvent ray decay", ray_decay},
      {"block-inverse and resolvent identities", block_inverse_identities},
      {"Laurent relations", laurent_relations_check},
      {"Carleman bound and growth", carleman},
      {"counting bound and torus sum", counting_bound},
      {"completeness harness", completeness},
      {"CLI determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
