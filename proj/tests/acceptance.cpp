// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "finsler/fixtures.hpp"
#include "finsler/riemann.hpp"
#include "finsler/suites.hpp"

using namespace finsler;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double worst_check(const SuiteReport& r) {
  double w = 0.0;
  for (const auto& b : r.bundles)
    for (const auto& c : b.checks)
      if (!c.informational) w = std::max(w, c.max_abs);
  return w;
}

double weighted_ratio(const Fixture& fx, const FlagPoint& p) {
  const double F = eval_F_nav(fx.nav, p);
  return weighted_ricci(fx.metric(), fx.measure(), p) / (F * F);
}

// max over flags of |Ric_inf/F^2 - kappa|
double ric_inf_deviation(const Fixture& fx, double kappa, std::size_t count) {
  double w = 0.0;
  for (const auto& p : sample_flags(fx, count, kSeed))
    w = std::max(w, std::abs(weighted_ratio(fx, p) - kappa));
  return w;
}

// f_k S^k_0 + f_{:0k} W^k for navigation data with Killing W
double killing_f_condition(const Fixture& fx, const FlagPoint& p) {
  const int n = fx.dim;
  const auto t = navigation_terms(fx.nav, p.x);
  const auto H = hessian_matrix(h_metric(fx.nav), fx.f, p.x);
  const auto fj = fx.f(coordinate_jets(p.x, 1));
  double v = 0.0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      v += fj.partial({k}) * t.S_up[k * n + j] * p.y[j] + H[k * n + j] * p.y[k] * t.W[j];
  return v;
}

Outcome cigar_ricci_law() {
  const auto fx = cigar();
  const auto F = fx.metric();
  double w = 0.0;
  for (const auto& p : sample_flags(fx, 256, kSeed)) {
    const double Fv = eval_F(F, p);
    const double K = 2.0 / std::pow(std::cosh(p.x[0]), 2);
    w = std::max(w, std::abs(ricci(F, p) / (Fv * Fv) - K));
  }
  return {w <= 1e-7, fmt("max |Ric/F^2 - 2/cosh^2 t| = %.2e over 256 flags (tol 1e-7)", w)};
}

Outcome cigar_steady() {
  const auto fx = cigar();
  const double ric = ric_inf_deviation(fx, 0.0, 256);
  std::mt19937_64 rng(kSeed);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> ys(8, std::vector<double>(2));
  for (auto& y : ys)
    for (double& v : y) v = g(rng);
  double sigma = 0.0;
  const auto rd = fx.randers();
  for (const auto& p : sample_flags(fx, 256, kSeed))
    sigma = std::max(sigma, std::abs(fit_sigma_isotropic_S(rd, p.x, ys).sigma));
  return {ric <= 1e-7 && sigma <= 1e-8,
          fmt("max |Ric_inf/F^2| = %.2e (tol 1e-7), max |sigma_fit| = %.2e (tol 1e-8)", ric, sigma)};
}

Outcome cigar_flag_curvature() {
  const auto fx = cigar();
  const auto F = fx.metric();
  double dK = 0.0, an = 0.0;
  for (const auto& p : sample_flags(fx, 256, kSeed)) {
    const auto fit = flag_curvature_fit(F, p);
    dK = std::max(dK, std::abs(fit.K - 2.0 / std::pow(std::cosh(p.x[0]), 2)));
    an = std::max(an, fit.anisotropy);
  }
  return {dK <= 1e-7 && an <= 1e-6,
          fmt("max |K - 2/cosh^2 t| = %.2e (tol 1e-7), anisotropy = %.2e (tol 1e-6)", dK, an)};
}

Outcome shrinking_cylinder() {
  const auto fx = shrinking(2, 1.0);
  const double ric = ric_inf_deviation(fx, 2.0, 256);
  double killing = 0.0;
  const auto h = h_metric(fx.nav);
  for (const auto& p : sample_flags(fx, 256, kSeed))
    killing = std::max(killing,
                       frobenius_norm(conformal_residual(h, fx.nav.W, constant_scalar(0.0), p.x)));
  double constraint = 0.0;
  for (const auto& [name, r] : fx.constraints) constraint = std::max(constraint, r);
  return {ric <= 1e-6 && killing <= 1e-9 && constraint == 0.0,
          fmt("max |Ric_inf/F^2 - 2| = %.2e (tol 1e-6), Killing residual = %.2e (tol 1e-9), "
              "constraint residual = %.1e (exact)",
              ric, killing, constraint)};
}

Outcome expanding_cylinder() {
  const auto fx = expanding(2);
  const double ric = ric_inf_deviation(fx, -2.0, 256);
  double fc = 0.0;
  for (const auto& p : sample_flags(fx, 256, kSeed))
    fc = std::max(fc, std::abs(killing_f_condition(fx, p)));
  return {ric <= 1e-6 && fc <= 1e-8,
          fmt("max |Ric_inf/F^2 + 2| = %.2e (tol 1e-6), f-condition = %.2e (tol 1e-8)", ric, fc)};
}

Outcome gaussian_fixtures() {
  const double riem = ric_inf_deviation(gaussian_riemannian(1.0, 3), 1.0, 256);
  const double rand = ric_inf_deviation(gaussian(), 1.0, 256);
  return {riem <= 1e-8 && rand <= 1e-7,
          fmt("Riemannian max |Ric_inf/F^2 - 1| = %.2e (tol 1e-8), Randers W = Qx: %.2e (tol 1e-7)",
              riem, rand)};
}

Outcome suite_outcome(const char* suite, std::size_t count, double limit, const char* what) {
  const auto r = run_crosscheck(suite, {count, 7, 0.0, 1});
  const double w = worst_check(r);
  bool tol_ok = true;
  for (const auto& b : r.bundles)
    for (const auto& c : b.checks) tol_ok = tol_ok && c.tolerance <= limit;
  return {r.verdict == Verdict::Pass && tol_ok,
          fmt("%s: max residual %.2e over %zu samples (tol %.0e)", what, w, r.samples, limit)};
}

Outcome navigation_identities() {
  const auto r = run_crosscheck("navigation", {1000, 7, 0.0, 1});
  double trip = 0.0, ident = 0.0;
  for (const auto& b : r.bundles)
    for (const auto& c : b.checks) {
      double& slot = c.name.rfind("round-trip", 0) == 0 ? trip : ident;
      slot = std::max(slot, c.max_abs);
    }
  return {r.verdict == Verdict::Pass && trip <= 1e-12 && ident <= 1e-10 && r.samples >= 1000,
          fmt("round trip %.2e (tol 1e-12), norm and xi identities %.2e (tol 1e-10), %zu samples",
              trip, ident, r.samples)};
}

Outcome characterizations() {
  double worst_pass = 0.0, weakest_control = INFINITY;
  std::string problems;
  for (const auto& name : fixture_names()) {
    const auto fx = make_fixture(name);
    const auto r = verify_fixture(fx, {64, kSeed, 1e-6, DiffMode::Jet, 1});
    worst_pass = std::max(worst_pass, worst_check(r));
    if (r.verdict != Verdict::Pass) problems += " " + name;
    for (const char* field : {"f", "W", "kappa", "mu"}) {
      const auto bad = verify_fixture(perturbed(fx, {field, 1e-2}), {64, kSeed, 1e-6, DiffMode::Jet, 1});
      const double w = worst_check(bad);
      weakest_control = std::min(weakest_control, w);
      if (bad.verdict != Verdict::Fail || w < 1e-3) problems += " " + name + "+" + field;
    }
  }
  return {problems.empty(),
          fmt("%zu fixtures: worst residual %.2e (tol 1e-6); weakest negative control %.2e (needs >= 1e-3)%s",
              fixture_names().size(), worst_pass, weakest_control,
              problems.empty() ? "" : ("; offending:" + problems).c_str())};
}

Outcome differentiation_backbone() {
  const auto fd = run_crosscheck("jets-vs-fd", {50, 7, 0.0, 1});
  const auto poly = run_crosscheck("jets-polynomial", {50, 7, 0.0, 1});
  const double a = worst_check(fd), b = worst_check(poly);
  return {fd.verdict == Verdict::Pass && a <= 1e-4 && poly.verdict == Verdict::Pass && b <= 1e-12,
          fmt("jet vs fd %.2e over 50 flags (tol 1e-4), polynomial suite %.2e (tol 1e-12)", a, b)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"cigar Ricci law", cigar_ricci_law},
      {"cigar steady soliton", cigar_steady},
      {"cigar flag curvature", cigar_flag_curvature},
      {"shrinking cylinder", shrinking_cylinder},
      {"expanding warped cylinder", expanding_cylinder},
      {"gaussian fixtures", gaussian_fixtures},
      {"closed-form Randers Ricci vs spray trace",
       [] {
         return suite_outcome("randers-ricci", 100, 1e-8,
                              "100 metrics x 16 flags, |closed - generic| / F^2");
       }},
      {"navigation identities", navigation_identities},
      {"Lie derivative identities",
       [] { return suite_outcome("lie-identity", 200, 1e-9, "alpha/beta and navigation forms"); }},
      {"characterization bundles and negative controls", characterizations},
      {"differentiation backbone", differentiation_backbone},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
