#include "finsler/suites.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "finsler/parallel.hpp"

namespace finsler {

namespace {

using Row = std::vector<IdentityResidual>;

struct CheckDef {
  std::string name;
  std::string formula;
  double tol;
};

// Rows hold one residual per check definition, in order.
CheckBundle assemble(std::string name, const std::vector<CheckDef>& defs,
                     const std::vector<Row>& rows) {
  CheckBundle b;
  b.name = std::move(name);
  for (std::size_t c = 0; c < defs.size(); ++c) {
    ResidualAccumulator acc(defs[c].name, defs[c].formula, defs[c].tol);
    for (const auto& r : rows) acc.add(r.at(c));
    b.checks.push_back(acc.finish());
  }
  b.verdict = combine(b.checks);
  return b;
}

// The same flag-level wrapping as the soliton bundles: any failure names the flag.
template <class Fn>
std::vector<Row> per_flag(const std::vector<FlagPoint>& flags, int workers, Fn fn) {
  return parallel_map(flags.size(), workers, [&](std::size_t k) {
    const FlagPoint& p = flags[k];
    try {
      return fn(p);
    } catch (const EvaluationError&) {
      throw;
    } catch (const std::exception& e) {
      throw EvaluationError(std::string(e.what()) + " [flag " + describe(p) + "]");
    }
  });
}

Verdict overall(const std::vector<CheckBundle>& bundles) {
  bool any_pass = false;
  for (const auto& b : bundles) {
    if (b.verdict == Verdict::Fail) return Verdict::Fail;
    if (b.verdict == Verdict::Pass) any_pass = true;
  }
  return any_pass ? Verdict::Pass : Verdict::NotApplicable;
}

std::vector<std::vector<double>> directions(std::mt19937_64& rng, int n, int count) {
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> out;
  while (static_cast<int>(out.size()) < count) {
    std::vector<double> y(n);
    double s = 0.0;
    for (auto& v : y) {
      v = g(rng);
      s += v * v;
    }
    if (s > 1e-6) out.push_back(std::move(y));
  }
  return out;
}

ScalarField constant(double c) { return constant_scalar(c); }

CheckBundle fixture_checks(const Fixture& fx, const std::vector<FlagPoint>& flags,
                           const VerifyOptions& opt) {
  const int n = fx.dim;
  const FinslerMetric F = fx.metric();
  const MeasureSpec m = fx.measure();
  const MeasureSpec bh = busemann_hausdorff(fx.nav);
  const RandersData rd = fx.randers();
  const ScalarField kappa = constant(fx.expected.kappa);
  const bool law = static_cast<bool>(fx.expected.flag_curvature);
  const bool with_V = fx.V && fx.expected.kappa_V;

  std::vector<CheckDef> defs{
      {"ric-infinity", "Ric_inf = kappa F^2", opt.tol},
      {"s-curvature", "S_BH = (n+1) sigma F", opt.tol},
      {"sigma-fit", "least-squares sigma in e_00 = 2 sigma (alpha^2 - beta^2)", opt.tol},
      {"sigma-fit-residual", "max |e_00 - 2 sigma (alpha^2 - beta^2)| / alpha^2", opt.tol},
  };
  if (law) {
    defs.push_back({"ricci-law", "Ric = (n-1) K(x) F^2", opt.tol});
    defs.push_back({"flag-curvature", "fitted K = K(x)", opt.tol});
    defs.push_back({"flag-anisotropy", "R^i_k = K (F^2 delta^i_k - F F_{y^k} y^i)", opt.tol});
  }
  if (with_V) defs.push_back({"soliton-equation", "2 Ric + L_V(F^2) = 2 kappa_V F^2", opt.tol});

  // the direction set for the sigma fit is fixed per run
  std::mt19937_64 rng(opt.seed ^ 0x5eedULL);
  const auto ys = directions(rng, n, n * (n + 1) / 2 + 3);

  auto rows = per_flag(flags, opt.workers, [&](const FlagPoint& p) {
    Row r;
    double ric = 0.0, S = 0.0;
    const double Fv = eval_F(F, p);
    const double F2 = Fv * Fv;
    // Ric_inf/F^2 against kappa, so that max_rel is meaningful
    r.push_back({"", gradient_soliton_residual(F, m, kappa, p, opt.mode) + fx.expected.kappa,
                 fx.expected.kappa, 1.0});
    if (opt.mode == DiffMode::Jet) {
      S = s_curvature(F, bh, p);
    } else {
      const auto pipe = fd::evaluate(F, bh, p);
      S = pipe.S;
      ric = pipe.ricci;
    }
    r.push_back({"", S, (n + 1.0) * fx.expected.sigma * Fv, Fv});
    const auto fit = fit_sigma_isotropic_S(rd, p.x, ys);
    r.push_back({"", fit.sigma, fx.expected.sigma, 1.0});
    r.push_back({"", fit.residual, 0.0, 1.0});
    if (law) {
      const double K = fx.expected.flag_curvature(p.x);
      const auto cb = curvature_bundle(F, p);
      if (opt.mode == DiffMode::Jet) ric = cb.ricci;
      r.push_back({"", ric / F2, (n - 1.0) * K, 1.0});
      const auto kf = flag_curvature_fit(cb, p.y);
      r.push_back({"", kf.K, K, 1.0});
      r.push_back({"", kf.anisotropy, 0.0, 1.0});
    }
    if (with_V)
      r.push_back({"", almost_soliton_residual(F, *fx.V, constant(*fx.expected.kappa_V), p), 0.0,
                   1.0});
    return r;
  });

  auto b = assemble("fixture", defs, rows);
  for (const auto& [identity, residual] : fx.constraints) {
    ResidualAccumulator acc("constraint", identity, 1e-12);
    acc.add(residual, 0.0);
    b.checks.push_back(acc.finish());
  }
  b.verdict = combine(b.checks);
  b.note = fx.summary + "; domain " + fx.domain;
  return b;
}

}  // namespace

SuiteReport verify_fixture(const Fixture& fx, const VerifyOptions& opt) {
  if (opt.samples < 1) throw std::invalid_argument("samples must be at least 1");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const auto flags = sample_flags(fx, opt.samples, opt.seed);
  SuiteReport rep;
  rep.subject = fx.name;
  rep.seed = opt.seed;
  rep.samples = opt.samples;
  rep.bundles.push_back(fixture_checks(fx, flags, opt));

  BundleOptions bo{opt.tol, opt.workers};
  SolitonScalars grad{constant(fx.expected.kappa), constant(fx.expected.sigma), {},
                      constant(fx.expected.mu)};
  const RandersData rd = fx.randers();
  rep.bundles.push_back(randers_gradient_characterization(rd, fx.f, {grad.kappa, grad.sigma, {}, {}},
                                                          flags, bo));
  rep.bundles.push_back(navigation_gradient_characterization(fx.nav, fx.f, grad, flags, bo));
  if (fx.V && fx.expected.kappa_V) {
    SolitonScalars vs{constant(*fx.expected.kappa_V), constant(fx.expected.sigma), {}, {}};
    rep.bundles.push_back(alpha_beta_characterization(rd, *fx.V, vs, flags, bo));
    if (fx.expected.mu_einstein) {
      vs.mu = constant(*fx.expected.mu_einstein);
      rep.bundles.push_back(navigation_characterization(fx.nav, *fx.V, vs, flags, bo));
    }
  }
  rep.verdict = overall(rep.bundles);
  return rep;
}

namespace {

std::vector<FlagPoint> random_flags(std::mt19937_64& rng, int n, double box, int count) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<FlagPoint> out;
  while (static_cast<int>(out.size()) < count) {
    FlagPoint p;
    double y2 = 0.0;
    for (int i = 0; i < n; ++i) {
      p.x.push_back(box * u(rng));
      p.y.push_back(u(rng));
      y2 += p.y.back() * p.y.back();
    }
    if (y2 > 1e-4) out.push_back(std::move(p));
  }
  return out;
}

// a random quadratic weight c0 + c.x + x^T A x
ScalarField random_weight(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const double c0 = u(rng);
  std::vector<double> c(n), A(n * n);
  for (auto& v : c) v = u(rng);
  for (auto& v : A) v = u(rng);
  return ScalarField::from([n, c0, c, A](auto x) {
    auto s = constant_like(x[0], c0);
    for (int i = 0; i < n; ++i) {
      s += c[i] * x[i];
      for (int j = 0; j < n; ++j) s += A[i * n + j] * x[i] * x[j];
    }
    return s;
  });
}

// Work items carry their own data so they can be evaluated in any order.
template <class Item, class Fn>
std::vector<Row> over_items(const std::vector<Item>& items, int workers, Fn fn) {
  return parallel_map(items.size(), workers, [&](std::size_t k) {
    try {
      return fn(items[k]);
    } catch (const EvaluationError&) {
      throw;
    } catch (const std::exception& e) {
      throw EvaluationError(std::string(e.what()) + " [flag " + describe(items[k].p) + "]");
    }
  });
}

double pick_tol(const CrosscheckOptions& opt, double own) { return opt.tol > 0.0 ? opt.tol : own; }

IdentityResidual worst_of(const std::vector<double>& a, const std::vector<double>& b,
                          double scale) {
  IdentityResidual r{"", 0.0, 0.0, scale};
  double best = -1.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a[k] - b[k]) > best) {
      best = std::abs(a[k] - b[k]);
      r.lhs = a[k];
      r.rhs = b[k];
    }
  return r;
}

struct RandersItem {
  RandersData rd;
  VectorFieldSpec V;
  ScalarField f;
  FlagPoint p;
};

std::vector<RandersItem> randers_items(std::mt19937_64& rng, std::size_t metrics, int per_metric,
                                       int n) {
  std::vector<RandersItem> items;
  for (std::size_t k = 0; k < metrics; ++k) {
    const auto rd = random_randers(rng, n);
    const auto V = random_vector_field(rng, n, 0.5);
    const auto f = random_weight(rng, n);
    for (auto& p : random_flags(rng, n, 0.8, per_metric)) items.push_back({rd, V, f, std::move(p)});
  }
  return items;
}

struct ConformalItem {
  ConformalNavigation conf;
  ScalarField f;
  double mu;
  FlagPoint p;
};

std::vector<ConformalItem> conformal_items(std::mt19937_64& rng, std::size_t count, int n) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<ConformalItem> items;
  for (std::size_t k = 0; k < count; ++k) {
    auto conf = random_conformal_navigation(rng, n, 1.0);
    auto f = random_weight(rng, n);
    const double mu = u(rng);
    auto flags = random_flags(rng, n, 0.6, 1);
    items.push_back({std::move(conf), std::move(f), mu, std::move(flags[0])});
  }
  return items;
}

// d^m x^alpha at x, by the power rule
double monomial_derivative(const std::vector<int>& alpha, const std::vector<int>& m,
                           const std::vector<double>& x) {
  double v = 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (m[i] > alpha[i]) return 0.0;
    for (int k = 0; k < m[i]; ++k) v *= alpha[i] - k;
    v *= std::pow(x[i], alpha[i] - m[i]);
  }
  return v;
}

SuiteReport finish(const std::string& name, const CrosscheckOptions& opt, std::size_t samples,
                   CheckBundle b) {
  SuiteReport rep;
  rep.subject = name;
  rep.seed = opt.seed;
  rep.samples = samples;
  rep.bundles.push_back(std::move(b));
  rep.verdict = overall(rep.bundles);
  return rep;
}

}  // namespace

std::vector<SuiteInfo> crosscheck_suites() {
  return {
      {"randers-ricci", "closed-form Randers Ricci vs the generic spray trace, 16 flags per metric",
       1e-8},
      {"lie-identity", "L_V(F^2) generic vs the alpha/beta and navigation closed forms", 1e-9},
      {"navigation", "(a,b) <-> (h,W) round trip, h^2 - 2 F W_0 = lambda F^2, h(xi, xi) = F^2",
       1e-10},
      {"isotropic-s", "tensor identities implied by e_00 = 2 sigma (alpha^2 - beta^2)", 1e-10},
      {"ricci-identity", "navigation Ricci relation for conformal W", 1e-9},
      {"sdot-closed-form", "S_dot closed form and s identities for conformal W", 1e-9},
      {"jets-vs-fd", "jet vs finite-difference curvature pipeline", 1e-4},
      {"jets-polynomial", "jet derivatives of random quartic polynomials vs the power rule", 1e-12},
  };
}

SuiteReport run_crosscheck(const std::string& suite, const CrosscheckOptions& opt) {
  if (opt.count < 1) throw std::invalid_argument("count must be at least 1");
  double own = -1.0;
  for (const auto& s : crosscheck_suites())
    if (s.name == suite) own = s.tol;
  if (own < 0.0) throw std::out_of_range("unknown crosscheck suite '" + suite + "'");
  const double tol = pick_tol(opt, own);
  std::mt19937_64 rng(opt.seed);

  if (suite == "randers-ricci") {
    const auto items = randers_items(rng, opt.count, 16, 3);
    const auto rows = over_items(items, opt.workers, [](const RandersItem& it) {
      const double F = eval_F(it.rd, it.p);
      return Row{{"", ricci(finsler_metric(it.rd), it.p), randers_ricci_closed_form(it.rd, it.p),
                  F * F}};
    });
    return finish(suite, opt, items.size(),
                  assemble(suite, {{"randers-ricci", "Ric = Ric_alpha + 2 alpha s^i_{0;i} - 2 t_00"
                                                     " - alpha^2 t^i_i + (n-1) Xi", tol}},
                           rows));
  }
  if (suite == "lie-identity") {
    const auto items = randers_items(rng, opt.count, 1, 3);
    const auto rows = over_items(items, opt.workers, [](const RandersItem& it) {
      return Row{lie_randers_identity(it.rd, it.V, it.p),
                 lie_navigation_identity(to_navigation(it.rd), it.V, it.p)};
    });
    return finish(suite, opt, items.size(),
                  assemble(suite,
                           {{"lie-alpha-beta", "L_V(F^2) = (F/alpha) L_V(alpha^2) + 2 F L_V(beta)", tol},
                            {"lie-navigation", "L_V(F^2) = 2/(F + W~_0){F V~_{0:0}"
                                               " + F^2 (V_{j:k} W^k - W_{j:k} V^k) xi^j}", tol}},
                           rows));
  }
  if (suite == "navigation") {
    const auto items = randers_items(rng, (opt.count + 9) / 10, 10, 3);
    const auto rows = over_items(items, opt.workers, [](const RandersItem& it) {
      const auto nav = to_navigation(it.rd);
      const auto back = from_navigation(nav);
      const std::span<const double> x(it.p.x);
      return Row{worst_of(it.rd.a(x), back.a(x), 1.0), worst_of(it.rd.b(x), back.b(x), 1.0),
                 navigation_norm_identity(nav, it.p), navigation_xi_identity(nav, it.p)};
    });
    return finish(suite, opt, items.size(),
                  assemble(suite,
                           {{"round-trip-a", "a -> (h, W) -> a", std::min(tol, 1e-12)},
                            {"round-trip-b", "b -> (h, W) -> b", std::min(tol, 1e-12)},
                            {"norm-identity", "h^2 - 2 F W_0 = lambda F^2", tol},
                            {"xi-identity", "h(x, y - F W) = F(x, y)", tol}},
                           rows));
  }
  if (suite == "isotropic-s") {
    const auto items = conformal_items(rng, opt.count, 3);
    std::vector<CheckDef> defs;
    const auto rows = over_items(items, opt.workers, [](const ConformalItem& it) {
      const auto res = isotropic_s_identities(from_navigation(it.conf.nav), it.p, &it.conf.sigma);
      Row r{{"", res.hypothesis_residual, 0.0, 1.0}};
      for (const auto& x : res.residuals) r.push_back(x);
      return r;
    });
    defs.push_back({"hypothesis", "e_ij = 2 sigma (a_ij - b_i b_j)", tol});
    for (std::size_t k = 1; k < rows.at(0).size(); ++k)
      defs.push_back({"identity-" + std::to_string(k), rows[0][k].name, tol});
    return finish(suite, opt, items.size(), assemble(suite, defs, rows));
  }
  if (suite == "ricci-identity") {
    const auto items = conformal_items(rng, opt.count, 3);
    const auto rows = over_items(items, opt.workers, [](const ConformalItem& it) {
      return Row{navigation_ricci_identity(it.conf.nav, it.p, it.mu)};
    });
    return finish(suite, opt, items.size(),
                  assemble(suite, {{"navigation-ricci", rows.at(0)[0].name, tol}}, rows));
  }
  if (suite == "sdot-closed-form") {
    const auto items = conformal_items(rng, opt.count, 3);
    const auto rows = over_items(items, opt.workers, [](const ConformalItem& it) {
      Row r{navigation_sdot_identity(it.conf.nav, it.f, it.p)};
      for (auto& x : navigation_s_identities(it.conf.nav, it.p)) r.push_back(x);
      return r;
    });
    return finish(suite, opt, items.size(),
                  assemble(suite,
                           {{"s-dot", rows.at(0)[0].name, tol},
                            {"s0", rows[0][1].name, tol},
                            {"s-mixed", rows[0][2].name, tol}},
                           rows));
  }
  if (suite == "jets-vs-fd") {
    const auto items = randers_items(rng, opt.count, 1, 3);
    const auto rows = over_items(items, opt.workers, [](const RandersItem& it) {
      const auto F = finsler_metric(it.rd);
      const auto m = MeasureSpec::weighted(busemann_hausdorff(it.rd), it.f);
      const auto jet = measured_bundle(F, m, it.p);
      const auto num = fd::evaluate(F, m, it.p);
      const double Fv = jet.curvature.F, F2 = Fv * Fv;
      return Row{worst_of(jet.curvature.spray, num.spray, F2),
                 worst_of(jet.curvature.riemann, num.riemann, F2),
                 {"", jet.curvature.ricci, num.ricci, F2},
                 {"", jet.S, num.S, Fv},
                 {"", jet.S_dot, num.S_dot, F2}};
    });
    return finish(suite, opt, items.size(),
                  assemble(suite,
                           {{"spray", "G^i jet vs fd", tol},
                            {"riemann", "R^i_k jet vs fd", tol},
                            {"ricci", "Ric jet vs fd", tol},
                            {"s-curvature", "S jet vs fd", tol},
                            {"s-dot", "S_dot jet vs fd", tol}},
                           rows));
  }
  // jets-polynomial
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> e(0, 2);
  std::vector<Row> rows;
  for (std::size_t k = 0; k < opt.count; ++k) {
    const int n = 3;
    std::vector<std::pair<double, std::vector<int>>> terms;
    for (int t = 0; t < 6; ++t) {
      std::vector<int> a(n);
      int deg = 0;
      for (auto& v : a) {
        v = e(rng);
        deg += v;
      }
      if (deg > kMaxJetOrder) a[0] = std::max(0, a[0] - (deg - kMaxJetOrder));
      terms.push_back({u(rng), a});
    }
    std::vector<double> x{u(rng), u(rng), u(rng)};
    const auto X = coordinate_jets(x, kMaxJetOrder);
    Jet P(X[0].space(), 0.0);
    for (const auto& [c, a] : terms) {
      Jet mono(X[0].space(), c);
      for (int i = 0; i < n; ++i)
        for (int r = 0; r < a[i]; ++r) mono *= X[i];
      P += mono;
    }
    double worst = 0.0, lhs = 0.0, rhs = 0.0;
    const auto& space = X[0].space();
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
      const auto ex = space.exponents(idx);
      const std::vector<int> m(ex.begin(), ex.end());
      double exact = 0.0;
      for (const auto& [c, a] : terms) exact += c * monomial_derivative(a, m, x);
      const double got = P.derivative(ex);
      if (std::abs(got - exact) / std::max(1.0, std::abs(exact)) > worst) {
        worst = std::abs(got - exact) / std::max(1.0, std::abs(exact));
        lhs = got;
        rhs = exact;
      }
    }
    rows.push_back(Row{{"", lhs, rhs, std::max(1.0, std::abs(rhs))}});
  }
  return finish(suite, opt, rows.size(),
                assemble(suite, {{"polynomial", "d^m P from jets = d^m P by the power rule", tol}},
                         rows));
}

}  // namespace finsler
