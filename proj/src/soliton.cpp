#include "finsler/soliton.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "finsler/parallel.hpp"

namespace finsler {

namespace {

struct Local {
  double value = 0.0;
  std::vector<double> grad;
};

Local local(const ScalarField& f, std::span<const double> x) {
  const Jet j = f(coordinate_jets(x, 1));
  Local out{j.value(), {}};
  for (std::size_t i = 0; i < x.size(); ++i) out.grad.push_back(j.partial({static_cast<int>(i)}));
  return out;
}

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double bilinear(std::span<const double> m, std::span<const double> u, std::span<const double> v) {
  const std::size_t n = u.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s += m[i * n + j] * u[i] * v[j];
  return s;
}

double trace_with(std::span<const double> inv, std::span<const double> m) {
  double s = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) s += inv[k] * m[k];  // both symmetric
  return s;
}

// V_i = g_ij V^j as a field
ArrayField lowered(const ArrayField& g, const VectorFieldSpec& V, int n) {
  return ArrayField::from([g, V, n](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    const std::vector<T> m = g(x);
    const std::vector<T> v = V(x);
    std::vector<T> out;
    for (int i = 0; i < n; ++i) {
      T s = m[i * n] * v[0];
      for (int j = 1; j < n; ++j) s += m[i * n + j] * v[j];
      out.push_back(std::move(s));
    }
    return out;
  });
}

struct Check {
  std::string name;
  bool informational = false;
};

using FlagChecks = std::vector<IdentityResidual>;

template <class Fn>
CheckBundle run_bundle(std::string name, const std::vector<Check>& checks,
                       const std::vector<FlagPoint>& samples, const BundleOptions& opt,
                       const std::map<std::size_t, std::string>& notes, Fn per_flag) {
  const auto rows = parallel_map(samples.size(), opt.workers, [&](std::size_t k) {
    const FlagPoint& p = samples[k];
    try {
      p.validate();
      return per_flag(p);
    } catch (const EvaluationError&) {
      throw;
    } catch (const std::exception& e) {
      throw EvaluationError(std::string(e.what()) + " [flag " + describe(p) + "]");
    }
  });
  CheckBundle b;
  b.name = std::move(name);
  for (std::size_t c = 0; c < checks.size(); ++c) {
    ResidualAccumulator acc(checks[c].name, rows.empty() ? "" : rows[0].at(c).name, opt.tol);
    for (const auto& r : rows) acc.add(r.at(c));
    acc.set_informational(checks[c].informational);
    if (auto it = notes.find(c); it != notes.end()) acc.set_note(it->second);
    b.checks.push_back(acc.finish());
  }
  b.verdict = combine(b.checks);
  return b;
}

CheckBundle not_applicable(std::string name, const std::vector<Check>& checks, double tol,
                           const std::string& why) {
  CheckBundle b;
  b.name = std::move(name);
  for (const auto& c : checks) {
    ResidualAccumulator acc(c.name, "", tol);
    acc.set_informational(c.informational);
    acc.not_applicable(why);
    b.checks.push_back(acc.finish());
  }
  b.note = why;
  b.verdict = Verdict::NotApplicable;
  return b;
}

bool vanishes_on(const ArrayField& field, const std::vector<FlagPoint>& samples) {
  for (const auto& p : samples)
    for (double v : field(std::span<const double>(p.x)))
      if (std::abs(v) > 1e-12) return false;
  return true;
}

void require_kappa(const SolitonScalars& s) {
  if (!s.kappa) throw std::invalid_argument("a soliton scalar kappa is required");
}

}  // namespace

double almost_soliton_residual(const FinslerMetric& F, const VectorFieldSpec& V,
                               const ScalarField& kappa, const FlagPoint& p) {
  p.validate();
  const auto b = curvature_bundle(F, p);
  const double k = kappa(std::span<const double>(p.x));
  const double F2 = b.F * b.F;
  return (2.0 * b.ricci + lie_F2(F, V, p) - 2.0 * k * F2) / F2;
}

double gradient_soliton_residual(const FinslerMetric& F, const MeasureSpec& m,
                                 const ScalarField& kappa, const FlagPoint& p, DiffMode mode) {
  p.validate();
  const double k = kappa(std::span<const double>(p.x));
  const double Fv = eval_F(F, p);
  double ric_inf = 0.0;
  if (mode == DiffMode::Jet) {
    ric_inf = weighted_ricci(F, m, p);
  } else {
    const auto pipe = fd::evaluate(F, m, p);
    ric_inf = pipe.ricci + pipe.S_dot;
  }
  return (ric_inf - k * Fv * Fv) / (Fv * Fv);
}

CheckBundle alpha_beta_characterization(const RandersData& rd, const VectorFieldSpec& V,
                                        const SolitonScalars& s,
                                        const std::vector<FlagPoint>& samples,
                                        const BundleOptions& opt) {
  require_kappa(s);
  const std::vector<Check> checks{{"alpha-conformal"},   {"isotropic-e00"},
                                  {"alpha-ricci"},       {"sigma-derivative"},
                                  {"s-divergence"},      {"soliton-equation"}};
  const std::string name = "alpha-beta";
  if (vanishes_on(rd.b, samples))
    return not_applicable(name, checks, opt.tol, "beta vanishes on the samples");

  const int n = rd.dim;
  const RiemannMetric alpha = alpha_metric(rd);
  const ArrayField V_low = lowered(rd.a, V, n);
  const FinslerMetric Fm = finsler_metric(rd);
  std::map<std::size_t, std::string> notes;
  if (!s.c) notes[0] = "c fitted from the trace";
  if (!s.sigma) notes[1] = "sigma fitted from the trace";

  return run_bundle(name, checks, samples, opt, notes, [&](const FlagPoint& p) {
    const auto d = beta_derivatives(rd, p);
    const auto& y = p.y;
    const double al = d.alpha, be = d.beta, a2 = al * al, F = al + be, nm1 = n - 1.0;
    const double kappa = s.kappa(std::span<const double>(p.x));

    const auto dV = covariant_derivative_1form(alpha, V_low, p.x);
    std::vector<double> L(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) L[i * n + j] = dV[i * n + j] + dV[j * n + i];
    const double c = s.c ? s.c(std::span<const double>(p.x)) : trace_with(d.a_inv, L) / (4.0 * n);

    const Local sg = s.sigma ? local(s.sigma, p.x) : Local{d.sigma_trace, d.sigma_grad};
    const double sigma = sg.value, s0g = dot(sg.grad, y);
    const double Lb = lie_beta(rd, V, p);

    FlagChecks out;
    out.push_back({"V_{i;j} + V_{j;i} = 4 c a_ij", quadratic_form(L, y), 4.0 * c * a2, F * F});
    out.push_back({"e_00 = 2 sigma (alpha^2 - beta^2)", d.e00, 2.0 * sigma * (a2 - be * be), F * F});
    out.push_back({"Ric_alpha = (kappa - 2c)(alpha^2 + beta^2) + t^i_i alpha^2 + 2 t_00"
                   " - (n-1) sigma^2 (3 alpha^2 - beta^2) + 2(n-1) sigma_0 beta"
                   " - (n-1)(s_0^2 + s_{0;0})",
                   d.alpha_ricci,
                   (kappa - 2.0 * c) * (a2 + be * be) + d.t_trace * a2 + 2.0 * d.t00 -
                       nm1 * sigma * sigma * (3.0 * a2 - be * be) + 2.0 * nm1 * s0g * be -
                       nm1 * (d.s0 * d.s0 + d.s0_0),
                   F * F});
    out.push_back({"3(n-1) sigma_0 = 2 c beta - L_V(beta)", 3.0 * nm1 * s0g, 2.0 * c * be - Lb, F});
    out.push_back({"s^i_{0;i} = (kappa - c) beta + (n-1)(sigma_0/2 + t_0 + 2 sigma s_0 + sigma^2 beta)"
                   " - L_V(beta)/2",
                   d.s_i0_i,
                   (kappa - c) * be +
                       nm1 * (0.5 * s0g + d.t0 + 2.0 * sigma * d.s0 + sigma * sigma * be) - 0.5 * Lb,
                   F});
    out.push_back({"2 Ric + L_V(F^2) = 2 kappa F^2", almost_soliton_residual(Fm, V, s.kappa, p), 0.0,
                   1.0});
    return out;
  });
}

CheckBundle navigation_characterization(const NavigationData& nav, const VectorFieldSpec& V,
                                        const SolitonScalars& s,
                                        const std::vector<FlagPoint>& samples,
                                        const BundleOptions& opt) {
  require_kappa(s);
  const std::vector<Check> checks{{"h-einstein"},    {"W-conformal"}, {"lie-h2"},
                                  {"lie-W0"},        {"soliton-equation"}};
  const std::string name = "navigation";
  if (vanishes_on(nav.W, samples))
    return not_applicable(name, checks, opt.tol, "W vanishes on the samples");

  const int n = nav.dim;
  const RiemannMetric h = h_metric(nav);
  const FinslerMetric Fm = finsler_metric(nav);
  std::map<std::size_t, std::string> notes;
  if (!s.mu) notes[0] = "mu fitted from the trace";
  if (!s.sigma) notes[1] = "sigma fitted from the trace";

  return run_bundle(name, checks, samples, opt, notes, [&](const FlagPoint& p) {
    const auto t = navigation_terms(nav, p.x);
    const auto& y = p.y;
    const double nm1 = n - 1.0;
    const double kappa = s.kappa(std::span<const double>(p.x));
    const auto ric = ricci_tensor(h, p.x);
    const double mu = s.mu ? s.mu(std::span<const double>(p.x)) : trace_with(t.h_inv, ric) / n;
    const Local sg = s.sigma ? local(s.sigma, p.x) : Local{t.sigma_trace, t.sigma_grad};
    const double sigma = sg.value, s0g = dot(sg.grad, y), sW = dot(sg.grad, t.W);
    const double h2 = quadratic_form(t.h, y), hn = std::sqrt(h2), W0 = dot(t.W_low, y);
    const double c = kappa - mu + nm1 * sigma * sigma + 2.0 * nm1 * sW;

    FlagChecks out;
    out.push_back({"Ric_h = mu h^2", quadratic_form(ric, y), mu * h2, h2});
    out.push_back({"W_{i:j} + W_{j:i} = -4 sigma h_ij", 2.0 * quadratic_form(t.R, y),
                   -4.0 * sigma * h2, h2});
    out.push_back({"L_V(h^2) = 2c h^2 - 6(n-1){(sigma_i W^i) h^2 + sigma_0 W_0}",
                   lie_h2(h, V, p.x, y), 2.0 * c * h2 - 6.0 * nm1 * (sW * h2 + s0g * W0), h2});
    out.push_back({"L_V(W_0) = c W_0 - 3(n-1){2(sigma_i W^i) W_0 - lambda sigma_0}",
                   lie_W0(h, nav.W, V, p.x, y),
                   c * W0 - 3.0 * nm1 * (2.0 * sW * W0 - t.lambda * s0g), hn});
    out.push_back({"2 Ric + L_V(F^2) = 2 kappa F^2", almost_soliton_residual(Fm, V, s.kappa, p), 0.0,
                   1.0});
    return out;
  });
}

CheckBundle randers_gradient_characterization(const RandersData& rd, const ScalarField& f,
                                              const SolitonScalars& s,
                                              const std::vector<FlagPoint>& samples,
                                              const BundleOptions& opt) {
  require_kappa(s);
  const std::vector<Check> checks{{"isotropic-e00"},     {"alpha-ricci"},
                                  {"sigma-derivative"},  {"sigma-constancy", true},
                                  {"s-divergence"},      {"ric-infinity"}};
  const int n = rd.dim;
  const RiemannMetric alpha = alpha_metric(rd);
  const FinslerMetric Fm = finsler_metric(rd);
  const MeasureSpec m = MeasureSpec::weighted(busemann_hausdorff(rd), f);
  std::map<std::size_t, std::string> notes;
  if (!s.sigma) notes[0] = "sigma fitted from the trace";
  notes[3] = "sigma is constant where this vanishes";

  return run_bundle("randers-gradient", checks, samples, opt, notes, [&](const FlagPoint& p) {
    const auto d = beta_derivatives(rd, p);
    const auto& y = p.y;
    const double al = d.alpha, be = d.beta, a2 = al * al, F = al + be, nm1 = n - 1.0;
    const double kappa = s.kappa(std::span<const double>(p.x));
    const Local sg = s.sigma ? local(s.sigma, p.x) : Local{d.sigma_trace, d.sigma_grad};
    const double sigma = sg.value, s0g = dot(sg.grad, y);

    const Local fl = local(f, p.x);
    const auto H = hessian_matrix(alpha, f, p.x);
    const double f0 = dot(fl.grad, y);
    const double hess = quadratic_form(H, y);
    const double f0b = bilinear(H, y, d.b_up);  // f_{;0j} b^j
    const double fb = dot(fl.grad, d.b_up);
    const double fs0 = dot(fl.grad, d.s_up_0);
    double fs = 0.0;  // f_i (s^i_0 - s^i beta)
    for (int i = 0; i < n; ++i) fs += fl.grad[i] * (d.s_up_0[i] - d.s_vec[i] * be);
    const double rhs14 = sigma * (1.0 + d.b2) * f0 + fs + f0b + (d.s0 + 2.0 * sigma * be) * fb;

    FlagChecks out;
    out.push_back({"e_00 = 2 sigma (alpha^2 - beta^2)", d.e00, 2.0 * sigma * (a2 - be * be), F * F});
    out.push_back({"Ric_alpha = kappa (alpha^2 + beta^2) + 2 t_00 + t^i_i alpha^2 - 2n sigma_0 beta"
                   " - (n-1)(s_0^2 + s_{0;0} + 3 sigma^2 alpha^2 - sigma^2 beta^2)"
                   " - 2(s_0 + sigma beta) f_0 - Hess_alpha f(y)",
                   d.alpha_ricci,
                   kappa * (a2 + be * be) + 2.0 * d.t00 + d.t_trace * a2 - 2.0 * n * s0g * be -
                       nm1 * (d.s0 * d.s0 + d.s0_0 + 3.0 * sigma * sigma * a2 -
                              sigma * sigma * be * be) -
                       2.0 * (d.s0 + sigma * be) * f0 - hess,
                   F * F});
    out.push_back({"(2n-1)(1 - b^2) sigma_0 = sigma (1 + b^2) f_0 + f_i (s^i_0 - s^i beta)"
                   " + f_{;0j} b^j + (s_0 + 2 sigma beta)(f_i b^i)",
                   (2.0 * n - 1.0) * (1.0 - d.b2) * s0g, rhs14, F});
    out.push_back({"sigma (1 + b^2) f_0 + f_i (s^i_0 - s^i beta) + f_{;0j} b^j"
                   " + (s_0 + 2 sigma beta)(f_i b^i) = 0",
                   rhs14, 0.0, F});
    out.push_back({"s^i_{0;i} = kappa beta - sigma_0 + (n-1)(t_0 + 2 sigma s_0 + sigma^2 beta)"
                   " + sigma f_0 + f_k s^k_0",
                   d.s_i0_i,
                   kappa * be - s0g + nm1 * (d.t0 + 2.0 * sigma * d.s0 + sigma * sigma * be) +
                       sigma * f0 + fs0,
                   F});
    out.push_back({"Ric_inf = kappa F^2", gradient_soliton_residual(Fm, m, s.kappa, p), 0.0, 1.0});
    return out;
  });
}

CheckBundle navigation_gradient_characterization(const NavigationData& nav, const ScalarField& f,
                                                 const SolitonScalars& s,
                                                 const std::vector<FlagPoint>& samples,
                                                 const BundleOptions& opt) {
  require_kappa(s);
  const std::vector<Check> checks{{"h-gradient-soliton"}, {"W-conformal"},
                                  {"sigma-derivative"},   {"sigma-W"},
                                  {"f-condition", true},  {"ric-infinity"}};
  const int n = nav.dim;
  const RiemannMetric h = h_metric(nav);
  const FinslerMetric Fm = finsler_metric(nav);
  const MeasureSpec m = MeasureSpec::weighted(busemann_hausdorff(nav), f);
  std::map<std::size_t, std::string> notes;
  if (!s.mu) notes[0] = "mu fitted from the trace";
  if (!s.sigma) notes[1] = "sigma fitted from the trace";
  notes[4] = "sigma is constant where this vanishes";

  return run_bundle("navigation-gradient", checks, samples, opt, notes, [&](const FlagPoint& p) {
    const auto t = navigation_terms(nav, p.x);
    const auto& y = p.y;
    const double nm1 = n - 1.0;
    const double kappa = s.kappa(std::span<const double>(p.x));
    auto M = ricci_tensor(h, p.x);
    const auto H = hessian_matrix(h, f, p.x);
    for (std::size_t k = 0; k < M.size(); ++k) M[k] += H[k];
    const double mu = s.mu ? s.mu(std::span<const double>(p.x)) : trace_with(t.h_inv, M) / n;
    const Local sg = s.sigma ? local(s.sigma, p.x) : Local{t.sigma_trace, t.sigma_grad};
    const double sigma = sg.value, s0g = dot(sg.grad, y), sW = dot(sg.grad, t.W);
    const double h2 = quadratic_form(t.h, y), hn = std::sqrt(h2);

    const Local fl = local(f, p.x);
    const double f0 = dot(fl.grad, y);
    std::vector<double> S0(n, 0.0);  // S^k_0
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) S0[k] += t.S_up[k * n + j] * y[j];
    const double fS0 = dot(fl.grad, S0);
    const double fW = bilinear(H, y, t.W);  // f_{:0j} W^j
    const double cond = sigma * f0 - fS0 - fW;
    const double fWi = dot(fl.grad, t.W);

    FlagChecks out;
    out.push_back({"Ric_h + Hess_h f = mu h^2", quadratic_form(M, y), mu * h2, h2});
    out.push_back({"W_{i:j} + W_{j:i} = -4 sigma h_ij", 2.0 * quadratic_form(t.R, y),
                   -4.0 * sigma * h2, h2});
    out.push_back({"(2n-1) sigma_0 = sigma f_0 - f_k S^k_0 - f_{:0j} W^j",
                   (2.0 * n - 1.0) * s0g, cond, hn});
    out.push_back({"(sigma_i - sigma f_i) W^i = kappa - mu + (n-1) sigma^2",
                   sW - sigma * fWi, kappa - mu + nm1 * sigma * sigma, 1.0});
    out.push_back({"sigma f_0 - f_k S^k_0 - f_{:0j} W^j = 0", cond, 0.0, hn});
    out.push_back({"Ric_inf = kappa F^2", gradient_soliton_residual(Fm, m, s.kappa, p), 0.0, 1.0});
    return out;
  });
}

KappaFit fit_kappa(const FinslerMetric& F, KappaSource source,
                   const std::vector<DirectionSamples>& samples, const MeasureSpec* m,
                   const VectorFieldSpec* V, int workers) {
  if (source == KappaSource::Weighted && !m)
    throw std::invalid_argument("weighted kappa needs a measure");
  if (source == KappaSource::VectorField && !V)
    throw std::invalid_argument("vector-field kappa needs V");
  for (const auto& s : samples)
    if (s.ys.size() < 2) throw RankError("kappa fit needs at least two directions per point");

  KappaFit fit;
  fit.points = parallel_map(samples.size(), workers, [&](std::size_t k) {
    const auto& s = samples[k];
    double num = 0.0, den = 0.0, lo = INFINITY, hi = -INFINITY;
    for (const auto& y : s.ys) {
      const FlagPoint p{0, s.x, y};
      p.validate();
      double q = 0.0, F2 = 0.0;
      if (source == KappaSource::Weighted) {
        const auto b = measured_bundle(F, *m, p);
        F2 = b.curvature.F * b.curvature.F;
        q = weighted_ricci(b);
      } else {
        const auto b = curvature_bundle(F, p);
        F2 = b.F * b.F;
        q = b.ricci;
        if (source == KappaSource::VectorField) q += 0.5 * lie_F2(F, *V, p);
      }
      num += q * F2;
      den += F2 * F2;
      lo = std::min(lo, q / F2);
      hi = std::max(hi, q / F2);
    }
    if (!(den > 0.0)) throw RankError("degenerate directions in kappa fit");
    return KappaPoint{s.x, num / den, hi - lo};
  });
  for (const auto& p : fit.points) fit.anisotropy = std::max(fit.anisotropy, p.anisotropy);
  return fit;
}

}  // namespace finsler
