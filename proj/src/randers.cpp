#include "finsler/randers.hpp"

#include <algorithm>
#include <cmath>

#include "finsler/linalg.hpp"

namespace finsler {

namespace {

template <class T>
std::string where(std::span<const T> x) {
  return describe_point(values_of<T>(x));
}

template <class T>
struct NavAt {
  std::vector<T> h, W, W_low;
  T lam;
};

template <class T>
NavAt<T> nav_at(const NavigationData& nav, std::span<const T> x) {
  const int n = nav.dim;
  NavAt<T> o;
  o.h = nav.h(x);
  o.W = nav.W(x);
  if (static_cast<int>(o.h.size()) != n * n || static_cast<int>(o.W.size()) != n)
    throw std::invalid_argument("navigation data has wrong component count");
  T w2 = constant_like(x[0], 0.0);
  for (int i = 0; i < n; ++i) {
    T wi = o.h[i * n] * o.W[0];
    for (int j = 1; j < n; ++j) wi += o.h[i * n + j] * o.W[j];
    w2 += wi * o.W[i];
    o.W_low.push_back(std::move(wi));
  }
  o.lam = 1.0 - w2;
  if (!(value_of(o.lam) > 0.0))
    throw NavigationDomainError("|W|_h >= 1 at " + where(x));
  return o;
}

template <class T>
struct RandersAt {
  std::vector<T> a, b, a_inv, b_up;
  T b2;
};

template <class T>
RandersAt<T> randers_at(const RandersData& rd, std::span<const T> x) {
  const int n = rd.dim;
  RandersAt<T> o;
  o.a = rd.a(x);
  o.b = rd.b(x);
  if (static_cast<int>(o.a.size()) != n * n || static_cast<int>(o.b.size()) != n)
    throw std::invalid_argument("Randers data has wrong component count");
  o.a_inv = invert<T>(o.a, n).inverse;
  o.b2 = constant_like(x[0], 0.0);
  for (int i = 0; i < n; ++i) {
    T bi = o.a_inv[i * n] * o.b[0];
    for (int j = 1; j < n; ++j) bi += o.a_inv[i * n + j] * o.b[j];
    o.b2 += bi * o.b[i];
    o.b_up.push_back(std::move(bi));
  }
  if (!(value_of(o.b2) < 1.0)) throw RandersDomainError("b >= 1 at " + where(x));
  return o;
}

// b^2 from values only, for guards inside jet evaluations
template <class T>
void guard_b(const std::vector<T>& a, const std::vector<T>& b, int n, std::span<const T> x) {
  const auto av = values_of<T>(a);
  const auto bv = values_of<T>(b);
  const auto inv = invert<double>(av, n).inverse;
  double b2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b2 += inv[i * n + j] * bv[i] * bv[j];
  if (!(b2 < 1.0)) throw RandersDomainError("b >= 1 at " + where(x));
}

double dotv(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

std::vector<double> mat_vec(const std::vector<double>& m, std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += m[i * n + j] * v[j];
  return out;
}

// y^T M (left contraction): out_j = y^i M_ij
std::vector<double> vec_mat(std::span<const double> y, const std::vector<double>& m) {
  const std::size_t n = y.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += y[i] * m[i * n + j];
  return out;
}

// the component with the largest discrepancy stands for the whole tensor
IdentityResidual worst(std::string name, const std::vector<double>& lhs,
                       const std::vector<double>& rhs, double scale) {
  IdentityResidual r{std::move(name), 0.0, 0.0, scale};
  double best = -1.0;
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    const double d = std::abs(lhs[k] - rhs[k]);
    if (d > best) {
      best = d;
      r.lhs = lhs[k];
      r.rhs = rhs[k];
    }
  }
  return r;
}

}  // namespace

RiemannMetric alpha_metric(const RandersData& rd) { return {rd.dim, rd.a}; }
RiemannMetric h_metric(const NavigationData& nav) { return {nav.dim, nav.h}; }

RandersData from_navigation(const NavigationData& nav) {
  const int n = nav.dim;
  RandersData rd;
  rd.dim = n;
  rd.a = ArrayField::from([nav, n](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    const auto d = nav_at<T>(nav, x);
    std::vector<T> a;
    a.reserve(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        a.push_back(d.h[i * n + j] / d.lam + d.W_low[i] * d.W_low[j] / (d.lam * d.lam));
    return a;
  });
  rd.b = ArrayField::from([nav, n](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    const auto d = nav_at<T>(nav, x);
    std::vector<T> b;
    for (int i = 0; i < n; ++i) b.push_back(-1.0 * d.W_low[i] / d.lam);
    return b;
  });
  return rd;
}

NavigationData to_navigation(const RandersData& rd) {
  const int n = rd.dim;
  NavigationData nav;
  nav.dim = n;
  nav.h = ArrayField::from([rd, n](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    const auto d = randers_at<T>(rd, x);
    const T lam = 1.0 - d.b2;
    std::vector<T> h;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) h.push_back(lam * (d.a[i * n + j] - d.b[i] * d.b[j]));
    return h;
  });
  nav.W = ArrayField::from([rd, n](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    const auto d = randers_at<T>(rd, x);
    const T lam = 1.0 - d.b2;
    std::vector<T> W;
    for (int i = 0; i < n; ++i) W.push_back(-1.0 * d.b_up[i] / lam);
    return W;
  });
  return nav;
}

double b_squared(const RandersData& rd, std::span<const double> x) {
  const int n = rd.dim;
  const auto a = rd.a(x);
  const auto b = rd.b(x);
  const auto inv = invert<double>(a, n).inverse;
  double b2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b2 += inv[i * n + j] * b[i] * b[j];
  return b2;
}

double lambda(const NavigationData& nav, std::span<const double> x) {
  const int n = nav.dim;
  const auto h = nav.h(x);
  const auto W = nav.W(x);
  double w2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w2 += h[i * n + j] * W[i] * W[j];
  return 1.0 - w2;
}

FinslerMetric finsler_metric(const RandersData& rd) {
  const int n = rd.dim;
  FinslerMetric F;
  F.dim = n;
  F.F = FlagFunction::from([rd, n](auto x, auto y) {
    using T = std::decay_t<decltype(x[0])>;
    const std::vector<T> a = rd.a(x);
    const std::vector<T> b = rd.b(x);
    guard_b<T>(a, b, n, x);
    auto a2 = a[0] * y[0] * y[0];
    auto beta = b[0] * y[0];
    for (int i = 0; i < n; ++i) {
      if (i > 0) beta += b[i] * y[i];
      for (int j = 0; j < n; ++j)
        if (i + j > 0) a2 += a[i * n + j] * y[i] * y[j];
    }
    return sqrt(a2) + beta;
  });
  return F;
}

FinslerMetric finsler_metric(const NavigationData& nav) {
  const int n = nav.dim;
  FinslerMetric F;
  F.dim = n;
  F.F = FlagFunction::from([nav, n](auto x, auto y) {
    using T = std::decay_t<decltype(x[0])>;
    const auto d = nav_at<T>(nav, x);
    auto h2 = d.h[0] * y[0] * y[0];
    auto w0 = d.W_low[0] * y[0];
    for (int i = 0; i < n; ++i) {
      if (i > 0) w0 += d.W_low[i] * y[i];
      for (int j = 0; j < n; ++j)
        if (i + j > 0) h2 += d.h[i * n + j] * y[i] * y[j];
    }
    return (sqrt(d.lam * h2 + w0 * w0) - w0) / d.lam;
  });
  return F;
}

double eval_F(const RandersData& rd, const FlagPoint& p) {
  p.validate();
  return finsler_metric(rd).F(std::span<const double>(p.x), std::span<const double>(p.y));
}

double eval_F_nav(const NavigationData& nav, const FlagPoint& p) {
  p.validate();
  return finsler_metric(nav).F(std::span<const double>(p.x), std::span<const double>(p.y));
}

double bh_density(const RandersData& rd, std::span<const double> x) {
  const int n = rd.dim;
  const auto d = randers_at<double>(rd, x);
  const double det = determinant<double>(d.a, n);
  return std::pow(1.0 - d.b2, 0.5 * (n + 1)) * std::sqrt(det);
}

MeasureSpec busemann_hausdorff(const RandersData& rd) {
  const int n = rd.dim;
  return MeasureSpec::from_log_density(
      MeasureSpec::Mode::BusemannHausdorffRanders, ScalarField::from([rd, n](auto x) {
        using T = std::decay_t<decltype(x[0])>;
        const auto d = randers_at<T>(rd, x);
        const T det = determinant<T>(d.a, n);
        return 0.5 * (n + 1) * log(1.0 - d.b2) + 0.5 * log(det);
      }));
}

// For navigation data the two factors cancel: (1-b^2) = lambda and
// det a = det h / lambda^{n+1}, leaving sqrt(det h).
MeasureSpec busemann_hausdorff(const NavigationData& nav) {
  const int n = nav.dim;
  return MeasureSpec::from_log_density(
      MeasureSpec::Mode::BusemannHausdorffRanders, ScalarField::from([nav, n](auto x) {
        using T = std::decay_t<decltype(x[0])>;
        const auto d = nav_at<T>(nav, x);
        return 0.5 * log(determinant<T>(d.h, n));
      }));
}

BetaDerivatives beta_derivatives(const RandersData& rd, const FlagPoint& p) {
  p.validate();
  const int n = rd.dim;
  if (p.dim() != n) throw std::invalid_argument("flag dimension does not match the metric");
  LeviCivita lc(alpha_metric(rd), p.x, 3);
  const auto& X = lc.coordinates();
  const std::vector<Jet> b = rd.b(X);
  const auto& a = lc.metric();
  const auto& ainv = lc.inverse();
  const std::vector<Jet> bup = lc.raise(b);
  const std::vector<Jet> bij = lc.covariant(lc.covector(b)).data;  // b_{i;j}

  Jet b2 = b[0] * bup[0];
  for (int i = 1; i < n; ++i) b2 += b[i] * bup[i];
  if (!(b2.value() < 1.0)) throw RandersDomainError("b >= 1 at " + describe_point(p.x));

  auto contract_up = [&](const std::vector<Jet>& m) {  // (a^{ik} m_kj)
    std::vector<Jet> out;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Jet s = ainv[i * n] * m[j];
        for (int k = 1; k < n; ++k) s += ainv[i * n + k] * m[k * n + j];
        out.push_back(std::move(s));
      }
    return out;
  };
  auto left_b = [&](const std::vector<Jet>& m) {  // b^i m_ij
    std::vector<Jet> out;
    for (int j = 0; j < n; ++j) {
      Jet s = bup[0] * m[j];
      for (int i = 1; i < n; ++i) s += bup[i] * m[i * n + j];
      out.push_back(std::move(s));
    }
    return out;
  };

  std::vector<Jet> r, s;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      r.push_back(0.5 * (bij[i * n + j] + bij[j * n + i]));
      s.push_back(0.5 * (bij[i * n + j] - bij[j * n + i]));
    }
  const auto s_up = contract_up(s);
  const auto r_up = contract_up(r);
  const auto s_j = left_b(s);
  const auto r_j = left_b(r);
  std::vector<Jet> e, t, q;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      e.push_back(r[i * n + j] + b[i] * s_j[j] + b[j] * s_j[i]);
      Jet tij = s[i * n] * s_up[j];
      Jet qij = r[i * n] * s_up[j];
      for (int k = 1; k < n; ++k) {
        tij += s[i * n + k] * s_up[k * n + j];
        qij += r[i * n + k] * s_up[k * n + j];
      }
      t.push_back(std::move(tij));
      q.push_back(std::move(qij));
    }
  const auto t_j = left_b(t);
  const auto s_vec = lc.raise(s_j);

  Jet r_trace = r_up[0];
  Jet e_trace = ainv[0] * e[0];
  for (int i = 0; i < n; ++i) {
    if (i > 0) r_trace += r_up[i * n + i];
    for (int j = 0; j < n; ++j)
      if (i + j > 0) e_trace += ainv[i * n + j] * e[i * n + j];
  }
  const Jet sigma = e_trace / (2.0 * (static_cast<double>(n) - b2));

  BetaDerivatives d;
  d.n = n;
  d.y = p.y;
  const auto& y = p.y;
  d.a = values_of<Jet>(a);
  d.a_inv = values_of<Jet>(ainv);
  d.b = values_of<Jet>(b);
  d.b_up = values_of<Jet>(bup);
  d.b2 = b2.value();
  d.r = values_of<Jet>(r);
  d.s = values_of<Jet>(s);
  d.r_up = values_of<Jet>(r_up);
  d.s_up = values_of<Jet>(s_up);
  d.e = values_of<Jet>(e);
  d.t = values_of<Jet>(t);
  d.q = values_of<Jet>(q);
  d.r_j = values_of<Jet>(r_j);
  d.s_j = values_of<Jet>(s_j);
  d.t_j = values_of<Jet>(t_j);
  d.s_vec = values_of<Jet>(s_vec);
  d.r_scalar = dotv(d.r_j, d.b_up);
  d.r_trace = r_trace.value();
  d.t_trace = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d.t_trace += d.a_inv[i * n + j] * d.t[i * n + j];

  d.alpha = std::sqrt(quadratic_form(d.a, y));
  d.beta = dotv(d.b, y);
  d.e00 = quadratic_form(d.e, y);
  d.r00 = quadratic_form(d.r, y);
  d.s0 = dotv(d.s_j, y);
  d.t00 = quadratic_form(d.t, y);
  d.t0 = dotv(d.t_j, y);
  d.q00 = quadratic_form(d.q, y);
  d.r_up_0 = mat_vec(d.r_up, y);
  d.s_up_0 = mat_vec(d.s_up, y);

  // second covariant derivatives
  const auto sj_k = lc.covariant(lc.covector(s_j)).values();
  d.s0_0 = quadratic_form(sj_k, y);
  const auto rij_k = lc.covariant(JetTensor{n, {Slot::Down, Slot::Down}, r}).values();
  const auto sup_k = lc.covariant(JetTensor{n, {Slot::Up, Slot::Down}, s_up}).values();
  d.r00_0 = 0.0;
  d.s_i0_i = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      d.s_i0_i += sup_k[(i * n + j) * n + i] * y[j];
      for (int k = 0; k < n; ++k) d.r00_0 += rij_k[(i * n + j) * n + k] * y[i] * y[j] * y[k];
    }
  std::vector<Jet> r_vec;  // r^i = r^i_j b^j
  for (int i = 0; i < n; ++i) {
    Jet v = r_up[i * n] * bup[0];
    for (int j = 1; j < n; ++j) v += r_up[i * n + j] * bup[j];
    r_vec.push_back(std::move(v));
  }
  const auto rv_k = lc.covariant(lc.vector(r_vec)).values();
  const auto sv_k = lc.covariant(lc.vector(s_vec)).values();
  d.r_div = 0.0;
  d.s_div = 0.0;
  d.r_trace_0 = 0.0;
  d.sigma_trace = sigma.value();
  d.sigma_grad.resize(n);
  for (int i = 0; i < n; ++i) {
    d.r_div += rv_k[i * n + i];
    d.s_div += sv_k[i * n + i];
    d.r_trace_0 += r_trace.partial({i}) * y[i];
    d.sigma_grad[i] = sigma.partial({i});
  }
  d.alpha_ricci = quadratic_form(values_of<Jet>(lc.ricci_tensor()), y);
  return d;
}

double lie_alpha2(const RandersData& rd, const VectorFieldSpec& V, const FlagPoint& p) {
  return lie_h2(alpha_metric(rd), V, p.x, p.y);
}

double lie_beta(const RandersData& rd, const VectorFieldSpec& V, const FlagPoint& p) {
  const int n = rd.dim;
  const auto X = coordinate_jets(p.x, 1);
  const auto b = rd.b(X);
  const auto v = V(X);
  // (V^k d_k b_j + b_k d_j V^k) y^j
  double s = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      s += (v[k].value() * b[j].partial({k}) + b[k].value() * v[k].partial({j})) * p.y[j];
  return s;
}

SigmaFit fit_sigma_isotropic_S(const RandersData& rd, std::span<const double> x,
                               const std::vector<std::vector<double>>& y_samples) {
  const int n = rd.dim;
  const int cols = n * (n + 1) / 2;
  const int rows = static_cast<int>(y_samples.size());
  if (rows < cols) throw RankError("need at least n(n+1)/2 direction samples");
  std::vector<double> design;
  for (const auto& y : y_samples) {
    if (static_cast<int>(y.size()) != n) throw std::invalid_argument("sample dimension mismatch");
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) design.push_back(y[i] * y[j]);
  }
  if (matrix_rank(design, rows, cols) < cols)
    throw RankError("direction samples do not span the quadratic forms");

  LeviCivita lc(alpha_metric(rd), x, 1);
  const auto b = rd.b(lc.coordinates());
  const auto bij = lc.covariant(lc.covector(b)).values();
  const auto a = values_of<Jet>(lc.metric());
  const auto bv = values_of<Jet>(b);
  const auto inv = values_of<Jet>(lc.inverse());
  double b2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b2 += inv[i * n + j] * bv[i] * bv[j];
  if (!(b2 < 1.0)) throw RandersDomainError("b >= 1 at " + describe_point(x));
  std::vector<double> r(n * n), s(n * n), s_j(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      r[i * n + j] = 0.5 * (bij[i * n + j] + bij[j * n + i]);
      s[i * n + j] = 0.5 * (bij[i * n + j] - bij[j * n + i]);
    }
  const auto bup = mat_vec(inv, bv);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) s_j[j] += bup[i] * s[i * n + j];

  std::vector<double> ev, wv, a2v;
  for (const auto& y : y_samples) {
    const double a2 = quadratic_form(a, y);
    const double beta = dotv(bv, y);
    const double s0 = dotv(s_j, y);
    ev.push_back(quadratic_form(r, y) + 2.0 * beta * s0);
    wv.push_back(2.0 * (a2 - beta * beta));
    a2v.push_back(a2);
  }
  double num = 0.0, den = 0.0;
  for (int k = 0; k < rows; ++k) {
    num += ev[k] * wv[k] / (a2v[k] * a2v[k]);
    den += wv[k] * wv[k] / (a2v[k] * a2v[k]);
  }
  SigmaFit fit;
  fit.sigma = num / den;
  for (int k = 0; k < rows; ++k)
    fit.residual = std::max(fit.residual, std::abs(ev[k] - fit.sigma * wv[k]) / a2v[k]);
  return fit;
}

double randers_ricci_closed_form(const BetaDerivatives& d) {
  const double n = d.n;
  const double al = d.alpha;
  const double F = al + d.beta;
  const double xi = 2.0 * al / F * (d.q00 - al * d.t0) +
                    3.0 / (4.0 * F * F) * std::pow(d.r00 - 2.0 * al * d.s0, 2) -
                    1.0 / (2.0 * F) * (d.r00_0 - 2.0 * al * d.s0_0);
  return d.alpha_ricci + 2.0 * al * d.s_i0_i - 2.0 * d.t00 - al * al * d.t_trace +
         (n - 1.0) * xi;
}

double randers_ricci_closed_form(const RandersData& rd, const FlagPoint& p) {
  return randers_ricci_closed_form(beta_derivatives(rd, p));
}

IsotropicIdentities isotropic_s_identities(const RandersData& rd, const FlagPoint& p,
                                           const ScalarField* sigma_field,
                                           double hypothesis_tol) {
  const auto d = beta_derivatives(rd, p);
  const int n = d.n;
  const auto& y = p.y;
  double sg = d.sigma_trace;
  std::vector<double> sgrad = d.sigma_grad;
  if (sigma_field) {
    const auto X = coordinate_jets(p.x, 1);
    const Jet sj = (*sigma_field)(X);
    sg = sj.value();
    for (int i = 0; i < n; ++i) sgrad[i] = sj.partial({i});
  }
  const double s0g = dotv(sgrad, y);
  const double al = d.alpha, be = d.beta, b2 = d.b2;
  const double a2 = al * al;

  IsotropicIdentities out;
  out.sigma = sg;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.hypothesis_residual =
          std::max(out.hypothesis_residual,
                   std::abs(d.e[i * n + j] - 2.0 * sg * (d.a[i * n + j] - d.b[i] * d.b[j])));
  out.applicable = out.hypothesis_residual <= hypothesis_tol;

  std::vector<double> lhs, rhs;
  auto& res = out.residuals;

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rhs.push_back(-d.s_j[i] * d.b[j] - d.s_j[j] * d.b[i] +
                    2.0 * sg * (d.a[i * n + j] - d.b[i] * d.b[j]));
  res.push_back(worst("r_ij = -s_i b_j - s_j b_i + 2 sigma (a_ij - b_i b_j)", d.r, rhs, 1.0));

  rhs.clear();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rhs.push_back(-d.s_vec[i] * d.b[j] - d.b_up[i] * d.s_j[j] +
                    2.0 * sg * ((i == j ? 1.0 : 0.0) - d.b_up[i] * d.b[j]));
  res.push_back(
      worst("r^i_j = -s^i b_j - b^i s_j + 2 sigma (delta^i_j - b^i b_j)", d.r_up, rhs, 1.0));

  res.push_back({"r^j_j = 2 sigma (n - b^2)", d.r_trace, 2.0 * sg * (n - b2), 1.0});

  rhs.clear();
  for (int j = 0; j < n; ++j) rhs.push_back(-b2 * d.s_j[j] + 2.0 * sg * (1.0 - b2) * d.b[j]);
  res.push_back(worst("r_j = -b^2 s_j + 2 sigma (1 - b^2) b_j", d.r_j, rhs, 1.0));

  res.push_back({"r = 2 sigma b^2 (1 - b^2)", d.r_scalar, 2.0 * sg * b2 * (1.0 - b2), 1.0});

  rhs.clear();
  for (int i = 0; i < n; ++i)
    rhs.push_back(-be * d.s_vec[i] - d.b_up[i] * d.s0 + 2.0 * sg * (y[i] - be * d.b_up[i]));
  res.push_back(worst("r^i_0 = -beta s^i - b^i s_0 + 2 sigma (y^i - beta b^i)", d.r_up_0, rhs,
                      al));

  res.push_back({"r_00 = -2 beta s_0 + 2 sigma (alpha^2 - beta^2)", d.r00,
                 -2.0 * be * d.s0 + 2.0 * sg * (a2 - be * be), a2});

  res.push_back({"r^i_{i;0} = 2 sigma_0 (n - b^2) - 4 sigma (1 - b^2)(2 sigma beta + s_0)",
                 d.r_trace_0,
                 2.0 * s0g * (n - b2) - 4.0 * sg * (1.0 - b2) * (2.0 * sg * be + d.s0), al});

  const double ss = dotv(d.s_j, d.s_vec);
  const double sb = dotv(sgrad, d.b_up);
  res.push_back({"r^i_{;i} = -2(1 - b^2)(s_i s^i - sigma_i b^i - 2n sigma^2 + 6 sigma^2 b^2)"
                 " - b^2 s^i_{;i}",
                 d.r_div,
                 -2.0 * (1.0 - b2) * (ss - sb - 2.0 * n * sg * sg + 6.0 * sg * sg * b2) -
                     b2 * d.s_div,
                 1.0});

  res.push_back({"q_00 = -(s_0^2 + t_0 beta + 2 sigma beta s_0)", d.q00,
                 -(d.s0 * d.s0 + d.t0 * be + 2.0 * sg * be * d.s0), a2});

  res.push_back({"r_{00;0} = -2 s_{0;0} beta + 4 s_0^2 beta + 8 sigma s_0 beta^2"
                 " + 2(sigma_0 - 2 sigma s_0 - 4 sigma^2 beta)(alpha^2 - beta^2)",
                 d.r00_0,
                 -2.0 * d.s0_0 * be + 4.0 * d.s0 * d.s0 * be + 8.0 * sg * d.s0 * be * be +
                     2.0 * (s0g - 2.0 * sg * d.s0 - 4.0 * sg * sg * be) * (a2 - be * be),
                 a2 * al});
  (void)lhs;
  return out;
}

NavigationTerms navigation_terms(const NavigationData& nav, std::span<const double> x) {
  const int n = nav.dim;
  LeviCivita lc(h_metric(nav), x, 2);
  const auto W = nav.W(lc.coordinates());
  const auto Wl = lc.lower(W);
  const auto dW = lc.covariant(lc.covector(Wl)).data;  // W_{i:j}, order 1
  const auto& hinv = lc.inverse();

  NavigationTerms t;
  t.n = n;
  t.h = values_of<Jet>(lc.metric());
  t.h_inv = values_of<Jet>(hinv);
  t.W = values_of<Jet>(W);
  t.W_low = values_of<Jet>(Wl);
  t.dW = values_of<Jet>(dW);
  t.lambda = 1.0 - dotv(t.W, t.W_low);
  if (!(t.lambda > 0.0)) throw NavigationDomainError("|W|_h >= 1 at " + describe_point(x));
  t.R.resize(n * n);
  t.S.resize(n * n);
  Jet trace = 0.0 * dW[0];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      t.R[i * n + j] = 0.5 * (t.dW[i * n + j] + t.dW[j * n + i]);
      t.S[i * n + j] = 0.5 * (t.dW[i * n + j] - t.dW[j * n + i]);
      trace += hinv[i * n + j] * dW[i * n + j];
    }
  t.S_up.assign(n * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) t.S_up[i * n + j] += t.h_inv[i * n + k] * t.S[k * n + j];
  t.S_j = vec_mat(t.W, t.S);
  t.S_vec = mat_vec(t.h_inv, t.S_j);
  const Jet sigma = trace / (-2.0 * n);
  t.sigma_trace = sigma.value();
  t.sigma_grad.resize(n);
  for (int i = 0; i < n; ++i) t.sigma_grad[i] = sigma.partial({i});
  return t;
}

IdentityResidual navigation_norm_identity(const NavigationData& nav, const FlagPoint& p) {
  const double F = eval_F_nav(nav, p);
  const auto h = nav.h(p.x);
  const auto W = nav.W(p.x);
  const auto Wl = mat_vec(h, W);
  const double h2 = quadratic_form(h, p.y);
  const double w0 = dotv(Wl, p.y);
  const double lam = 1.0 - dotv(Wl, W);
  return {"h^2 - 2 F W_0 = lambda F^2", h2 - 2.0 * F * w0, lam * F * F, F * F};
}

IdentityResidual navigation_xi_identity(const NavigationData& nav, const FlagPoint& p) {
  const double F = eval_F_nav(nav, p);
  const auto h = nav.h(p.x);
  const auto W = nav.W(p.x);
  std::vector<double> xi(p.y);
  for (std::size_t i = 0; i < xi.size(); ++i) xi[i] -= F * W[i];
  return {"h(x, y - F W) = F(x, y)", std::sqrt(quadratic_form(h, xi)), F, F};
}

IdentityResidual lie_navigation_identity(const NavigationData& nav, const VectorFieldSpec& V,
                                         const FlagPoint& p) {
  const int n = nav.dim;
  const auto Fm = finsler_metric(nav);
  const double lhs = lie_F2(Fm, V, p);
  const double F = eval_F_nav(nav, p);

  LeviCivita lc(h_metric(nav), p.x, 1);
  const auto Wj = nav.W(lc.coordinates());
  const auto Vj = V(lc.coordinates());
  const auto dW = lc.covariant(lc.covector(lc.lower(Wj))).values();
  const auto dV = lc.covariant(lc.covector(lc.lower(Vj))).values();
  const auto W = values_of<Jet>(Wj);
  const auto Vv = values_of<Jet>(Vj);
  const auto h = values_of<Jet>(lc.metric());
  std::vector<double> xi(p.y);
  for (int i = 0; i < n; ++i) xi[i] -= F * W[i];
  const double w0t = dotv(mat_vec(h, W), xi);
  const double v00 = quadratic_form(dV, xi);
  double mixed = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) mixed += (dV[j * n + k] * W[k] - dW[j * n + k] * Vv[k]) * xi[j];
  const double rhs = 2.0 / (F + w0t) * (F * v00 + F * F * mixed);
  return {"L_V(F^2) = 2/(F + W~_0) {F V~_{0:0} + F^2 (V_{j:k} W^k - W_{j:k} V^k) xi^j}", lhs,
          rhs, F * F};
}

IdentityResidual lie_randers_identity(const RandersData& rd, const VectorFieldSpec& V,
                                      const FlagPoint& p) {
  const auto Fm = finsler_metric(rd);
  const double lhs = lie_F2(Fm, V, p);
  const double F = eval_F(rd, p);
  const double al = std::sqrt(quadratic_form(rd.a(p.x), p.y));
  const double rhs = F / al * lie_alpha2(rd, V, p) + 2.0 * F * lie_beta(rd, V, p);
  return {"L_V(F^2) = (F/alpha) L_V(alpha^2) + 2 F L_V(beta)", lhs, rhs, F * F};
}

IdentityResidual navigation_ricci_identity(const NavigationData& nav, const FlagPoint& p,
                                           double mu) {
  const int n = nav.dim;
  const auto t = navigation_terms(nav, p.x);
  const double F = eval_F_nav(nav, p);
  const double Ric = ricci(finsler_metric(nav), p);
  std::vector<double> xi(p.y);
  for (int i = 0; i < n; ++i) xi[i] -= F * t.W[i];
  const double sg = t.sigma_trace;
  const double s0 = dotv(t.sigma_grad, p.y);
  const double sW = dotv(t.sigma_grad, t.W);
  const double lhs = Ric - (n - 1.0) * (3.0 * s0 / F + mu - sg * sg - 2.0 * sW) * F * F;
  const double rhs =
      quadratic_form(ricci_tensor(h_metric(nav), p.x), xi) - (n - 1.0) * mu * quadratic_form(t.h, xi);
  return {"Ric - (n-1)(3 sigma_0/F + mu - sigma^2 - 2 sigma_i W^i) F^2 = Ric_h(xi) - (n-1) mu h(xi)^2",
          lhs, rhs, F * F};
}

IdentityResidual navigation_sdot_identity(const NavigationData& nav, const ScalarField& f,
                                          const FlagPoint& p) {
  const int n = nav.dim;
  const auto Fm = finsler_metric(nav);
  const auto m = MeasureSpec::weighted(busemann_hausdorff(nav), f);
  const double lhs = s_dot(Fm, m, p);
  const auto t = navigation_terms(nav, p.x);
  const double F = eval_F_nav(nav, p);
  const auto X = coordinate_jets(p.x, 1);
  const Jet fj = f(X);
  std::vector<double> df(n);
  for (int i = 0; i < n; ++i) df[i] = fj.partial({i});
  const double sg = t.sigma_trace;
  const double s0 = dotv(t.sigma_grad, p.y);
  const double f0 = dotv(df, p.y);
  const double fS0 = dotv(df, mat_vec(t.S_up, p.y));
  const double fS = dotv(df, t.S_vec);
  const double rhs = (n + 1.0) * s0 * F - 2.0 * sg * f0 * F + 2.0 * fS0 * F + fS * F * F +
                     hessian(h_metric(nav), f, p.x, p.y);
  return {"S_dot = (n+1) sigma_0 F - 2 sigma f_0 F + 2 (f_k S^k_0) F + (f_k S^k) F^2 + Hess_h f(y)",
          lhs, rhs, F * F};
}

std::vector<IdentityResidual> navigation_s_identities(const NavigationData& nav,
                                                      const FlagPoint& p) {
  const int n = nav.dim;
  const auto t = navigation_terms(nav, p.x);
  const auto d = beta_derivatives(from_navigation(nav), p);
  const double F = eval_F_nav(nav, p);
  std::vector<IdentityResidual> out;
  out.push_back({"s_0 = S_0 / lambda", d.s0, dotv(t.S_j, p.y) / t.lambda, F});
  std::vector<double> rhs;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rhs.push_back(-t.S_up[i * n + j] + t.S_vec[i] * t.W_low[j] / t.lambda);
  out.push_back(worst("s^i_j = -S^i_j + S^i W_j / lambda", d.s_up, rhs, 1.0));
  return out;
}

namespace {

// c0 + c1.x + sum_{k<=l} c2_kl x_k x_l
struct Quadratic {
  double c0 = 0.0;
  std::vector<double> c1, c2;

  template <class T>
  T operator()(std::span<const T> x) const {
    const int n = static_cast<int>(x.size());
    T v = constant_like(x[0], c0);
    int idx = 0;
    for (int k = 0; k < n; ++k) {
      v += c1[k] * x[k];
      for (int l = k; l < n; ++l) v += c2[idx++] * x[k] * x[l];
    }
    return v;
  }
  double bound(double box) const {
    double s = std::abs(c0);
    for (double c : c1) s += std::abs(c) * box;
    for (double c : c2) s += std::abs(c) * box * box;
    return s;
  }
  void scale(double f) {
    c0 *= f;
    for (double& c : c1) c *= f;
    for (double& c : c2) c *= f;
  }
};

Quadratic random_quadratic(std::mt19937_64& rng, int n, double size) {
  std::uniform_real_distribution<double> u(-size, size);
  Quadratic q;
  q.c0 = u(rng);
  for (int k = 0; k < n; ++k) q.c1.push_back(u(rng));
  for (int k = 0; k < n * (n + 1) / 2; ++k) q.c2.push_back(u(rng));
  return q;
}

std::vector<Quadratic> random_symmetric_perturbation(std::mt19937_64& rng, int n, double box) {
  std::vector<Quadratic> P;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) P.push_back(random_quadratic(rng, n, 0.1));
  // Frobenius bound of the perturbation on the box; keep it below 1/2
  double fro = 0.0;
  int idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double bnd = P[idx++].bound(box);
      fro += (i == j ? 1.0 : 2.0) * bnd * bnd;
    }
  fro = std::sqrt(fro);
  if (fro > 0.5)
    for (auto& q : P) q.scale(0.5 / fro);
  return P;
}

ArrayField symmetric_field(int n, std::vector<Quadratic> P) {
  return ArrayField::from([n, P](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    std::vector<T> m(n * n, constant_like(x[0], 0.0));
    int idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        T v = P[idx++](x);
        if (i == j) v += 1.0;
        m[i * n + j] = v;
        m[j * n + i] = v;
      }
    return m;
  });
}

ArrayField quadratic_vector_field(std::vector<Quadratic> comps) {
  return ArrayField::from([comps](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    std::vector<T> v;
    for (const auto& q : comps) v.push_back(q(x));
    return v;
  });
}

}  // namespace

RiemannMetric random_metric(std::mt19937_64& rng, int n, double box) {
  return {n, symmetric_field(n, random_symmetric_perturbation(rng, n, box))};
}

RandersData random_randers(std::mt19937_64& rng, int n, double box) {
  RandersData rd;
  rd.dim = n;
  rd.a = symmetric_field(n, random_symmetric_perturbation(rng, n, box));
  std::vector<Quadratic> b;
  double bnd = 0.0;
  for (int i = 0; i < n; ++i) {
    b.push_back(random_quadratic(rng, n, 0.1));
    bnd += std::pow(b.back().bound(box), 2);
  }
  // a >= I/2 gives b^2 <= 2 |b|^2; |b| <= 0.35 keeps b < 1/2
  bnd = std::sqrt(bnd);
  if (bnd > 0.35)
    for (auto& q : b) q.scale(0.35 / bnd);
  rd.b = quadratic_vector_field(std::move(b));
  return rd;
}

VectorFieldSpec random_vector_field(std::mt19937_64& rng, int n, double size, double box) {
  std::vector<Quadratic> comps;
  for (int i = 0; i < n; ++i) comps.push_back(random_quadratic(rng, n, size));
  (void)box;
  return quadratic_vector_field(std::move(comps));
}

ConformalNavigation random_conformal_navigation(std::mt19937_64& rng, int n, double radius) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double s0 = 0.2 * u(rng);
  std::vector<double> Q(n * n, 0.0), C(n), k(n);
  for (int i = 0; i < n; ++i) {
    C[i] = 0.2 * u(rng);
    k[i] = 0.2 * u(rng);
    for (int j = i + 1; j < n; ++j) {
      Q[i * n + j] = 0.3 * u(rng);
      Q[j * n + i] = -Q[i * n + j];
    }
  }
  double qf = 0.0, cn = 0.0, kn = 0.0;
  for (double v : Q) qf += v * v;
  for (int i = 0; i < n; ++i) {
    cn += C[i] * C[i];
    kn += k[i] * k[i];
  }
  const double bound = 2.0 * std::abs(s0) * radius + std::sqrt(qf) * radius + std::sqrt(cn) +
                       3.0 * std::sqrt(kn) * radius * radius;
  if (bound > 0.5) {
    const double f = 0.5 / bound;
    s0 *= f;
    for (double& v : Q) v *= f;
    for (double& v : C) v *= f;
    for (double& v : k) v *= f;
  }
  ConformalNavigation out;
  out.s0 = s0;
  out.k = k;
  out.nav.dim = n;
  out.nav.h = ArrayField::from([n](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    std::vector<T> h(n * n, constant_like(x[0], 0.0));
    for (int i = 0; i < n; ++i) h[i * n + i] = constant_like(x[0], 1.0);
    return h;
  });
  out.nav.W = ArrayField::from([n, s0, Q, C, k](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    T kx = k[0] * x[0];
    T x2 = x[0] * x[0];
    for (int i = 1; i < n; ++i) {
      kx += k[i] * x[i];
      x2 += x[i] * x[i];
    }
    std::vector<T> W;
    for (int i = 0; i < n; ++i) {
      T w = -2.0 * s0 * x[i] + C[i] + 2.0 * kx * x[i] - x2 * k[i];
      for (int j = 0; j < n; ++j) w += Q[i * n + j] * x[j];
      W.push_back(std::move(w));
    }
    return W;
  });
  out.sigma = ScalarField::from([n, s0, k](auto x) {
    auto v = s0 - k[0] * x[0];
    for (int i = 1; i < n; ++i) v -= k[i] * x[i];
    return v;
  });
  return out;
}

}  // namespace finsler
