#include "finsler/finsler_core.hpp"

#include <cmath>

#include "finsler/linalg.hpp"

namespace finsler {

namespace {

void check_flag(const FinslerMetric& F, const FlagPoint& p) {
  p.validate();
  if (p.dim() != F.dim) throw std::invalid_argument("flag dimension does not match the metric");
}

// Jets of F^2 and the spray around one flag, in the 2n variables (x, y).
struct FlagExpansion {
  int n;
  std::vector<Jet> xs, ys;
  Jet F;
  Jet F2;
  std::vector<Jet> g, g_inv;  // order 2
  std::vector<Jet> G;         // order 2

  FlagExpansion(const FinslerMetric& metric, const FlagPoint& p) : n(metric.dim) {
    check_flag(metric, p);
    const JetSpace& s = JetSpace::get(2 * n, 4);
    for (int i = 0; i < n; ++i) {
      xs.push_back(Jet::variable(s, i, p.x[i]));
      ys.push_back(Jet::variable(s, n + i, p.y[i]));
    }
    F = metric.F(xs, ys);
    if (!(F.value() > 0.0))
      throw FlagDomainError("F is not positive at " + describe(p), p);
    F2 = F * F;
    std::vector<Jet> dy;
    for (int l = 0; l < n; ++l) dy.push_back(F2.differentiate(n + l));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g.push_back(0.5 * dy[i].differentiate(n + j));
    if (!leading_minors_positive(values_of<Jet>(g), n))
      throw FlagDomainError("fundamental tensor is not positive definite at " + describe(p),
                            p);
    g_inv = invert<Jet>(g, n).inverse;
    std::vector<Jet> A;
    for (int l = 0; l < n; ++l) {
      Jet a = -F2.differentiate(l).truncate(2);
      for (int m = 0; m < n; ++m) a += dy[l].differentiate(m) * ys[m];
      A.push_back(std::move(a));
    }
    for (int i = 0; i < n; ++i) {
      Jet s2 = g_inv[i * n] * A[0];
      for (int l = 1; l < n; ++l) s2 += g_inv[i * n + l] * A[l];
      G.push_back(0.25 * s2);
    }
  }

  CurvatureBundle bundle(const FlagPoint& p) const {
    CurvatureBundle b;
    b.n = n;
    b.F = F.value();
    b.g = values_of<Jet>(g);
    b.g_inv = values_of<Jet>(g_inv);
    b.cartan.resize(n * n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          b.cartan[(i * n + j) * n + k] = 0.5 * g[i * n + j].partial({n + k});
    b.spray = values_of<Jet>(G);
    b.riemann.assign(n * n, 0.0);
    const auto& y = p.y;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double r = 2.0 * G[i].partial({k});
        for (int j = 0; j < n; ++j) {
          r -= y[j] * G[i].partial({j, n + k});
          r += 2.0 * b.spray[j] * G[i].partial({n + j, n + k});
          r -= G[i].partial({n + j}) * G[j].partial({n + k});
        }
        b.riemann[i * n + k] = r;
      }
    b.ricci = 0.0;
    for (int i = 0; i < n; ++i) b.ricci += b.riemann[i * n + i];
    return b;
  }

  // S as an order-1 jet, distortion value
  void measure_terms(const MeasureSpec& m, const FlagPoint& p, MeasuredBundle& out) const {
    // log sigma only enters through its first two x-derivatives
    const JetSpace& s2 = JetSpace::get(2 * n, 2);
    std::vector<Jet> xs2;
    for (int i = 0; i < n; ++i) xs2.push_back(Jet::variable(s2, i, p.x[i]));
    const Jet lsig = m.log_density()(xs2);
    Jet S = G[0].differentiate(n);
    for (int i = 1; i < n; ++i) S += G[i].differentiate(n + i);
    for (int i = 0; i < n; ++i) S -= ys[i] * lsig.differentiate(i);
    S = S.truncate(1);
    double sdot = 0.0;
    for (int i = 0; i < n; ++i)
      sdot += p.y[i] * S.partial({i}) - 2.0 * G[i].value() * S.partial({n + i});
    out.S = S.value();
    out.S_dot = sdot;
    const double det = determinant<double>(values_of<Jet>(g), n);
    if (!(det > 0.0)) throw FlagDomainError("det g is not positive at " + describe(p), p);
    out.distortion = 0.5 * std::log(det) - lsig.value();
  }
};

}  // namespace

FinslerMetric riemannian_finsler(const RiemannMetric& h) {
  const int n = h.dim;
  auto metric = h.h;
  FinslerMetric F;
  F.dim = n;
  F.F = FlagFunction::from([n, metric](auto x, auto y) {
    auto a = metric(x);
    auto s = a[0] * y[0] * y[0];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i + j > 0) s += a[i * n + j] * y[i] * y[j];
    return sqrt(s);
  });
  return F;
}

MeasureSpec MeasureSpec::density(ScalarField sigma) {
  return from_log_density(Mode::Density, ScalarField::from([sigma](auto x) {
    auto s = sigma(x);
    if (!(value_of(s) > 0.0)) throw DomainError("density", "measure density is not positive");
    return log(s);
  }));
}

MeasureSpec MeasureSpec::riemannian(const RiemannMetric& h) {
  const int n = h.dim;
  auto metric = h.h;
  return from_log_density(Mode::Density, ScalarField::from([n, metric](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    auto a = metric(x);
    auto det = determinant<T>(a, n);
    if (!(value_of(det) > 0.0)) throw DomainError("density", "det h is not positive");
    return 0.5 * log(det);
  }));
}

MeasureSpec MeasureSpec::weighted(const MeasureSpec& base, ScalarField f) {
  auto ls = base.log_sigma_;
  return from_log_density(Mode::Weighted,
                          ScalarField::from([ls, f](auto x) { return ls(x) - f(x); }));
}

MeasureSpec MeasureSpec::from_log_density(Mode mode, ScalarField log_sigma) {
  MeasureSpec m;
  m.mode_ = mode;
  m.log_sigma_ = std::move(log_sigma);
  return m;
}

double MeasureSpec::density(std::span<const double> x) const {
  return std::exp(log_sigma_(x));
}

CurvatureBundle curvature_bundle(const FinslerMetric& F, const FlagPoint& p) {
  return FlagExpansion(F, p).bundle(p);
}

MeasuredBundle measured_bundle(const FinslerMetric& F, const MeasureSpec& m,
                               const FlagPoint& p) {
  FlagExpansion e(F, p);
  MeasuredBundle out;
  out.curvature = e.bundle(p);
  e.measure_terms(m, p, out);
  return out;
}

double eval_F(const FinslerMetric& F, const FlagPoint& p) {
  check_flag(F, p);
  return F.F(std::span<const double>(p.x), std::span<const double>(p.y));
}

std::vector<double> fundamental_tensor(const FinslerMetric& F, const FlagPoint& p) {
  check_flag(F, p);
  const int n = F.dim;
  const JetSpace& s = JetSpace::get(n, 2);
  std::vector<Jet> xs, ys;
  for (int i = 0; i < n; ++i) {
    xs.emplace_back(s, p.x[i]);
    ys.push_back(Jet::variable(s, i, p.y[i]));
  }
  const Jet f = F.F(xs, ys);
  if (!(f.value() > 0.0)) throw FlagDomainError("F is not positive at " + describe(p), p);
  const Jet f2 = f * f;
  std::vector<double> g(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g[i * n + j] = 0.5 * f2.partial({i, j});
  if (!leading_minors_positive(g, n))
    throw FlagDomainError("fundamental tensor is not positive definite at " + describe(p), p);
  return g;
}

std::vector<double> cartan_tensor(const FinslerMetric& F, const FlagPoint& p) {
  return curvature_bundle(F, p).cartan;
}

std::vector<double> spray(const FinslerMetric& F, const FlagPoint& p) {
  return curvature_bundle(F, p).spray;
}

std::vector<double> riemann_curvature(const FinslerMetric& F, const FlagPoint& p) {
  return curvature_bundle(F, p).riemann;
}

double ricci(const FinslerMetric& F, const FlagPoint& p) { return curvature_bundle(F, p).ricci; }

double distortion(const FinslerMetric& F, const MeasureSpec& m, const FlagPoint& p) {
  return measured_bundle(F, m, p).distortion;
}

double s_curvature(const FinslerMetric& F, const MeasureSpec& m, const FlagPoint& p) {
  return measured_bundle(F, m, p).S;
}

double s_dot(const FinslerMetric& F, const MeasureSpec& m, const FlagPoint& p) {
  return measured_bundle(F, m, p).S_dot;
}

double weighted_ricci(const MeasuredBundle& b, double N) {
  const double n = b.curvature.n;
  if (!(N > n)) throw std::invalid_argument("weighted Ricci curvature needs N > n");
  const double base = b.curvature.ricci + b.S_dot;
  if (std::isinf(N)) return base;
  return base - b.S * b.S / (N - n);
}

double weighted_ricci(const FinslerMetric& F, const MeasureSpec& m, const FlagPoint& p,
                      double N) {
  if (!(N > F.dim)) throw std::invalid_argument("weighted Ricci curvature needs N > n");
  return weighted_ricci(measured_bundle(F, m, p), N);
}

double lie_F2(const FinslerMetric& F, const VectorFieldSpec& V, const FlagPoint& p) {
  check_flag(F, p);
  const int n = F.dim;
  const JetSpace& s = JetSpace::get(2 * n, 1);
  std::vector<Jet> xs, ys;
  for (int i = 0; i < n; ++i) {
    xs.push_back(Jet::variable(s, i, p.x[i]));
    ys.push_back(Jet::variable(s, n + i, p.y[i]));
  }
  const Jet f = F.F(xs, ys);
  if (!(f.value() > 0.0)) throw FlagDomainError("F is not positive at " + describe(p), p);
  const Jet f2 = f * f;
  const auto v = V(xs);
  double out = 0.0;
  for (int i = 0; i < n; ++i) {
    out += v[i].value() * f2.partial({i});
    for (int j = 0; j < n; ++j) out += p.y[j] * v[i].partial({j}) * f2.partial({n + i});
  }
  return out;
}

FlagCurvatureFit flag_curvature_fit(const CurvatureBundle& b, std::span<const double> y) {
  const int n = b.n;
  const double F2 = b.F * b.F;
  std::vector<double> gy(n, 0.0);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) gy[k] += b.g[k * n + l] * y[l];
  // basis tensor F^2 delta^i_k - F F_{y^k} y^i, with F F_{y^k} = g_kl y^l
  std::vector<double> B(n * n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) B[i * n + k] = (i == k ? F2 : 0.0) - y[i] * gy[k];
  FlagCurvatureFit fit;
  const double rnorm = frobenius_norm(b.riemann);
  if (rnorm <= 1e-12 * F2) {
    fit.flat = true;
    return fit;
  }
  double rb = 0.0, bb = 0.0;
  for (int i = 0; i < n * n; ++i) {
    rb += b.riemann[i] * B[i];
    bb += B[i] * B[i];
  }
  fit.K = rb / bb;
  double miss = 0.0;
  for (int i = 0; i < n * n; ++i) {
    const double d = b.riemann[i] - fit.K * B[i];
    miss += d * d;
  }
  fit.anisotropy = std::sqrt(miss) / rnorm;
  return fit;
}

FlagCurvatureFit flag_curvature_fit(const FinslerMetric& F, const FlagPoint& p) {
  return flag_curvature_fit(curvature_bundle(F, p), p.y);
}

namespace fd {

namespace {

std::vector<int> unit(int size, int a, int b = -1) {
  std::vector<int> m(size, 0);
  ++m[a];
  if (b >= 0) ++m[b];
  return m;
}

// absolute step h, independent of the point, so that outer differences of
// the result do not see a varying truncation error
std::vector<double> spray_fixed_step(const FinslerMetric& F, std::span<const double> x,
                                     std::span<const double> y, double h) {
  const int n = F.dim;
  std::vector<double> point(x.begin(), x.end());
  point.insert(point.end(), y.begin(), y.end());
  auto f2 = [&F, n](std::span<const double> z) {
    const double f = F.F(z.subspan(0, n), z.subspan(n, n));
    return std::vector<double>{f * f};
  };
  auto d = [&](const std::vector<int>& m) { return fd_derivative_vector(f2, point, m, h)[0]; };
  std::vector<double> g(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) g[i * n + j] = g[j * n + i] = 0.5 * d(unit(2 * n, n + i, n + j));
  const auto g_inv = invert<double>(g, n).inverse;
  std::vector<double> A(n);
  for (int l = 0; l < n; ++l) {
    A[l] = -d(unit(2 * n, l));
    for (int m = 0; m < n; ++m) A[l] += d(unit(2 * n, m, n + l)) * y[m];
  }
  std::vector<double> G(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) G[i] += 0.25 * g_inv[i * n + l] * A[l];
  return G;
}

}  // namespace

std::vector<double> spray(const FinslerMetric& F, std::span<const double> x,
                          std::span<const double> y, double step) {
  double scale = 1.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  for (double v : y) scale = std::max(scale, std::abs(v));
  return spray_fixed_step(F, x, y, step * scale);
}

Pipeline evaluate(const FinslerMetric& F, const MeasureSpec& m, const FlagPoint& flag,
                  const Steps& steps) {
  check_flag(F, flag);
  const int n = F.dim;
  // every output is positively homogeneous in y, so evaluate on the unit
  // sphere and rescale; the steps then only have to fit the x-variation
  double ynorm = 0.0;
  for (double v : flag.y) ynorm += v * v;
  ynorm = std::sqrt(ynorm);
  FlagPoint p = flag;
  for (double& v : p.y) v /= ynorm;
  std::vector<double> point(p.x);
  point.insert(point.end(), p.y.begin(), p.y.end());
  auto G = [&F, n, &steps](std::span<const double> z) {
    return spray_fixed_step(F, z.subspan(0, n), z.subspan(n, n), steps.inner);
  };
  auto ls = [&m](std::span<const double> z) {
    return std::vector<double>{m.log_density()(z)};
  };
  const double scale = 1.0;

  auto at_step = [&](double h) {
    Pipeline out;
    out.spray = G(point);
    bool warn = false;
    std::vector<std::vector<double>> dG(2 * n);
    for (int v = 0; v < 2 * n; ++v) dG[v] = fd_derivative_vector(G, point, unit(2 * n, v), h, &warn);
    // ddG[a][b]: d^2 G / d z_a d y_b
    std::vector<std::vector<std::vector<double>>> ddG(2 * n, std::vector<std::vector<double>>(n));
    for (int a = 0; a < 2 * n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a >= n && a - n > b) {
          ddG[a][b] = ddG[n + b][a - n];
          continue;
        }
        ddG[a][b] = fd_derivative_vector(G, point, unit(2 * n, a, n + b), h, &warn);
      }
    out.riemann.assign(n * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double r = 2.0 * dG[k][i];
        for (int j = 0; j < n; ++j) {
          r -= p.y[j] * ddG[j][k][i];
          r += 2.0 * out.spray[j] * ddG[n + j][k][i];
          r -= dG[n + j][i] * dG[n + k][j];
        }
        out.riemann[i * n + k] = r;
      }
    for (int i = 0; i < n; ++i) out.ricci += out.riemann[i * n + i];

    // S = d_{y^i} G^i - y^i d_i log sigma, differentiated once more for S_dot
    auto lsx = [&ls, n](std::span<const double> z) { return ls(z.subspan(0, n)); };
    std::vector<double> dls(n);
    std::vector<std::vector<double>> ddls(n, std::vector<double>(n));
    const double hx = steps.inner * scale;
    for (int i = 0; i < n; ++i) {
      dls[i] = fd_derivative_vector(lsx, point, unit(2 * n, i), hx, &warn)[0];
      for (int j = i; j < n; ++j)
        ddls[i][j] = ddls[j][i] = fd_derivative_vector(lsx, point, unit(2 * n, i, j), hx, &warn)[0];
    }
    out.S = 0.0;
    for (int i = 0; i < n; ++i) out.S += dG[n + i][i] - p.y[i] * dls[i];
    double sdot = 0.0;
    for (int k = 0; k < n; ++k) {
      double dxS = 0.0, dyS = -dls[k];
      for (int i = 0; i < n; ++i) {
        dxS += ddG[k][i][i] - p.y[i] * ddls[k][i];
        dyS += ddG[n + k][i][i];
      }
      sdot += p.y[k] * dxS - 2.0 * out.spray[k] * dyS;
    }
    out.S_dot = sdot;
    out.step_warning = warn;
    return out;
  };

  // fd_derivative_vector leaves an h^4 error; a second Richardson level on
  // the outer differences removes it
  const Pipeline coarse = at_step(steps.outer * scale);
  Pipeline out = at_step(0.5 * steps.outer * scale);
  auto extrapolate = [](double fine, double rough) { return (16.0 * fine - rough) / 15.0; };
  for (std::size_t k = 0; k < out.riemann.size(); ++k)
    out.riemann[k] = extrapolate(out.riemann[k], coarse.riemann[k]);
  out.ricci = extrapolate(out.ricci, coarse.ricci);
  out.S = extrapolate(out.S, coarse.S);
  out.S_dot = extrapolate(out.S_dot, coarse.S_dot);
  out.step_warning = out.step_warning || coarse.step_warning;
  const double y2 = ynorm * ynorm;
  for (double& v : out.spray) v *= y2;
  for (double& v : out.riemann) v *= y2;
  out.ricci *= y2;
  out.S *= ynorm;
  out.S_dot *= y2;
  return out;
}

}  // namespace fd

}  // namespace finsler
