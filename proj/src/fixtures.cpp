#include "finsler/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace finsler {

namespace {

constexpr double kPi = 3.14159265358979323846;

ArrayField euclidean(int n) {
  return ArrayField::from([n](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    std::vector<T> h(n * n, constant_like(x[0], 0.0));
    for (int i = 0; i < n; ++i) h[i * n + i] = constant_like(x[0], 1.0);
    return h;
  });
}

// uniform in the ball of given radius, by rejection
std::vector<double> in_ball(std::mt19937_64& rng, int n, double radius) {
  std::uniform_real_distribution<double> u(-radius, radius);
  for (;;) {
    std::vector<double> x(n);
    double r2 = 0.0;
    for (auto& v : x) {
      v = u(rng);
      r2 += v * v;
    }
    if (r2 < radius * radius) return x;
  }
}

double spectral_norm(const std::vector<double>& Q, int n) {
  // power iteration on Q^T Q
  std::vector<double> v(n, 1.0), w(n);
  double lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    std::vector<double> u(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) u[i] += Q[i * n + j] * v[j];
    std::fill(w.begin(), w.end(), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) w[j] += Q[i * n + j] * u[i];
    double nw = 0.0;
    for (double c : w) nw += c * c;
    nw = std::sqrt(nw);
    if (nw == 0.0) return 0.0;
    lam = nw;
    for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
  }
  return std::sqrt(lam);
}

double antisymmetry_defect(const std::vector<double>& Q, int n) {
  double m = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m = std::max(m, std::abs(Q[i * n + j] + Q[j * n + i]));
  return m;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

// dt^2 + w(t)^2 h_sphere(x) on coordinates (t, x)
template <class Warp>
ArrayField warped_product(int k, double mu, Warp warp) {
  const ArrayField sphere = round_sphere_chart(k, mu);
  return ArrayField::from([k, sphere, warp](auto X) {
    using T = std::decay_t<decltype(X[0])>;
    const int n = k + 1;
    const std::vector<T> hs = sphere(X.subspan(1));
    const T w = warp(X[0]);
    const T w2 = w * w;
    std::vector<T> h(n * n, constant_like(X[0], 0.0));
    h[0] = constant_like(X[0], 1.0);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) h[(i + 1) * n + j + 1] = w2 * hs[i * k + j];
    return h;
  });
}

// (0, W_sphere(x)) on coordinates (t, x)
VectorFieldSpec lifted_killing(const SphereKilling& data) {
  const VectorFieldSpec Wh = sphere_killing_field(data);
  return ArrayField::from([Wh](auto X) {
    using T = std::decay_t<decltype(X[0])>;
    std::vector<T> W{constant_like(X[0], 0.0)};
    for (auto& c : Wh(X.subspan(1))) W.push_back(c);
    return W;
  });
}

std::vector<std::pair<std::string, double>> validate_killing(const SphereKilling& s) {
  const int k = 2 * s.m - 1;
  if (s.m < 1 || static_cast<int>(s.Q.size()) != k * k || static_cast<int>(s.d.size()) != k)
    throw FixtureError("sphere Killing data needs a (2m-1)x(2m-1) Q and a (2m-1)-vector d");
  if (!(s.mu > 0.0)) throw FixtureError("sphere curvature mu must be positive");
  if (!(norm(s.d) < 1.0)) throw FixtureError("|d| must be below 1");
  double c1 = 0.0, c2 = 0.0;
  const double d2 = norm(s.d) * norm(s.d);
  for (int i = 0; i < k; ++i) {
    double qd = 0.0;
    for (int j = 0; j < k; ++j) {
      double qtq = 0.0;
      for (int l = 0; l < k; ++l) qtq += s.Q[l * k + i] * s.Q[l * k + j];
      const double r = qtq + s.mu * s.d[i] * s.d[j] - (i == j ? s.mu * d2 : 0.0);
      c1 = std::max(c1, std::abs(r));
      qd += s.Q[i * k + j] * s.d[j];
    }
    c2 = std::max(c2, std::abs(qd));
  }
  const double c0 = antisymmetry_defect(s.Q, k);
  std::vector<std::pair<std::string, double>> out{
      {"Q^T + Q = 0", c0}, {"Q^T Q + mu d d^T = mu |d|^2 E", c1}, {"Q d = 0", c2}};
  std::string failed;
  for (const auto& [name, r] : out)
    if (r > 1e-12) failed += (failed.empty() ? "" : "; ") + name + " (residual " + std::to_string(r) + ")";
  if (!failed.empty()) throw FixtureError("sphere Killing constraints fail: " + failed);
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

ArrayField round_sphere_chart(int dim, double mu) {
  return ArrayField::from([dim, mu](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    T r2 = x[0] * x[0];
    for (int i = 1; i < dim; ++i) r2 += x[i] * x[i];
    const T q = 1.0 + mu * r2;
    const T q2 = q * q;
    std::vector<T> h;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        T v = -mu * x[i] * x[j] / q2;
        if (i == j) v += 1.0 / q;
        h.push_back(std::move(v));
      }
    return h;
  });
}

ArrayField round_sphere_chart_inverse(int dim, double mu) {
  return ArrayField::from([dim, mu](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    T r2 = x[0] * x[0];
    for (int i = 1; i < dim; ++i) r2 += x[i] * x[i];
    const T q = 1.0 + mu * r2;
    std::vector<T> h;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        T v = mu * x[i] * x[j];
        if (i == j) v += 1.0;
        h.push_back(q * v);
      }
    return h;
  });
}

VectorFieldSpec sphere_killing_field(const SphereKilling& s) {
  const int k = 2 * s.m - 1;
  return ArrayField::from([k, s](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    T xd = s.d[0] * x[0];
    for (int i = 1; i < k; ++i) xd += s.d[i] * x[i];
    std::vector<T> W;
    for (int i = 0; i < k; ++i) {
      T w = s.mu * xd * x[i] + s.d[i];
      for (int j = 0; j < k; ++j) w += s.Q[i * k + j] * x[j];
      W.push_back(std::move(w));
    }
    return W;
  });
}

SphereKilling default_sphere_killing(int m, double mu) {
  if (m < 2) throw FixtureError("cylinder fixtures need m >= 2");
  const int k = 2 * m - 1;
  SphereKilling s;
  s.m = m;
  s.mu = mu;
  s.Q.assign(k * k, 0.0);
  s.d.assign(k, 0.0);
  s.d[0] = 0.5;
  const double q = 0.5 * std::sqrt(mu);
  for (int i = 1; i + 1 < k; i += 2) {
    s.Q[i * k + i + 1] = q;
    s.Q[(i + 1) * k + i] = -q;
  }
  return s;
}

Fixture gaussian(double rho, std::vector<double> Q, std::vector<double> C, int n, double radius) {
  if (n < 2) throw FixtureError("gaussian fixture needs n >= 2");
  if (static_cast<int>(Q.size()) != n * n || static_cast<int>(C.size()) != n)
    throw FixtureError("gaussian fixture needs an n x n matrix Q and an n-vector C");
  if (antisymmetry_defect(Q, n) > 1e-14) throw FixtureError("Q must be antisymmetric");
  if (rho != 0.0 && norm(C) > 0.0)
    throw FixtureError("a constant part C of W is only compatible with rho = 0");
  const double bound = spectral_norm(Q, n) * radius + norm(C);
  if (!(bound < 1.0))
    throw FixtureError("||Qx + C|| reaches " + fmt(bound) + " on |x| < " + fmt(radius));

  Fixture fx;
  fx.name = "gaussian";
  fx.dim = n;
  fx.riemannian = norm(Q) == 0.0 && norm(C) == 0.0;
  fx.summary = "Euclidean h with W = Qx + C and f = rho |x|^2 / 2 (rho = " + fmt(rho) + ")";
  fx.nav.dim = n;
  fx.nav.h = euclidean(n);
  fx.nav.W = ArrayField::from([n, Q, C](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    std::vector<T> W;
    for (int i = 0; i < n; ++i) {
      T w = constant_like(x[0], C[i]);
      for (int j = 0; j < n; ++j) w += Q[i * n + j] * x[j];
      W.push_back(std::move(w));
    }
    return W;
  });
  fx.f = ScalarField::from([n, rho](auto x) {
    auto s = x[0] * x[0];
    for (int i = 1; i < n; ++i) s += x[i] * x[i];
    return 0.5 * rho * s;
  });
  fx.expected.kappa = rho;
  fx.expected.mu = rho;
  fx.expected.sigma = 0.0;
  fx.expected.flag_curvature = [](std::span<const double>) { return 0.0; };
  if (fx.riemannian) {
    // grad f = rho x
    fx.V = ArrayField::from([n, rho](auto x) {
      using T = std::decay_t<decltype(x[0])>;
      std::vector<T> V;
      for (int i = 0; i < n; ++i) V.push_back(rho * x[i]);
      return V;
    });
    fx.expected.kappa_V = rho;
  }
  fx.sample_point = [n, radius](std::mt19937_64& rng) { return in_ball(rng, n, radius); };
  fx.domain = "|x| < " + fmt(radius);
  fx.constraints = {{"Q^T + Q = 0", antisymmetry_defect(Q, n)}};
  return fx;
}

Fixture gaussian() {
  std::vector<double> Q(9, 0.0);
  Q[1] = 0.5;
  Q[3] = -0.5;
  return gaussian(1.0, Q, {0.0, 0.0, 0.0}, 3);
}

Fixture gaussian_riemannian(double rho, int n) {
  auto fx = gaussian(rho, std::vector<double>(n * n, 0.0), std::vector<double>(n, 0.0), n);
  fx.name = "gaussian-riemannian";
  return fx;
}

Fixture cigar() {
  Fixture fx;
  fx.name = "cigar";
  fx.dim = 2;
  fx.summary = "h = dt^2 + tanh^2 t dtheta^2, W = d/dtheta, f = -2 log cosh t";
  fx.nav.dim = 2;
  fx.nav.h = ArrayField::from([](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    auto th = tanh(x[0]);
    return std::vector<T>{constant_like(x[0], 1.0), constant_like(x[0], 0.0),
                          constant_like(x[0], 0.0), th * th};
  });
  fx.nav.W = ArrayField::from([](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    return std::vector<T>{constant_like(x[0], 0.0), constant_like(x[0], 1.0)};
  });
  fx.f = ScalarField::from([](auto x) { return -2.0 * log(cosh(x[0])); });
  fx.expected.kappa = 0.0;
  fx.expected.mu = 0.0;
  fx.expected.sigma = 0.0;
  fx.expected.flag_curvature = [](std::span<const double> x) {
    return 2.0 / std::pow(std::cosh(x[0]), 2);
  };
  fx.sample_point = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> t(0.2, 2.0), th(-kPi, kPi);
    const double a = t(rng);
    return std::vector<double>{a, th(rng)};
  };
  fx.domain = "t in [0.2, 2], theta in [-pi, pi]";
  return fx;
}

Fixture shrinking(const SphereKilling& data) {
  auto constraints = validate_killing(data);
  const int k = 2 * data.m - 1;
  const double mu = data.mu;
  Fixture fx;
  fx.name = "shrinking";
  fx.dim = k + 1;
  fx.summary = "R x S^" + std::to_string(k) + " product, W the sphere Killing field, f = (m-1) mu t^2";
  fx.nav.dim = k + 1;
  fx.nav.h = warped_product(k, mu, [](auto t) { return constant_like(t, 1.0); });
  fx.nav.W = lifted_killing(data);
  fx.riemannian = norm(data.d) == 0.0 && norm(data.Q) == 0.0;
  const double c = (data.m - 1) * mu;
  fx.f = ScalarField::from([c](auto x) { return c * x[0] * x[0]; });
  fx.expected.kappa = 2.0 * c;
  fx.expected.mu = 2.0 * c;
  fx.expected.sigma = 0.0;
  const double r = 2.0 / std::sqrt(mu);
  fx.sample_point = [k, r](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> t(-1.5, 1.5);
    std::vector<double> X{t(rng)};
    for (double v : in_ball(rng, k, r)) X.push_back(v);
    return X;
  };
  fx.domain = "t in [-1.5, 1.5], |x| < " + fmt(r);
  fx.constraints = std::move(constraints);
  return fx;
}

Fixture shrinking(int m, double mu) { return shrinking(default_sphere_killing(m, mu)); }

Fixture expanding(const SphereKilling& data) {
  if (data.mu != 1.0) throw FixtureError("the expanding cylinder uses the unit sphere (mu = 1)");
  auto constraints = validate_killing(data);
  const int k = 2 * data.m - 1;
  Fixture fx;
  fx.name = "expanding";
  fx.dim = k + 1;
  fx.summary = "(0,1) x S^" + std::to_string(k) +
               " with h = dt^2 + t^2 h_sphere, W the sphere Killing field, f = -(m-1) t^2";
  fx.nav.dim = k + 1;
  fx.nav.h = warped_product(k, 1.0, [](auto t) { return t; });
  fx.nav.W = lifted_killing(data);
  fx.riemannian = norm(data.d) == 0.0 && norm(data.Q) == 0.0;
  const double c = data.m - 1.0;
  fx.f = ScalarField::from([c](auto x) { return -c * x[0] * x[0]; });
  fx.expected.kappa = -2.0 * c;
  fx.expected.mu = -2.0 * c;
  fx.expected.sigma = 0.0;
  // a cone over the unit sphere is flat, and W is Killing
  fx.expected.flag_curvature = [](std::span<const double>) { return 0.0; };
  fx.sample_point = [k](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> t(0.2, 0.9);
    std::vector<double> X{t(rng)};
    for (double v : in_ball(rng, k, 2.0)) X.push_back(v);
    return X;
  };
  fx.domain = "t in (0.2, 0.9), |x| < 2";
  fx.constraints = std::move(constraints);
  return fx;
}

Fixture expanding(int m) { return expanding(default_sphere_killing(m, 1.0)); }

Fixture einstein_sphere() {
  const auto data = default_sphere_killing(2, 1.0);
  auto constraints = validate_killing(data);
  Fixture fx;
  fx.name = "einstein-sphere";
  fx.dim = 3;
  fx.summary = "round S^3 with a unit-length-1/2 Killing field; V = W, f = 0";
  fx.nav.dim = 3;
  fx.nav.h = round_sphere_chart(3, 1.0);
  fx.nav.W = sphere_killing_field(data);
  fx.f = ScalarField::from([](auto x) { return constant_like(x[0], 0.0); });
  fx.V = fx.nav.W;
  fx.expected.kappa = 2.0;
  fx.expected.mu = 2.0;
  fx.expected.sigma = 0.0;
  fx.expected.kappa_V = 2.0;
  fx.expected.mu_einstein = 2.0;
  fx.expected.flag_curvature = [](std::span<const double>) { return 1.0; };
  fx.sample_point = [](std::mt19937_64& rng) { return in_ball(rng, 3, 2.0); };
  fx.domain = "|x| < 2";
  fx.constraints = std::move(constraints);
  return fx;
}

Fixture minkowski_homothetic() {
  const std::vector<double> C{0.3, -0.2, 0.1};
  Fixture fx;
  fx.name = "minkowski-homothetic";
  fx.dim = 3;
  fx.summary = "Euclidean h with constant W (a Minkowski norm); V = x, f = 0";
  fx.nav.dim = 3;
  fx.nav.h = euclidean(3);
  fx.nav.W = ArrayField::from([C](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    return std::vector<T>{constant_like(x[0], C[0]), constant_like(x[0], C[1]),
                          constant_like(x[0], C[2])};
  });
  fx.f = ScalarField::from([](auto x) { return constant_like(x[0], 0.0); });
  fx.V = ArrayField::from([](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    return std::vector<T>{x[0], x[1], x[2]};
  });
  fx.expected.kappa = 0.0;
  fx.expected.mu = 0.0;
  fx.expected.sigma = 0.0;
  fx.expected.kappa_V = 1.0;
  fx.expected.mu_einstein = 0.0;
  fx.expected.flag_curvature = [](std::span<const double>) { return 0.0; };
  fx.sample_point = [](std::mt19937_64& rng) { return in_ball(rng, 3, 1.0); };
  fx.domain = "|x| < 1";
  return fx;
}

std::vector<std::string> fixture_names() {
  return {"cigar",           "einstein-sphere", "expanding",           "gaussian",
          "gaussian-riemannian", "minkowski-homothetic", "shrinking"};
}

Fixture make_fixture(const std::string& name) {
  if (name == "gaussian") return gaussian();
  if (name == "gaussian-riemannian") return gaussian_riemannian();
  if (name == "cigar") return cigar();
  if (name == "shrinking") return shrinking();
  if (name == "expanding") return expanding();
  if (name == "einstein-sphere") return einstein_sphere();
  if (name == "minkowski-homothetic") return minkowski_homothetic();
  throw UnknownFixture("unknown fixture '" + name + "'");
}

std::vector<FlagPoint> sample_flags(const Fixture& fx, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<FlagPoint> out;
  out.reserve(count);
  while (out.size() < count) {
    FlagPoint p;
    p.x = fx.sample_point(rng);
    for (int i = 0; i < fx.dim; ++i) p.y.push_back(g(rng));
    if (norm(p.y) < 1e-3) continue;
    out.push_back(std::move(p));
  }
  return out;
}

Perturbation parse_perturbation(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("perturbation must be field:eps");
  Perturbation p;
  p.field = text.substr(0, colon);
  if (p.field != "f" && p.field != "W" && p.field != "kappa" && p.field != "mu")
    throw std::invalid_argument("perturbable fields are f, W, kappa, mu; got '" + p.field + "'");
  const std::string num = text.substr(colon + 1);
  std::size_t used = 0;
  try {
    p.eps = std::stod(num, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != num.size() || !std::isfinite(p.eps))
    throw std::invalid_argument("bad perturbation size '" + num + "'");
  return p;
}

Fixture perturbed(const Fixture& fx, const Perturbation& p) {
  Fixture out = fx;
  const double eps = p.eps;
  if (p.field == "f") {
    const ScalarField f = fx.f;
    out.f = ScalarField::from([f, eps](auto x) { return f(x) + 0.5 * eps * x[0] * x[0]; });
  } else if (p.field == "W") {
    const VectorFieldSpec W = fx.nav.W;
    out.nav.W = ArrayField::from([W, eps](auto x) {
      auto w = W(x);
      w[0] += eps * x[0];
      return w;
    });
    out.riemannian = false;
  } else if (p.field == "kappa") {
    out.expected.kappa += eps;
    if (out.expected.kappa_V) *out.expected.kappa_V += eps;
  } else if (p.field == "mu") {
    out.expected.mu += eps;
    if (out.expected.mu_einstein) *out.expected.mu_einstein += eps;
  } else {
    throw std::invalid_argument("unknown perturbation field '" + p.field + "'");
  }
  out.summary += " [perturbed " + p.field + " by " + fmt(eps) + "]";
  return out;
}

}  // namespace finsler
