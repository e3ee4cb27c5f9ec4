#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "finsler/finsler_core.hpp"
#include "finsler/linalg.hpp"

namespace finsler {
namespace {

RiemannMetric euclidean(int n) {
  return {n, ArrayField::from([n](auto x) {
            using T = std::decay_t<decltype(x[0])>;
            std::vector<T> h(n * n, constant_like(x[0], 0.0));
            for (int i = 0; i < n; ++i) h[i * n + i] = constant_like(x[0], 1.0);
            return h;
          })};
}

RiemannMetric cigar_metric() {
  return {2, ArrayField::from([](auto x) {
            auto th = tanh(x[0]);
            using T = std::decay_t<decltype(x[0])>;
            return std::vector<T>{constant_like(x[0], 1.0), constant_like(x[0], 0.0),
                                  constant_like(x[0], 0.0), th * th};
          })};
}

RiemannMetric sphere_metric(int n, double mu) {
  return {n, ArrayField::from([n, mu](auto x) {
            auto r2 = x[0] * x[0];
            for (int i = 1; i < n; ++i) r2 += x[i] * x[i];
            auto q = 1.0 + mu * r2;
            using T = std::decay_t<decltype(x[0])>;
            std::vector<T> h;
            for (int i = 0; i < n; ++i)
              for (int j = 0; j < n; ++j)
                h.push_back((i == j ? 1.0 / q : 0.0 * q) - mu * x[i] * x[j] / (q * q));
            return h;
          })};
}

// Euclidean alpha plus a non-closed 1-form with |b| < 1/2 on |x| < 2.
FinslerMetric test_randers() {
  FinslerMetric F;
  F.dim = 3;
  F.F = FlagFunction::from([](auto x, auto y) {
    auto a2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    auto b0 = 0.2 * sin(x[1]);
    auto b1 = 0.1 * x[0] * x[2] + 0.05;
    auto b2 = 0.15 * cos(x[0] + 0.5 * x[1]);
    return sqrt(a2) + b0 * y[0] + b1 * y[1] + b2 * y[2];
  });
  return F;
}

// alpha Euclidean, beta = c x.dy, closed; the spray is (c |y|^2 / 2F) y
FinslerMetric closed_randers(double c) {
  FinslerMetric F;
  F.dim = 3;
  F.F = FlagFunction::from([c](auto x, auto y) {
    auto a2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    return sqrt(a2) + c * (x[0] * y[0] + x[1] * y[1] + x[2] * y[2]);
  });
  return F;
}

std::vector<double> random_vector(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (double& c : v) c = u(rng);
  return v;
}

double rel(double a, double b, double scale) { return std::abs(a - b) / std::max(1.0, scale); }

}  // namespace

TEST_CASE("homogeneity in y") {
  const auto F = test_randers();
  const auto m = MeasureSpec::density(ScalarField::from([](auto x) { return 1.0 + 0.1 * x[0] * x[0]; }));
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 15; ++trial) {
    const auto x = random_vector(rng, 3, 1.5);
    const auto y = random_vector(rng, 3, 1.0);
    const double lam = 0.4 + 2.0 * std::abs(x[0]);
    std::vector<double> ly(y);
    for (double& v : ly) v *= lam;
    const auto a = measured_bundle(F, m, {0, x, y});
    const auto b = measured_bundle(F, m, {0, x, ly});
    const double F2 = a.curvature.F * a.curvature.F;
    CHECK(b.curvature.F == doctest::Approx(lam * a.curvature.F).epsilon(1e-13));
    for (int i = 0; i < 9; ++i) {
      CHECK(rel(b.curvature.g[i], a.curvature.g[i], 1.0) < 1e-12);
      CHECK(rel(b.curvature.riemann[i], lam * lam * a.curvature.riemann[i], lam * lam * F2) <
            1e-11);
    }
    for (int i = 0; i < 3; ++i)
      CHECK(rel(b.curvature.spray[i], lam * lam * a.curvature.spray[i], lam * lam * F2) < 1e-12);
    CHECK(rel(b.curvature.ricci, lam * lam * a.curvature.ricci, lam * lam * F2) < 1e-11);
    CHECK(rel(b.S, lam * a.S, lam * a.curvature.F) < 1e-12);
    CHECK(rel(b.S_dot, lam * lam * a.S_dot, lam * lam * F2) < 1e-11);
    CHECK(b.distortion == doctest::Approx(a.distortion).epsilon(1e-12));
  }
}

TEST_CASE("Euler identities") {
  const auto F = test_randers();
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 15; ++trial) {
    const auto x = random_vector(rng, 3, 1.5);
    const auto y = random_vector(rng, 3, 1.0);
    const auto b = curvature_bundle(F, {0, x, y});
    const double F2 = b.F * b.F;
    CHECK(quadratic_form(b.g, y) == doctest::Approx(F2).epsilon(1e-12));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double cy = 0.0;
        for (int k = 0; k < 3; ++k) cy += b.cartan[(i * 3 + j) * 3 + k] * y[k];
        CHECK(std::abs(cy) < 1e-12);
      }
    // R^i_k y^k = 0 and g_ij R^j_k is symmetric
    for (int i = 0; i < 3; ++i) {
      double ry = 0.0;
      for (int k = 0; k < 3; ++k) ry += b.riemann[i * 3 + k] * y[k];
      CHECK(std::abs(ry) < 1e-11 * std::max(1.0, F2));
    }
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        double gr = 0.0, rg = 0.0;
        for (int j = 0; j < 3; ++j) {
          gr += b.g[i * 3 + j] * b.riemann[j * 3 + k];
          rg += b.g[k * 3 + j] * b.riemann[j * 3 + i];
        }
        CHECK(std::abs(gr - rg) < 1e-11 * std::max(1.0, F2));
      }
  }
}

TEST_CASE("x-independent metrics have zero spray and curvature") {
  FinslerMetric F;
  F.dim = 2;
  F.F = FlagFunction::from([](auto, auto y) {
    auto a = sqrt(y[0] * y[0] + 2.0 * y[1] * y[1]);
    return a + 0.3 * y[0] - 0.1 * y[1];
  });
  const auto b = curvature_bundle(F, {0, {0.4, -0.7}, {1.0, 0.5}});
  for (double v : b.spray) CHECK(v == 0.0);
  for (double v : b.riemann) CHECK(v == 0.0);
  CHECK(flag_curvature_fit(b, std::vector<double>{1.0, 0.5}).flat);
}

TEST_CASE("closed Randers metric has the projective spray") {
  const double c = 0.2;
  const auto F = closed_randers(c);
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_vector(rng, 3, 1.5);
    const auto y = random_vector(rng, 3, 1.0);
    const double Fv = eval_F(F, {0, x, y});
    const double y2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    const auto G = spray(F, {0, x, y});
    for (int i = 0; i < 3; ++i)
      CHECK(G[i] == doctest::Approx(c * y2 / (2.0 * Fv) * y[i]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("Riemannian reduction") {
  std::mt19937_64 rng(43);
  const auto h = sphere_metric(3, 0.8);
  const auto F = riemannian_finsler(h);
  auto f = ScalarField::from([](auto x) { return x[0] * x[1] + 0.5 * sin(x[2]); });
  const auto vol = MeasureSpec::riemannian(h);
  const auto weighted = MeasureSpec::weighted(vol, f);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_vector(rng, 3, 1.2);
    const auto y = random_vector(rng, 3, 1.0);
    const FlagPoint p{0, x, y};
    const auto gamma = christoffel(h, x);
    const auto G = spray(F, p);
    for (int i = 0; i < 3; ++i) {
      double expected = 0.0;
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) expected += 0.5 * gamma[(i * 3 + j) * 3 + k] * y[j] * y[k];
      CHECK(G[i] == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
    }
    const auto fund = fundamental_tensor(F, p);
    LeviCivita lc(h, x, 1);
    const auto hv = values_of<Jet>(lc.metric());
    for (int i = 0; i < 9; ++i) CHECK(fund[i] == doctest::Approx(hv[i]).epsilon(1e-12).scale(1.0));
    for (double v : cartan_tensor(F, p)) CHECK(std::abs(v) < 1e-12);

    const double h2 = quadratic_form(hv, y);
    CHECK(ricci(F, p) == doctest::Approx(riemann_ricci(h, x, y)).epsilon(1e-11));
    CHECK(ricci(F, p) == doctest::Approx(2.0 * 0.8 * h2).epsilon(1e-11));
    const auto fit = flag_curvature_fit(F, p);
    CHECK(fit.K == doctest::Approx(0.8).epsilon(1e-11));
    CHECK(fit.anisotropy < 1e-11);

    CHECK(std::abs(s_curvature(F, vol, p)) < 1e-12);
    CHECK(std::abs(distortion(F, vol, p)) < 1e-12);
    const auto mb = measured_bundle(F, weighted, p);
    const double df = (x[1] * y[0] + x[0] * y[1] + 0.5 * std::cos(x[2]) * y[2]);
    CHECK(mb.S == doctest::Approx(df).epsilon(1e-12).scale(1.0));
    CHECK(mb.S_dot == doctest::Approx(hessian(h, f, x, y)).epsilon(1e-11).scale(1.0));
    CHECK(weighted_ricci(mb) ==
          doctest::Approx(riemann_ricci(h, x, y) + hessian(h, f, x, y)).epsilon(1e-11));
  }
}

TEST_CASE("cigar Ricci curvature") {
  const auto F = riemannian_finsler(cigar_metric());
  for (double t : {0.2, 0.5, 1.0, 1.5, 2.0}) {
    const std::vector<double> y{0.3, -1.2};
    const FlagPoint p{0, {t, 0.7}, y};
    const double Fv = eval_F(F, p);
    const double ch = std::cosh(t);
    CHECK(ricci(F, p) == doctest::Approx(2.0 / (ch * ch) * Fv * Fv).epsilon(1e-11));
    CHECK(flag_curvature_fit(F, p).K == doctest::Approx(2.0 / (ch * ch)).epsilon(1e-11));
  }
}

TEST_CASE("Euclidean flags are flat") {
  const auto F = riemannian_finsler(euclidean(3));
  const FlagPoint p{0, {1.0, 2.0, 3.0}, {0.1, 0.2, -0.3}};
  CHECK(ricci(F, p) == 0.0);
  CHECK(flag_curvature_fit(F, p).flat);
}

TEST_CASE("weighted Ricci curvature in N") {
  const auto F = test_randers();
  const auto m = MeasureSpec::density(ScalarField::from([](auto x) { return exp(0.3 * x[0] - 0.2 * x[1] * x[2]); }));
  const FlagPoint p{0, {0.3, -0.4, 0.5}, {0.6, 0.2, -0.9}};
  const auto b = measured_bundle(F, m, p);
  CHECK(b.S != 0.0);
  double prev = weighted_ricci(b, 3.5);
  for (double N : {4.0, 6.0, 10.0, 100.0, 1e6}) {
    const double r = weighted_ricci(b, N);
    CHECK(r >= prev);
    prev = r;
  }
  CHECK(weighted_ricci(b) >= prev);
  CHECK(weighted_ricci(b) == doctest::Approx(b.curvature.ricci + b.S_dot));
  CHECK_THROWS_AS(weighted_ricci(b, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(weighted_ricci(F, m, p, 2.0), std::invalid_argument);
}

TEST_CASE("Lie derivative of F^2") {
  const auto F = riemannian_finsler(euclidean(3));
  const std::vector<double> x{0.2, 0.1, -0.4}, y{0.5, 1.0, 0.3};
  auto radial = ArrayField::from([](auto x) { return std::vector<std::decay_t<decltype(x[0])>>{x[0], x[1], x[2]}; });
  CHECK(lie_F2(F, radial, {0, x, y}) == doctest::Approx(2.0 * (0.25 + 1.0 + 0.09)));
  CHECK(lie_F2(F, zero_vector_field(3), {0, x, y}) == 0.0);
  // agrees with lie_h2 on a curved metric
  const auto h = sphere_metric(3, 1.0);
  const auto Fh = riemannian_finsler(h);
  auto V = ArrayField::from([](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    return std::vector<T>{sin(x[1]), x[0] * x[2], constant_like(x[0], 0.3)};
  });
  CHECK(lie_F2(Fh, V, {0, x, y}) == doctest::Approx(lie_h2(h, V, x, y)).epsilon(1e-12));
}

TEST_CASE("domain errors") {
  const auto F = test_randers();
  CHECK_THROWS_AS(eval_F(F, {0, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}), std::invalid_argument);
  FinslerMetric bad;
  bad.dim = 2;
  bad.F = FlagFunction::from([](auto, auto y) { return y[0] - 2.0 * y[1] + 0.0 * y[0]; });
  CHECK_THROWS_AS(curvature_bundle(bad, {0, {0.0, 0.0}, {1.0, 1.0}}), FlagDomainError);
  FinslerMetric indefinite;
  indefinite.dim = 2;
  indefinite.F = FlagFunction::from([](auto, auto y) {
    return y[0] + 0.1 * y[1] + 0.0 * y[0];
  });
  CHECK_THROWS_AS(fundamental_tensor(indefinite, {0, {0.0, 0.0}, {1.0, 1.0}}), FlagDomainError);
}

TEST_CASE("jet and finite-difference pipelines agree") {
  const auto F = test_randers();
  const auto m = MeasureSpec::density(ScalarField::from([](auto x) { return exp(0.3 * x[0] - 0.2 * x[1] * x[2]); }));
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = random_vector(rng, 3, 1.0);
    const auto y = random_vector(rng, 3, 1.0);
    const FlagPoint p{0, x, y};
    const auto jet = measured_bundle(F, m, p);
    const auto fdp = fd::evaluate(F, m, p);
    const double F2 = jet.curvature.F * jet.curvature.F;
    CHECK_FALSE(fdp.step_warning);
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(fdp.spray[i] - jet.curvature.spray[i]) /
                std::max(std::abs(jet.curvature.spray[i]), F2) < 1e-4);
    for (int i = 0; i < 9; ++i)
      CHECK(std::abs(fdp.riemann[i] - jet.curvature.riemann[i]) /
                std::max(std::abs(jet.curvature.riemann[i]), F2) < 1e-4);
    CHECK(std::abs(fdp.ricci - jet.curvature.ricci) / std::max(std::abs(jet.curvature.ricci), F2) <
          1e-4);
    CHECK(std::abs(fdp.S - jet.S) / std::max(std::abs(jet.S), jet.curvature.F) < 1e-4);
    CHECK(std::abs(fdp.S_dot - jet.S_dot) / std::max(std::abs(jet.S_dot), F2) < 1e-4);
  }
}

}  // namespace finsler
