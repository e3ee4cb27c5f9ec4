#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "finsler/linalg.hpp"
#include "finsler/riemann.hpp"

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

// round metric of curvature mu in the projective chart
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

std::vector<double> random_vector(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (double& c : v) c = u(rng);
  return v;
}

double sq(const std::vector<double>& y) {
  double s = 0;
  for (double v : y) s += v * v;
  return s;
}

ArrayField linear_field(int n, std::vector<double> Q, std::vector<double> C = {}) {
  if (C.empty()) C.assign(n, 0.0);
  return ArrayField::from([n, Q, C](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    std::vector<T> v;
    for (int i = 0; i < n; ++i) {
      T s = constant_like(x[0], C[i]);
      for (int j = 0; j < n; ++j) s = s + Q[i * n + j] * x[j];
      v.push_back(s);
    }
    return v;
  });
}

}  // namespace

TEST_CASE("Euclidean metric has vanishing Christoffel symbols and curvature") {
  const auto h = euclidean(3);
  const std::vector<double> x{0.3, -0.2, 1.1}, y{1.0, 2.0, -0.5};
  for (double g : christoffel(h, x)) CHECK(g == 0.0);
  CHECK(riemann_ricci(h, x, y) == 0.0);
}

TEST_CASE("cigar metric Christoffel symbols") {
  const auto h = cigar_metric();
  const std::vector<double> x{1.0, 0.4};
  const auto G = christoffel(h, x);
  const double c = std::cosh(1.0);
  // Gamma^0_11 and Gamma^1_01 in zero-based indices
  CHECK(G[(0 * 2 + 1) * 2 + 1] == doctest::Approx(-std::tanh(1.0) / (c * c)).epsilon(1e-13));
  CHECK(G[(0 * 2 + 1) * 2 + 1] == doctest::Approx(-0.319850).epsilon(1e-6));
  CHECK(G[(1 * 2 + 0) * 2 + 1] == doctest::Approx(2.0 / std::sinh(2.0)).epsilon(1e-13));
  CHECK(G[(1 * 2 + 0) * 2 + 1] == doctest::Approx(0.551441).epsilon(1e-6));
  CHECK(G[(1 * 2 + 1) * 2 + 0] == G[(1 * 2 + 0) * 2 + 1]);
  CHECK(std::abs(G[0]) < 1e-15);
}

TEST_CASE("projective sphere Christoffel symbols match the closed form") {
  const double mu = 1.0;
  const auto h = sphere_metric(3, mu);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_vector(rng, 3, 1.5);
    const auto G = christoffel(h, x);
    const double q = 1.0 + mu * sq(x);
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const double expected = -mu / q * (x[i] * (j == k) + x[j] * (i == k));
          CHECK(G[(k * 3 + i) * 3 + j] == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
        }
  }
}

TEST_CASE("Ricci curvature of the sphere and the cigar") {
  std::mt19937_64 rng(5);
  const auto s = sphere_metric(3, 1.0);
  const auto c = cigar_metric();
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_vector(rng, 3, 1.5);
    const auto y = random_vector(rng, 3, 1.0);
    LeviCivita lc(s, x, 1);
    const double h2 = quadratic_form(values_of<Jet>(lc.metric()), y);
    CHECK(riemann_ricci(s, x, y) == doctest::Approx(2.0 * h2).epsilon(1e-11));

    const std::vector<double> xc{0.2 + 1.8 * std::abs(x[0]) / 1.5, x[1]};
    const std::vector<double> yc{y[0], y[1]};
    const double th = std::tanh(xc[0]);
    const double ch = std::cosh(xc[0]);
    const double hc = yc[0] * yc[0] + th * th * yc[1] * yc[1];
    CHECK(riemann_ricci(c, xc, yc) == doctest::Approx(2.0 / (ch * ch) * hc).epsilon(1e-11));
  }
}

TEST_CASE("covariant derivatives of 1-forms") {
  const auto e = euclidean(3);
  const std::vector<double> x{0.5, 0.1, -0.3};
  auto constant_b = ArrayField::from([](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    return std::vector<T>{constant_like(x[0], 0.2), constant_like(x[0], -0.1),
                          constant_like(x[0], 0.3)};
  });
  for (double v : covariant_derivative_1form(e, constant_b, x)) CHECK(v == 0.0);

  // b = df on the sphere gives a symmetric b_{i;j}
  const auto s = sphere_metric(3, 1.0);
  auto df = ArrayField::from([](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    return std::vector<T>{x[1] * cos(x[0]), sin(x[0]) + 2.0 * x[2], 2.0 * x[1]};
  });
  const auto b = covariant_derivative_1form(s, df, x);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(b[i * 3 + j] == doctest::Approx(b[j * 3 + i]).epsilon(1e-13).scale(1.0));
}

TEST_CASE("Hessians") {
  const double rho = 1.7;
  const auto e = euclidean(3);
  auto gauss = ScalarField::from([rho](auto x) {
    return 0.5 * rho * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  });
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_vector(rng, 3, 2.0);
    const auto y = random_vector(rng, 3, 1.0);
    CHECK(hessian(e, gauss, x, y) == doctest::Approx(rho * sq(y)).epsilon(1e-13));
    CHECK(hessian(e, constant_scalar(3.0), x, y) == 0.0);
  }
  const auto c = cigar_metric();
  auto f = ScalarField::from([](auto x) { return -2.0 * log(cosh(x[0])); });
  for (double t : {0.2, 0.7, 1.3, 2.0}) {
    const std::vector<double> x{t, 0.3}, y{0.4, -1.1};
    const double th = std::tanh(t), ch = std::cosh(t);
    const double h2 = y[0] * y[0] + th * th * y[1] * y[1];
    CHECK(hessian(c, f, x, y) == doctest::Approx(-2.0 / (ch * ch) * h2).epsilon(1e-12));
  }
}

TEST_CASE("Lie derivatives along complete lifts") {
  const auto e = euclidean(3);
  const std::vector<double> Q{0, 0.5, -0.2, -0.5, 0, 0.3, 0.2, -0.3, 0};
  const std::vector<double> I{1, 0, 0, 0, 1, 0, 0, 0, 1};
  const auto zero = zero_vector_field(3);
  const auto killing = linear_field(3, Q);
  const auto radial = linear_field(3, I);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_vector(rng, 3, 1.0);
    const auto y = random_vector(rng, 3, 1.0);
    CHECK(lie_h2(e, zero, x, y) == 0.0);
    CHECK(lie_W0(e, killing, zero, x, y) == 0.0);
    CHECK(std::abs(lie_h2(e, killing, x, y)) < 1e-15);
    CHECK(lie_h2(e, radial, x, y) == doctest::Approx(2.0 * sq(y)).epsilon(1e-14));
    // V = x commutes with Qx up to sign: L_V(W_0) = 2 W_0 for W = Qx
    double w0 = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) w0 += Q[i * 3 + j] * x[j] * y[i];
    CHECK(lie_W0(e, killing, radial, x, y) == doctest::Approx(2.0 * w0).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("conformal residuals") {
  const auto e = euclidean(3);
  const std::vector<double> x{0.1, 0.2, 0.3};
  const auto zero = zero_vector_field(3);
  const auto r0 = conformal_residual(e, zero, constant_scalar(1.0), x);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(r0[i * 3 + j] == (i == j ? -4.0 : 0.0));

  const double sigma = 0.15;
  std::vector<double> M{-2 * sigma, 0.5, -0.2, -0.5, -2 * sigma, 0.3, 0.2, -0.3, -2 * sigma};
  const auto W = linear_field(3, M, {0.1, -0.2, 0.05});
  for (double v : conformal_residual(e, W, constant_scalar(-sigma), x)) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("structural properties at random points") {
  std::mt19937_64 rng(17);
  const auto s = sphere_metric(3, 0.7);
  auto f = ScalarField::from([](auto x) { return x[0] * x[1] + sin(x[2]) * x[0]; });
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_vector(rng, 3, 1.2);
    const auto G = christoffel(s, x);
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(std::abs(G[(k * 3 + i) * 3 + j] - G[(k * 3 + j) * 3 + i]) < 1e-14);

    // metric compatibility
    LeviCivita lc(s, x, 2);
    JetTensor h{3, {Slot::Down, Slot::Down}, lc.metric()};
    for (double v : lc.covariant(h).values()) CHECK(std::abs(v) <= 1e-10);

    const auto y = random_vector(rng, 3, 1.0);
    const double lam = 0.3 + std::abs(y[0]);
    std::vector<double> ly(y);
    for (double& v : ly) v *= lam;
    CHECK(riemann_ricci(s, x, ly) ==
          doctest::Approx(lam * lam * riemann_ricci(s, x, y)).epsilon(1e-12));

    // polarization: the Hessian is a symmetric bilinear form
    const auto z = random_vector(rng, 3, 1.0);
    std::vector<double> ypz(3), ymz(3);
    for (int i = 0; i < 3; ++i) {
      ypz[i] = y[i] + z[i];
      ymz[i] = y[i] - z[i];
    }
    const auto H = hessian_matrix(s, f, x);
    double bilinear = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) bilinear += H[i * 3 + j] * y[i] * z[j];
    CHECK(0.25 * (hessian(s, f, x, ypz) - hessian(s, f, x, ymz)) ==
          doctest::Approx(bilinear).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("lie_h2 of a gradient field is twice the Hessian") {
  const auto c = cigar_metric();
  auto f = ScalarField::from([](auto x) { return -2.0 * log(cosh(x[0])) + 0.3 * sin(x[1]); });
  auto grad = ArrayField::from([](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    auto th = tanh(x[0]);
    return std::vector<T>{-2.0 * th, 0.3 * cos(x[1]) / (th * th)};
  });
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> t(0.2, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> x{t(rng), t(rng)};
    const auto y = random_vector(rng, 2, 1.0);
    CHECK(lie_h2(c, grad, x, y) ==
          doctest::Approx(2.0 * hessian(c, f, x, y)).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("invalid metrics are rejected") {
  RiemannMetric bad{2, ArrayField::from([](auto x) {
                      using T = std::decay_t<decltype(x[0])>;
                      return std::vector<T>{constant_like(x[0], 1.0), constant_like(x[0], 0.0),
                                            constant_like(x[0], 0.0), -1.0 + 0.0 * x[0]};
                    })};
  const std::vector<double> x{0.0, 0.0};
  CHECK_THROWS_AS(christoffel(bad, x), NotPositiveDefiniteError);
  std::vector<double> singular{1.0, 2.0, 2.0, 4.0};
  CHECK_THROWS_AS(invert<double>(singular, 2), SingularMatrixError);
  std::vector<double> nearly{1.0, 1.0, 1.0, 1.0 + 1e-12};
  const auto inv = invert<double>(nearly, 2);
  CHECK(inv.ill_conditioned());
}

}  // namespace finsler
