#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "finsler/fixtures.hpp"
#include "finsler/soliton.hpp"

namespace finsler {
namespace {

double worst(const CheckBundle& b, bool include_info = false) {
  double w = 0.0;
  for (const auto& c : b.checks)
    if (include_info || !c.informational) w = std::max(w, c.max_abs);
  return w;
}

const ResidualReport& check(const CheckBundle& b, const std::string& name) {
  for (const auto& c : b.checks)
    if (c.name == name) return c;
  FAIL("no check " << name);
  return b.checks.front();
}

SolitonScalars declared(double kappa, double sigma, std::optional<double> mu = {}) {
  SolitonScalars s{constant_scalar(kappa), constant_scalar(sigma), {}, {}};
  if (mu) s.mu = constant_scalar(*mu);
  return s;
}

// -2 tanh t d/dt, the h-gradient of the cigar weight
VectorFieldSpec cigar_gradient() {
  return ArrayField::from([](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    using std::tanh;
    return std::vector<T>{-2.0 * tanh(x[0]), constant_like(x[0], 0.0)};
  });
}

}  // namespace

TEST_CASE("almost soliton residual") {
  SUBCASE("Einstein metric with V = 0 is a trivial soliton") {
    const auto fx = einstein_sphere();
    for (const auto& p : sample_flags(fx, 8, 1))
      CHECK(std::abs(almost_soliton_residual(fx.metric(), zero_vector_field(3), constant_scalar(2.0),
                                             p)) < 1e-10);
  }
  SUBCASE("Riemannian Gaussian with V = grad f") {
    const auto fx = gaussian_riemannian(1.0, 3);
    for (const auto& p : sample_flags(fx, 8, 2))
      CHECK(std::abs(almost_soliton_residual(fx.metric(), *fx.V, constant_scalar(1.0), p)) < 1e-8);
  }
  SUBCASE("Riemannian cigar with V = grad f") {
    auto fx = cigar();
    fx.nav.W = zero_vector_field(2);
    for (const auto& p : sample_flags(fx, 8, 3))
      CHECK(std::abs(almost_soliton_residual(fx.metric(), cigar_gradient(), constant_scalar(0.0),
                                             p)) < 1e-8);
  }
  SUBCASE("the Randers cigar is not a soliton along grad f") {
    const auto fx = cigar();
    double w = 0.0;
    for (const auto& p : sample_flags(fx, 16, 4))
      w = std::max(w, std::abs(almost_soliton_residual(fx.metric(), cigar_gradient(),
                                                      constant_scalar(0.0), p)));
    CHECK(w > 1e-2);
  }
  SUBCASE("homothetic field on a Minkowski norm") {
    const auto fx = minkowski_homothetic();
    for (const auto& p : sample_flags(fx, 8, 5))
      CHECK(std::abs(almost_soliton_residual(fx.metric(), *fx.V, constant_scalar(1.0), p)) < 1e-10);
  }
}

TEST_CASE("gradient soliton residual on the fixtures") {
  struct Case {
    Fixture fx;
    double kappa;
    double tol;
  };
  for (const auto& c : std::vector<Case>{{cigar(), 0.0, 1e-8},
                                         {shrinking(), 2.0, 1e-7},
                                         {expanding(), -2.0, 1e-7},
                                         {gaussian(), 1.0, 1e-7}}) {
    CAPTURE(c.fx.name);
    for (const auto& p : sample_flags(c.fx, 12, 6))
      CHECK(std::abs(gradient_soliton_residual(c.fx.metric(), c.fx.measure(),
                                               constant_scalar(c.kappa), p)) < c.tol);
  }
}

TEST_CASE("gradient residual is affine in kappa") {
  const auto fx = shrinking();
  for (const auto& p : sample_flags(fx, 6, 7)) {
    const double r0 = gradient_soliton_residual(fx.metric(), fx.measure(), constant_scalar(2.0), p);
    for (double delta : {0.5, -1.25, 3.0}) {
      const double r = gradient_soliton_residual(fx.metric(), fx.measure(),
                                                 constant_scalar(2.0 + delta), p);
      CHECK(r == doctest::Approx(r0 - delta).epsilon(1e-12));
    }
  }
}

TEST_CASE("finite-difference mode agrees with jets") {
  const auto fx = cigar();
  for (const auto& p : sample_flags(fx, 4, 8)) {
    const double a = gradient_soliton_residual(fx.metric(), fx.measure(), constant_scalar(0.0), p);
    const double b = gradient_soliton_residual(fx.metric(), fx.measure(), constant_scalar(0.0), p,
                                               DiffMode::FD);
    CHECK(std::abs(a - b) < 1e-4);
  }
}

TEST_CASE("alpha-beta characterization") {
  const auto sphere = einstein_sphere();
  const auto flags = sample_flags(sphere, 16, 9);
  const auto rd = sphere.randers();

  SUBCASE("Killing V, declared scalars") {
    const auto b = alpha_beta_characterization(rd, *sphere.V, declared(2.0, 0.0), flags);
    CHECK(b.verdict == Verdict::Pass);
    CHECK(worst(b) < 1e-9);
    CHECK(check(b, "s-divergence").verdict == Verdict::Pass);
  }
  SUBCASE("V = 0 reduces to the Einstein case with c = 0") {
    SolitonScalars s = declared(2.0, 0.0);
    s.c = constant_scalar(0.0);
    const auto b = alpha_beta_characterization(rd, zero_vector_field(3), s, flags);
    CHECK(b.verdict == Verdict::Pass);
  }
  SUBCASE("fitted sigma and c are reported") {
    const auto b = alpha_beta_characterization(rd, *sphere.V, {constant_scalar(2.0), {}, {}, {}}, flags);
    CHECK(b.verdict == Verdict::Pass);
    CHECK(check(b, "alpha-conformal").note.find("fitted") != std::string::npos);
    CHECK(check(b, "isotropic-e00").note.find("fitted") != std::string::npos);
  }
  SUBCASE("homothetic V on a Minkowski norm") {
    const auto fx = minkowski_homothetic();
    const auto b = alpha_beta_characterization(fx.randers(), *fx.V, declared(1.0, 0.0),
                                               sample_flags(fx, 12, 10));
    CHECK(b.verdict == Verdict::Pass);
  }
  SUBCASE("non-conformal perturbation of V fails") {
    const double tol = 1e-6;
    const VectorFieldSpec V = sum(*sphere.V, ArrayField::from([](auto x) {
                                    using T = std::decay_t<decltype(x[0])>;
                                    return std::vector<T>{x[0] * x[0], constant_like(x[0], 0.0),
                                                          constant_like(x[0], 0.0)};
                                  }),
                                  1e-2);
    const auto b = alpha_beta_characterization(rd, V, declared(2.0, 0.0), flags, {tol, 1});
    CHECK(b.verdict == Verdict::Fail);
    CHECK(worst(b) > 10 * tol);
  }
  SUBCASE("beta = 0 is not applicable") {
    const auto fx = gaussian_riemannian();
    const auto b = alpha_beta_characterization(fx.randers(), *fx.V, declared(1.0, 0.0),
                                               sample_flags(fx, 4, 11));
    CHECK(b.verdict == Verdict::NotApplicable);
    for (const auto& c : b.checks) CHECK(c.verdict == Verdict::NotApplicable);
  }
}

TEST_CASE("navigation characterization") {
  const auto sphere = einstein_sphere();
  const auto flags = sample_flags(sphere, 16, 12);

  SUBCASE("Killing V") {
    const auto b = navigation_characterization(sphere.nav, *sphere.V, declared(2.0, 0.0, 2.0), flags);
    CHECK(b.verdict == Verdict::Pass);
    CHECK(worst(b) < 1e-9);
  }
  SUBCASE("V = 0 with an Einstein F") {
    const auto b =
        navigation_characterization(sphere.nav, zero_vector_field(3), declared(2.0, 0.0, 2.0), flags);
    CHECK(b.verdict == Verdict::Pass);
  }
  SUBCASE("fitted mu") {
    const auto b = navigation_characterization(sphere.nav, *sphere.V, declared(2.0, 0.0), flags);
    CHECK(b.verdict == Verdict::Pass);
    CHECK(check(b, "h-einstein").note.find("fitted") != std::string::npos);
  }
  SUBCASE("broken mu shifts the Einstein residual by exactly the error") {
    const auto b = navigation_characterization(sphere.nav, *sphere.V, declared(2.0, 0.0, 2.1), flags);
    CHECK(b.verdict == Verdict::Fail);
    CHECK(check(b, "h-einstein").max_abs == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(check(b, "h-einstein").mean_abs == doctest::Approx(0.1).epsilon(1e-9));
  }
  SUBCASE("W = 0 is not applicable") {
    auto fx = gaussian_riemannian();
    const auto b = navigation_characterization(fx.nav, *fx.V, declared(1.0, 0.0, 0.0),
                                               sample_flags(fx, 4, 13));
    CHECK(b.verdict == Verdict::NotApplicable);
  }
}

TEST_CASE("Randers gradient characterization") {
  SUBCASE("cigar") {
    const auto fx = cigar();
    const auto b = randers_gradient_characterization(fx.randers(), fx.f, declared(0.0, 0.0),
                                                     sample_flags(fx, 16, 14));
    CHECK(b.verdict == Verdict::Pass);
    CHECK(worst(b, true) < 1e-9);
  }
  SUBCASE("shrinking cylinder") {
    const auto fx = shrinking();
    const auto b = randers_gradient_characterization(fx.randers(), fx.f, declared(2.0, 0.0),
                                                     sample_flags(fx, 12, 15));
    CHECK(b.verdict == Verdict::Pass);
  }
  SUBCASE("constant f reduces to the Einstein case") {
    const auto fx = einstein_sphere();
    const auto b = randers_gradient_characterization(fx.randers(), constant_scalar(0.7),
                                                     {constant_scalar(2.0), {}, {}, {}},
                                                     sample_flags(fx, 12, 16));
    CHECK(b.verdict == Verdict::Pass);
    CHECK(check(b, "sigma-constancy").max_abs < 1e-10);
  }
  SUBCASE("wrong kappa fails") {
    const auto fx = cigar();
    const auto b = randers_gradient_characterization(fx.randers(), fx.f, declared(0.01, 0.0),
                                                     sample_flags(fx, 8, 17));
    CHECK(b.verdict == Verdict::Fail);
    CHECK(check(b, "alpha-ricci").max_abs > 1e-3);
    CHECK(check(b, "ric-infinity").max_abs == doctest::Approx(0.01).epsilon(1e-6));
  }
}

TEST_CASE("navigation gradient characterization") {
  SUBCASE("cigar") {
    const auto fx = cigar();
    const auto b = navigation_gradient_characterization(fx.nav, fx.f, declared(0.0, 0.0, 0.0),
                                                        sample_flags(fx, 16, 18));
    CHECK(b.verdict == Verdict::Pass);
    CHECK(worst(b, true) < 1e-9);
  }
  SUBCASE("shrinking cylinder satisfies the f-condition") {
    const auto fx = shrinking();
    const auto b = navigation_gradient_characterization(fx.nav, fx.f, declared(2.0, 0.0, 2.0),
                                                        sample_flags(fx, 16, 19));
    CHECK(b.verdict == Verdict::Pass);
    CHECK(check(b, "f-condition").max_abs < 1e-9);
  }
  SUBCASE("expanding cylinder") {
    const auto fx = expanding();
    const auto b = navigation_gradient_characterization(fx.nav, fx.f, declared(-2.0, 0.0, -2.0),
                                                        sample_flags(fx, 16, 20));
    CHECK(b.verdict == Verdict::Pass);
    CHECK(check(b, "f-condition").max_abs < 1e-8);
  }
  SUBCASE("perturbed W breaks conformality") {
    const auto fx = perturbed(cigar(), {"W", 1e-2});
    const auto b = navigation_gradient_characterization(fx.nav, fx.f, declared(0.0, 0.0, 0.0),
                                                        sample_flags(fx, 8, 21));
    CHECK(b.verdict == Verdict::Fail);
    CHECK(check(b, "W-conformal").max_abs > 1e-3);
  }
}

TEST_CASE("evaluation errors name the flag") {
  auto fx = cigar();
  fx.nav.W = ArrayField::from([](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    return std::vector<T>{constant_like(x[0], 2.0), constant_like(x[0], 0.0)};
  });
  const auto flags = sample_flags(fx, 4, 22);
  try {
    navigation_gradient_characterization(fx.nav, fx.f, declared(0.0, 0.0, 0.0), flags);
    FAIL("expected an evaluation error");
  } catch (const EvaluationError& e) {
    CHECK(std::string(e.what()).find("flag x=(") != std::string::npos);
  }
  CHECK_THROWS_AS(randers_gradient_characterization(fx.randers(), fx.f, {}, flags),
                  std::invalid_argument);
}

TEST_CASE("parallel evaluation is deterministic") {
  const auto fx = shrinking();
  const auto flags = sample_flags(fx, 12, 23);
  const auto a = navigation_gradient_characterization(fx.nav, fx.f, declared(2.0, 0.0, 2.0), flags,
                                                      {1e-6, 1});
  const auto b = navigation_gradient_characterization(fx.nav, fx.f, declared(2.0, 0.0, 2.0), flags,
                                                      {1e-6, 3});
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t k = 0; k < a.checks.size(); ++k) {
    CHECK(a.checks[k].max_abs == b.checks[k].max_abs);
    CHECK(a.checks[k].mean_abs == b.checks[k].mean_abs);
  }
}

TEST_CASE("report invariants") {
  const auto fx = cigar();
  const auto b = randers_gradient_characterization(fx.randers(), fx.f, declared(0.3, 0.0),
                                                   sample_flags(fx, 12, 24));
  for (const auto& c : b.checks) {
    CHECK(c.max_abs >= c.mean_abs);
    CHECK(c.mean_abs >= 0.0);
    CHECK(c.samples == 12);
  }
}

TEST_CASE("kappa fit") {
  auto grouped = [](const Fixture& fx, int points, int dirs, std::uint64_t seed) {
    std::vector<DirectionSamples> out;
    const auto flags = sample_flags(fx, points * dirs, seed);
    for (int k = 0; k < points; ++k) {
      DirectionSamples s{flags[k * dirs].x, {}};
      for (int j = 0; j < dirs; ++j) s.ys.push_back(flags[k * dirs + j].y);
      out.push_back(s);
    }
    return out;
  };
  SUBCASE("cigar is steady") {
    const auto fx = cigar();
    const auto m = fx.measure();
    const auto fit = fit_kappa(fx.metric(), KappaSource::Weighted, grouped(fx, 6, 4, 25), &m);
    for (const auto& p : fit.points) CHECK(std::abs(p.kappa) < 1e-8);
    CHECK(fit.anisotropy < 1e-8);
  }
  SUBCASE("shrinking cylinder") {
    const auto fx = shrinking();
    const auto m = fx.measure();
    const auto fit = fit_kappa(fx.metric(), KappaSource::Weighted, grouped(fx, 4, 4, 26), &m);
    for (const auto& p : fit.points) CHECK(p.kappa == doctest::Approx(2.0).epsilon(1e-8));
  }
  SUBCASE("Einstein sphere") {
    const auto fx = einstein_sphere();
    const auto fit = fit_kappa(fx.metric(), KappaSource::Einstein, grouped(fx, 4, 3, 27));
    for (const auto& p : fit.points) CHECK(p.kappa == doctest::Approx(2.0).epsilon(1e-9));
    const auto viaV = fit_kappa(fx.metric(), KappaSource::VectorField, grouped(fx, 3, 3, 28),
                                nullptr, &*fx.V);
    for (const auto& p : viaV.points) CHECK(p.kappa == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("a non-Einstein metric shows anisotropy") {
    const auto fx = shrinking();
    const auto fit = fit_kappa(fx.metric(), KappaSource::Einstein, grouped(fx, 3, 5, 29));
    CHECK(fit.anisotropy > 1e-3);
  }
  SUBCASE("degenerate input") {
    const auto fx = cigar();
    auto one = grouped(fx, 2, 1, 30);
    CHECK_THROWS_AS(fit_kappa(fx.metric(), KappaSource::Einstein, one), RankError);
    CHECK_THROWS_AS(fit_kappa(fx.metric(), KappaSource::Weighted, grouped(fx, 2, 2, 31)),
                    std::invalid_argument);
  }
}

}  // namespace finsler
