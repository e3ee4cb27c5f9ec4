#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "finsler/finsler_core.hpp"
#include "finsler/randers.hpp"

namespace finsler {

// Invalid construction data: failed matrix identity, bad sizes, or a
// sample domain on which ||W||_h < 1 does not hold.
class FixtureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnknownFixture : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct Expected {
  // Ric_inf = kappa F^2 for the measure e^{-f} dm_BH
  double kappa = 0.0;
  // S_BH = (n+1) sigma F
  double sigma = 0.0;
  // Ric_h + Hess_h f = mu h^2
  double mu = 0.0;
  // 2 Ric + L_V(F^2) = 2 kappa_V F^2 for the fixture's vector field
  std::optional<double> kappa_V;
  // Einstein scalar of h, when h is Einstein
  std::optional<double> mu_einstein;
  // scalar flag curvature K(x), when declared
  std::function<double(std::span<const double>)> flag_curvature;
};

struct Fixture {
  std::string name;
  std::string summary;
  int dim = 0;
  NavigationData nav;
  bool riemannian = false;  // W identically zero
  ScalarField f;
  std::optional<VectorFieldSpec> V;
  Expected expected;
  // uniform point of the sample domain
  std::function<std::vector<double>(std::mt19937_64&)> sample_point;
  std::string domain;
  // (identity, max |residual|) of the construction constraints
  std::vector<std::pair<std::string, double>> constraints;

  RandersData randers() const { return from_navigation(nav); }
  FinslerMetric metric() const { return finsler_metric(nav); }
  // e^{-f} dm_BH
  MeasureSpec measure() const { return MeasureSpec::weighted(busemann_hausdorff(nav), f); }
};

// Euclidean h, W = Qx + C, f = rho |x|^2 / 2, kappa = rho, sampled on |x| < radius.
// C must vanish unless rho = 0.
Fixture gaussian(double rho, std::vector<double> Q, std::vector<double> C, int n,
                 double radius = 1.0);
// defaults: n = 3, rho = 1, rotation 0.5 in the (x0, x1) plane
Fixture gaussian();
Fixture gaussian_riemannian(double rho = 1.0, int n = 3);

// h = dt^2 + tanh^2 t dtheta^2, W = d/dtheta, f = -2 log cosh t, t in [0.2, 2]
Fixture cigar();

// Killing field Qx + mu <x, d> x + d of the round (2m-1)-sphere of curvature
// mu in a projective chart; needs Q^T Q + mu d d^T = mu |d|^2 E and Q d = 0.
struct SphereKilling {
  int m = 2;
  double mu = 1.0;
  std::vector<double> Q;  // (2m-1)^2, antisymmetric
  std::vector<double> d;  // 2m-1
};
// d = (1/2, 0, ...), Q = sqrt(mu)/2 times a rotation on the remaining coordinates
SphereKilling default_sphere_killing(int m, double mu);

// R x S^{2m-1}, h = dt^2 + h_sphere, f = (m-1) mu t^2, kappa = 2(m-1) mu
Fixture shrinking(const SphereKilling& data);
Fixture shrinking(int m = 2, double mu = 1.0);
// (0,1) x S^{2m-1}, h = dt^2 + t^2 h_sphere (mu = 1), f = -(m-1) t^2, kappa = -2(m-1)
Fixture expanding(const SphereKilling& data);
Fixture expanding(int m = 2);

// round S^3 (mu = 1) with its Killing field, f = 0, V = W, kappa = 2
Fixture einstein_sphere();
// Euclidean h, constant W, f = 0, V = x (homothetic), kappa_V = 1
Fixture minkowski_homothetic();

// h_ij of the round sphere of curvature mu in the projective chart and its
// closed-form inverse q (delta + mu x x^T), q = 1 + mu |x|^2
ArrayField round_sphere_chart(int dim, double mu);
ArrayField round_sphere_chart_inverse(int dim, double mu);
VectorFieldSpec sphere_killing_field(const SphereKilling& data);

std::vector<std::string> fixture_names();
Fixture make_fixture(const std::string& name);

// Seeded flags: x from the sample domain, y Gaussian.
std::vector<FlagPoint> sample_flags(const Fixture& fx, std::size_t count, std::uint64_t seed);

// Single-ingredient perturbation for negative controls: "f", "W", "kappa" or "mu".
struct Perturbation {
  std::string field;
  double eps = 0.0;
};
// parses "field:eps"; throws std::invalid_argument
Perturbation parse_perturbation(const std::string& text);
// f + eps (x^0)^2 / 2, W + eps x^0 e_0, kappa + eps, mu + eps
Fixture perturbed(const Fixture& fx, const Perturbation& p);

}  // namespace finsler
