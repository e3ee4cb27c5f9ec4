#pragma once

#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "finsler/finsler_core.hpp"
#include "finsler/report.hpp"
#include "finsler/riemann.hpp"

namespace finsler {

// b >= 1 somewhere the Randers data is evaluated.
class RandersDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// ||W||_h >= 1 (lambda <= 0) somewhere the navigation data is evaluated.
class NavigationDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class RankError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// F = alpha + beta with alpha^2 = a_ij y^i y^j and beta = b_i y^i.
struct RandersData {
  int dim = 0;
  ArrayField a;  // n*n
  ArrayField b;  // lower components b_i
};

// Zermelo navigation data: Riemannian h and a vector field W with |W|_h < 1.
struct NavigationData {
  int dim = 0;
  ArrayField h;        // n*n
  VectorFieldSpec W;   // upper components W^i
};

RiemannMetric alpha_metric(const RandersData& rd);
RiemannMetric h_metric(const NavigationData& nav);

RandersData from_navigation(const NavigationData& nav);
NavigationData to_navigation(const RandersData& rd);

double b_squared(const RandersData& rd, std::span<const double> x);
double lambda(const NavigationData& nav, std::span<const double> x);

double eval_F(const RandersData& rd, const FlagPoint& p);
double eval_F_nav(const NavigationData& nav, const FlagPoint& p);
FinslerMetric finsler_metric(const RandersData& rd);
FinslerMetric finsler_metric(const NavigationData& nav);

// (1 - b^2)^{(n+1)/2} sqrt(det a)
double bh_density(const RandersData& rd, std::span<const double> x);
MeasureSpec busemann_hausdorff(const RandersData& rd);
MeasureSpec busemann_hausdorff(const NavigationData& nav);

// Covariant derivatives of beta with respect to alpha, at one flag.
// Matrices are row-major n*n; "_0" means contraction with y.
struct BetaDerivatives {
  int n = 0;
  std::vector<double> y;
  double alpha = 0.0, beta = 0.0, b2 = 0.0;
  std::vector<double> a, a_inv, b, b_up;
  std::vector<double> r, s;        // r_ij, s_ij
  std::vector<double> r_up;        // r^i_j
  std::vector<double> s_up;        // s^i_j
  std::vector<double> e;           // e_ij
  std::vector<double> t;           // t_ij
  std::vector<double> q;           // q_ij = r_ik s^k_j
  std::vector<double> r_j, s_j, t_j;
  std::vector<double> s_vec;       // s^i
  double r_scalar = 0.0;           // r = r_j b^j
  double r_trace = 0.0;            // r^i_i
  double t_trace = 0.0;            // t^i_i
  double e00 = 0.0, r00 = 0.0, s0 = 0.0, t00 = 0.0, t0 = 0.0, q00 = 0.0;
  std::vector<double> r_up_0, s_up_0;  // r^i_0, s^i_0
  double s0_0 = 0.0;               // s_{0;0}
  double r00_0 = 0.0;              // r_{00;0}
  double s_i0_i = 0.0;             // s^i_{0;i}
  double r_div = 0.0;              // r^i_{;i}, r^i = r^i_j b^j
  double r_trace_0 = 0.0;          // r^i_{i;0}
  double s_div = 0.0;              // s^i_{;i}
  double alpha_ricci = 0.0;        // Ric of alpha at y
  // sigma read off the trace of e_ij, e^i_i = 2 sigma (n - b^2), with its gradient
  double sigma_trace = 0.0;
  std::vector<double> sigma_grad;
};

BetaDerivatives beta_derivatives(const RandersData& rd, const FlagPoint& p);

// L_V(alpha^2) and L_V(beta) along the complete lift of V.
double lie_alpha2(const RandersData& rd, const VectorFieldSpec& V, const FlagPoint& p);
double lie_beta(const RandersData& rd, const VectorFieldSpec& V, const FlagPoint& p);

struct SigmaFit {
  double sigma = 0.0;
  // max |e_00 - 2 sigma (alpha^2 - beta^2)| / alpha^2 over the samples
  double residual = 0.0;
};

// Least-squares sigma in e_00 = 2 sigma (alpha^2 - beta^2) over y samples at x.
SigmaFit fit_sigma_isotropic_S(const RandersData& rd, std::span<const double> x,
                               const std::vector<std::vector<double>>& y_samples);

// Ric = Ric_alpha + 2 alpha s^i_{0;i} - 2 t_00 - alpha^2 t^i_i + (n-1) Xi.
double randers_ricci_closed_form(const RandersData& rd, const FlagPoint& p);
double randers_ricci_closed_form(const BetaDerivatives& d);

// Tensor identities implied by e_00 = 2 sigma (alpha^2 - beta^2); each
// y-dependent entry is divided by alpha^degree.
struct IsotropicIdentities {
  bool applicable = true;
  double sigma = 0.0;
  double hypothesis_residual = 0.0;
  std::vector<IdentityResidual> residuals;
};

// With `sigma` empty the trace value and its gradient are used.
IsotropicIdentities isotropic_s_identities(const RandersData& rd, const FlagPoint& p,
                                           const ScalarField* sigma = nullptr,
                                           double hypothesis_tol = 1e-8);

// Quantities of W with respect to h at a point. R_ij and S_ij are the
// symmetric and antisymmetric parts of W_{i:j}.
struct NavigationTerms {
  int n = 0;
  double lambda = 0.0;
  std::vector<double> h, h_inv;
  std::vector<double> W, W_low;    // W^i, W_i
  std::vector<double> dW;          // W_{i:j}
  std::vector<double> R, S;        // R_ij, S_ij
  std::vector<double> S_up;        // S^i_j = h^ik S_kj
  std::vector<double> S_j;         // S_j = W^i S_ij
  std::vector<double> S_vec;       // S^i = h^ij S_j
  // conformal factor read off the trace, R_ij = -2 sigma h_ij, and its gradient
  double sigma_trace = 0.0;
  std::vector<double> sigma_grad;
};

NavigationTerms navigation_terms(const NavigationData& nav, std::span<const double> x);

// Two-sided checks of the navigation identities at a flag.
// xi = y - F W satisfies h(xi, xi) = F^2 and h^2 - 2 F W_0 = lambda F^2.
IdentityResidual navigation_norm_identity(const NavigationData& nav, const FlagPoint& p);
IdentityResidual navigation_xi_identity(const NavigationData& nav, const FlagPoint& p);

// L_V(F^2) along the complete lift: generic vs the closed form in xi.
IdentityResidual lie_navigation_identity(const NavigationData& nav, const VectorFieldSpec& V,
                                         const FlagPoint& p);
// L_V(F^2) generic vs (F/alpha) L_V(alpha^2) + 2 F L_V(beta).
IdentityResidual lie_randers_identity(const RandersData& rd, const VectorFieldSpec& V,
                                      const FlagPoint& p);

// Ric - (n-1)(3 sigma_0/F + mu - sigma^2 - 2 sigma_i W^i) F^2 vs
// Ric_h(xi) - (n-1) mu h(xi)^2, sigma from the trace of R_ij.
IdentityResidual navigation_ricci_identity(const NavigationData& nav, const FlagPoint& p,
                                           double mu_test);

// S_dot for dm = e^{-f} dm_BH generic vs
// (n+1) sigma_0 F - 2 sigma f_0 F + 2 (f_k S^k_0) F + (f_k S^k) F^2 + Hess_h f(y).
IdentityResidual navigation_sdot_identity(const NavigationData& nav, const ScalarField& f,
                                          const FlagPoint& p);

// s_0 = S_0 / lambda and s^i_j = -S^i_j + S^i W_j / lambda, valid when
// W is conformal; entries are reported one per component.
std::vector<IdentityResidual> navigation_s_identities(const NavigationData& nav,
                                                      const FlagPoint& p);

// Random analytic test data. Polynomial entries of degree <= 2 with
// coefficients in [-0.1, 0.1], shrunk if needed so that a >= I/2 and
// b < 1/2 on the box [-box, box]^n.
RandersData random_randers(std::mt19937_64& rng, int n, double box = 1.0);
RiemannMetric random_metric(std::mt19937_64& rng, int n, double box = 1.0);
VectorFieldSpec random_vector_field(std::mt19937_64& rng, int n, double size, double box = 1.0);

// Euclidean h with W = -2 s0 x + Qx + C + 2<k,x>x - |x|^2 k, the general
// conformal field; its conformal factor is -(s0 - <k,x>). Sized so that
// |W| < 1/2 on the ball of radius `radius`.
struct ConformalNavigation {
  NavigationData nav;
  double s0 = 0.0;
  std::vector<double> k;
  ScalarField sigma;  // s0 - <k, x>
};
ConformalNavigation random_conformal_navigation(std::mt19937_64& rng, int n, double radius);

}  // namespace finsler
