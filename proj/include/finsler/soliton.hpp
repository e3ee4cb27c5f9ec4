#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "finsler/finsler_core.hpp"
#include "finsler/randers.hpp"
#include "finsler/report.hpp"
#include "finsler/riemann.hpp"

namespace finsler {

enum class DiffMode { Jet, FD };

// An evaluation failure at a specific flag; the message carries the flag.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// (2 Ric + L_V(F^2) - 2 kappa F^2) / F^2
double almost_soliton_residual(const FinslerMetric& F, const VectorFieldSpec& V,
                               const ScalarField& kappa, const FlagPoint& p);

// (Ric_inf - kappa F^2) / F^2 for the measure m
double gradient_soliton_residual(const FinslerMetric& F, const MeasureSpec& m,
                                 const ScalarField& kappa, const FlagPoint& p,
                                 DiffMode mode = DiffMode::Jet);

// kappa is required. An empty sigma, c or mu is fitted pointwise from the
// trace of the tensor equation that defines it; the check built on that
// equation then doubles as the fit residual.
struct SolitonScalars {
  ScalarField kappa;
  ScalarField sigma;
  ScalarField c;
  ScalarField mu;
};

struct BundleOptions {
  double tol = 1e-6;
  int workers = 1;
};

struct CheckBundle {
  std::string name;
  std::vector<ResidualReport> checks;
  Verdict verdict = Verdict::NotApplicable;
  std::string note;
};

// Randers data with a vector field V: V conformal for alpha with factor c,
// e_00 = 2 sigma (alpha^2 - beta^2), the alpha-Ricci identity, the sigma_0
// relation 3(n-1) sigma_0 = 2 c beta - L_V(beta), the s^i_{0;i} consistency
// relation and the defining equation itself.
CheckBundle alpha_beta_characterization(const RandersData& rd, const VectorFieldSpec& V,
                                        const SolitonScalars& s,
                                        const std::vector<FlagPoint>& samples,
                                        const BundleOptions& opt = {});

// Navigation data with a vector field V: h Einstein with scalar mu, W
// conformal with factor -sigma, the L_V(h^2) and L_V(W_0) relations with
// c = kappa - mu + (n-1) sigma^2 + 2(n-1) sigma_i W^i, and the defining equation.
CheckBundle navigation_characterization(const NavigationData& nav, const VectorFieldSpec& V,
                                        const SolitonScalars& s,
                                        const std::vector<FlagPoint>& samples,
                                        const BundleOptions& opt = {});

// Randers data with measure e^{-f} dm_BH: e_00 = 2 sigma (alpha^2 - beta^2),
// the alpha-Ricci identity with f, the sigma_0 relation, the s^i_{0;i}
// consistency relation and Ric_inf = kappa F^2. The constancy criterion for
// sigma is reported as informational.
CheckBundle randers_gradient_characterization(const RandersData& rd, const ScalarField& f,
                                              const SolitonScalars& s,
                                              const std::vector<FlagPoint>& samples,
                                              const BundleOptions& opt = {});

// Navigation data with measure e^{-f} dm_BH: Ric_h + Hess_h f = mu h^2,
// W conformal with factor -sigma, the sigma_0 relation, the sigma_i W^i
// relation and Ric_inf = kappa F^2. sigma f_0 - f_k S^k_0 - f_{:0j} W^j = 0
// is reported as informational.
CheckBundle navigation_gradient_characterization(const NavigationData& nav, const ScalarField& f,
                                                 const SolitonScalars& s,
                                                 const std::vector<FlagPoint>& samples,
                                                 const BundleOptions& opt = {});

enum class KappaSource {
  Einstein,      // Ric = kappa F^2
  Weighted,      // Ric_inf = kappa F^2, needs a measure
  VectorField,   // Ric + L_V(F^2)/2 = kappa F^2, needs V
};

struct DirectionSamples {
  std::vector<double> x;
  std::vector<std::vector<double>> ys;
};

struct KappaPoint {
  std::vector<double> x;
  double kappa = 0.0;
  // spread of the pointwise ratios over the directions at x
  double anisotropy = 0.0;
};

struct KappaFit {
  std::vector<KappaPoint> points;
  double anisotropy = 0.0;
};

// Per-point least-squares kappa. Throws RankError with fewer than two
// directions at a point.
KappaFit fit_kappa(const FinslerMetric& F, KappaSource source,
                   const std::vector<DirectionSamples>& samples,
                   const MeasureSpec* m = nullptr, const VectorFieldSpec* V = nullptr,
                   int workers = 1);

}  // namespace finsler
