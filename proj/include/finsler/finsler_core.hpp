#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "finsler/fields.hpp"
#include "finsler/jets.hpp"
#include "finsler/riemann.hpp"

namespace finsler {

// The metric is invalid at a flag (F <= 0 or g not positive definite).
class FlagDomainError : public std::runtime_error {
 public:
  FlagDomainError(const std::string& what, FlagPoint p)
      : std::runtime_error(what), flag_(std::move(p)) {}
  const FlagPoint& flag() const { return flag_; }

 private:
  FlagPoint flag_;
};

struct FinslerMetric {
  int dim = 0;
  FlagFunction F;
};

FinslerMetric riemannian_finsler(const RiemannMetric& h);

class MeasureSpec {
 public:
  enum class Mode { BusemannHausdorffRanders, Weighted, Density };

  MeasureSpec() = default;
  // dm = sigma(x) dx
  static MeasureSpec density(ScalarField sigma);
  // Riemannian volume sqrt(det h) dx
  static MeasureSpec riemannian(const RiemannMetric& h);
  // e^{-f} times the base measure
  static MeasureSpec weighted(const MeasureSpec& base, ScalarField f);
  static MeasureSpec from_log_density(Mode mode, ScalarField log_sigma);

  Mode mode() const { return mode_; }
  const ScalarField& log_density() const { return log_sigma_; }
  double density(std::span<const double> x) const;

 private:
  Mode mode_ = Mode::Density;
  ScalarField log_sigma_;
};

struct CurvatureBundle {
  int n = 0;
  double F = 0.0;
  std::vector<double> g;       // g_ij
  std::vector<double> g_inv;   // g^ij
  std::vector<double> cartan;  // C_ijk at (i*n + j)*n + k
  std::vector<double> spray;   // G^i
  std::vector<double> riemann; // R^i_k at i*n + k
  double ricci = 0.0;
};

struct MeasuredBundle {
  CurvatureBundle curvature;
  double distortion = 0.0;
  double S = 0.0;
  double S_dot = 0.0;
};

CurvatureBundle curvature_bundle(const FinslerMetric& F, const FlagPoint& p);
MeasuredBundle measured_bundle(const FinslerMetric& F, const MeasureSpec& m,
                               const FlagPoint& p);

double eval_F(const FinslerMetric& F, const FlagPoint& p);
std::vector<double> fundamental_tensor(const FinslerMetric& F, const FlagPoint& p);
std::vector<double> cartan_tensor(const FinslerMetric& F, const FlagPoint& p);
std::vector<double> spray(const FinslerMetric& F, const FlagPoint& p);
std::vector<double> riemann_curvature(const FinslerMetric& F, const FlagPoint& p);
double ricci(const FinslerMetric& F, const FlagPoint& p);
double distortion(const FinslerMetric& F, const MeasureSpec& m, const FlagPoint& p);
double s_curvature(const FinslerMetric& F, const MeasureSpec& m, const FlagPoint& p);
double s_dot(const FinslerMetric& F, const MeasureSpec& m, const FlagPoint& p);

inline constexpr double kInfiniteN = std::numeric_limits<double>::infinity();
// Ric_N = Ric + S_dot - S^2/(N - n); N must exceed n (N = infinity allowed)
double weighted_ricci(const FinslerMetric& F, const MeasureSpec& m, const FlagPoint& p,
                      double N = kInfiniteN);
double weighted_ricci(const MeasuredBundle& b, double N = kInfiniteN);

// Lie derivative of F^2 along the complete lift of V
double lie_F2(const FinslerMetric& F, const VectorFieldSpec& V, const FlagPoint& p);

struct FlagCurvatureFit {
  double K = 0.0;
  double anisotropy = 0.0;
  bool flat = false;
};

FlagCurvatureFit flag_curvature_fit(const FinslerMetric& F, const FlagPoint& p);
FlagCurvatureFit flag_curvature_fit(const CurvatureBundle& b, std::span<const double> y);

// Pure finite-difference evaluation of the same pipeline, used to
// cross-check the jet path.
namespace fd {

struct Steps {
  // step for derivatives of F^2 (spray level)
  double inner = 2e-2;
  // step for derivatives of the spray (curvature level)
  double outer = 6e-2;
};

struct Pipeline {
  std::vector<double> spray;
  std::vector<double> riemann;
  double ricci = 0.0;
  double S = 0.0;
  double S_dot = 0.0;
  bool step_warning = false;
};

std::vector<double> spray(const FinslerMetric& F, std::span<const double> x,
                          std::span<const double> y, double step);
Pipeline evaluate(const FinslerMetric& F, const MeasureSpec& m, const FlagPoint& p,
                  const Steps& steps = {});

}  // namespace fd

}  // namespace finsler
