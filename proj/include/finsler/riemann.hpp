#pragma once

#include <span>
#include <vector>

#include "finsler/fields.hpp"
#include "finsler/jets.hpp"

namespace finsler {

// h_ij(x) as n*n row-major components.
struct RiemannMetric {
  int dim = 0;
  ArrayField h;
};

// Vector fields carry upper components W^i; 1-forms carry lower components.
using VectorFieldSpec = ArrayField;
using ScalarFieldSpec = ScalarField;

enum class Slot { Up, Down };

// Components of a tensor at a point, each entry a jet in the coordinates.
struct JetTensor {
  int n = 0;
  std::vector<Slot> slots;
  std::vector<Jet> data;

  int rank() const { return static_cast<int>(slots.size()); }
  std::vector<double> values() const;
};

// Levi-Civita connection of h expanded around x. With metric jets of order
// K the Christoffel symbols are exact to order K-1.
class LeviCivita {
 public:
  LeviCivita(const RiemannMetric& h, std::span<const double> x, int order);

  int dim() const { return n_; }
  int order() const { return order_; }
  const std::vector<Jet>& coordinates() const { return x_; }
  const std::vector<Jet>& metric() const { return h_; }
  const std::vector<Jet>& inverse() const { return hinv_; }
  // gamma[(k*n + i)*n + j] = Gamma^k_ij
  const std::vector<Jet>& christoffel() const { return gamma_; }
  double condition() const { return condition_; }

  // nabla T with the derivative index appended as the last (lower) slot
  JetTensor covariant(const JetTensor& t) const;
  // R_jk (needs order >= 2)
  std::vector<Jet> ricci_tensor() const;

  JetTensor scalar(const Jet& f) const;
  JetTensor vector(std::vector<Jet> upper) const;
  JetTensor covector(std::vector<Jet> lower) const;
  std::vector<Jet> lower(std::span<const Jet> upper) const;
  std::vector<Jet> raise(std::span<const Jet> lower) const;

 private:
  int n_;
  int order_;
  std::vector<Jet> x_;
  std::vector<Jet> h_;
  std::vector<Jet> hinv_;
  std::vector<Jet> gamma_;
  double condition_ = 1.0;
};

std::vector<double> christoffel(const RiemannMetric& h, std::span<const double> x);
std::vector<double> ricci_tensor(const RiemannMetric& h, std::span<const double> x);
double riemann_ricci(const RiemannMetric& h, std::span<const double> x,
                     std::span<const double> y);
// out[i*n + j] = b_{i;j}
std::vector<double> covariant_derivative_1form(const RiemannMetric& h, const ArrayField& b,
                                               std::span<const double> x);
// out[i*n + j] = f_{:ij}
std::vector<double> hessian_matrix(const RiemannMetric& h, const ScalarField& f,
                                   std::span<const double> x);
double hessian(const RiemannMetric& h, const ScalarField& f, std::span<const double> x,
               std::span<const double> y);
double lie_h2(const RiemannMetric& h, const VectorFieldSpec& V, std::span<const double> x,
              std::span<const double> y);
double lie_W0(const RiemannMetric& h, const VectorFieldSpec& W, const VectorFieldSpec& V,
              std::span<const double> x, std::span<const double> y);
// V_{i:j} + V_{j:i} - 4 c h_ij
std::vector<double> conformal_residual(const RiemannMetric& h, const VectorFieldSpec& V,
                                       const ScalarField& c, std::span<const double> x);

// helpers shared by the Finsler and Randers layers
double quadratic_form(std::span<const double> m, std::span<const double> y);
double frobenius_norm(std::span<const double> m);

}  // namespace finsler
