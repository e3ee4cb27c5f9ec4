#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace finsler {

// Raised when an elementary function is evaluated outside its domain.
class DomainError : public std::runtime_error {
 public:
  DomainError(std::string primitive, const std::string& detail);
  const std::string& primitive() const { return primitive_; }

 private:
  std::string primitive_;
};

inline constexpr int kMaxJetOrder = 4;
inline constexpr int kMaxJetDim = 16;

// Monomial tables for truncated Taylor polynomials in `dim` variables of
// total degree <= `order`. Monomials are enumerated by degree, so the
// monomials of a lower order form a prefix of this table.
class JetSpace {
 public:
  struct Term {
    std::uint32_t a, b, c;
  };

  static const JetSpace& get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  std::size_t size() const { return count_[order_]; }
  // number of monomials of degree <= k
  std::size_t prefix(int k) const { return count_[k]; }

  std::span<const int> exponents(std::size_t k) const {
    return {exps_.data() + k * dim_, static_cast<std::size_t>(dim_)};
  }
  int degree(std::size_t k) const { return degree_[k]; }
  std::size_t index_of(std::span<const int> exps) const;

  // products whose result degree is <= order
  std::span<const Term> products() const { return products_; }
  // shifted_[v][k]: index of monomial k times x_v; defined for k < prefix(order-1)
  std::uint32_t shifted(int v, std::size_t k) const { return shifted_[v][k]; }

 private:
  JetSpace(int dim, int order);

  int dim_;
  int order_;
  std::vector<std::size_t> count_;
  std::vector<int> exps_;
  std::vector<int> degree_;
  std::vector<Term> products_;
  std::vector<std::vector<std::uint32_t>> shifted_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
};

// Truncated Taylor expansion of a scalar around a point. coeff(m) is
// (1/m!) d^m f. Binary operations between jets of different order work in
// the lower order; both operands must have the same dimension.
class Jet {
 public:
  Jet() = default;
  Jet(const JetSpace& space, double value);
  static Jet variable(const JetSpace& space, int var, double value);

  const JetSpace& space() const { return *space_; }
  bool empty() const { return space_ == nullptr; }
  int dim() const { return space_->dim(); }
  int order() const { return space_->order(); }
  double value() const { return c_[0]; }

  std::span<const double> coeffs() const { return c_; }
  double coeff(std::size_t k) const { return c_[k]; }
  double coeff(std::span<const int> exps) const;
  // partial derivative d^m f at the expansion point
  double derivative(std::span<const int> exps) const;
  // partial derivative along the listed variables (with repetition)
  double partial(std::initializer_list<int> vars) const;

  // exact derivative as a jet of one lower order
  Jet differentiate(int var) const;
  Jet truncate(int order) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
  Jet& operator+=(double v);
  Jet& operator-=(double v);
  Jet& operator*=(double v);
  Jet& operator/=(double v);

  friend Jet operator-(const Jet& a);
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b) { Jet r = a; return r /= b; }
  friend Jet operator+(Jet a, double v) { return a += v; }
  friend Jet operator+(double v, Jet a) { return a += v; }
  friend Jet operator-(Jet a, double v) { return a -= v; }
  friend Jet operator-(double v, const Jet& a) { return (-a) += v; }
  friend Jet operator*(Jet a, double v) { return a *= v; }
  friend Jet operator*(double v, Jet a) { return a *= v; }
  friend Jet operator/(Jet a, double v) { return a /= v; }
  friend Jet operator/(double v, const Jet& a);

  // sum_k taylor[k] * (self - value)^k, the composition with a scalar
  // function whose normalized Taylor coefficients at value() are `taylor`.
  Jet compose(std::span<const double> taylor) const;

 private:
  explicit Jet(const JetSpace* space) : space_(space), c_(space->size(), 0.0) {}
  void align(const Jet& o);

  const JetSpace* space_ = nullptr;
  std::vector<double> c_;
};

Jet sqrt(const Jet& u);
Jet pow(const Jet& u, double p);
Jet exp(const Jet& u);
Jet log(const Jet& u);
Jet sin(const Jet& u);
Jet cos(const Jet& u);
Jet tan(const Jet& u);
Jet sinh(const Jet& u);
Jet cosh(const Jet& u);
Jet tanh(const Jet& u);
Jet asinh(const Jet& u);

// Double overloads with the same domain checks, so generic code written
// against either scalar type reports domain errors identically.
double sqrt(double u);
double pow(double u, double p);
double exp(double u);
double log(double u);
double sin(double u);
double cos(double u);
double tan(double u);
double sinh(double u);
double cosh(double u);
double tanh(double u);
double asinh(double u);

inline double value_of(double v) { return v; }
inline double value_of(const Jet& v) { return v.value(); }
inline double constant_like(double, double c) { return c; }
inline Jet constant_like(const Jet& like, double c) { return Jet(like.space(), c); }

struct FlagPoint {
  int chart = 0;
  std::vector<double> x;
  std::vector<double> y;

  int dim() const { return static_cast<int>(x.size()); }
  // throws std::invalid_argument when y = 0 or sizes disagree
  void validate() const;
};

// "(x0, x1, ...)" with 10 significant digits
std::string describe_point(std::span<const double> x);
// "x=(...) y=(...)"
std::string describe(const FlagPoint& p);

using JetMap = std::function<Jet(std::span<const Jet>)>;
using RealMap = std::function<double(std::span<const double>)>;

// Lift f at `point` to a jet of the given order in the variables listed in
// `active`; inactive inputs enter as constants.
Jet lift(const JetMap& f, std::span<const double> point, int order,
         std::span<const int> active);
// Same, with the 2n inputs (x, y) of a flag.
Jet lift(const JetMap& f, const FlagPoint& p, int order,
         std::span<const int> active);

struct FdResult {
  double value = 0.0;
  bool step_warning = false;
  // order of the leading truncation term in the step
  int truncation_order = 4;
};

double default_fd_step(double coordinate);

// Central difference for d^m f (|m| <= 3) with one Richardson level.
FdResult fd_derivative(const RealMap& f, std::span<const double> point,
                       std::span<const int> multi_index, double step);

using RealVectorMap = std::function<std::vector<double>(std::span<const double>)>;
// Component-wise version of fd_derivative for vector-valued maps.
std::vector<double> fd_derivative_vector(const RealVectorMap& f, std::span<const double> point,
                                         std::span<const int> multi_index, double step,
                                         bool* step_warning = nullptr);

}  // namespace finsler
