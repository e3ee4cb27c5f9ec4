#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include "finsler/jets.hpp"

namespace finsler {

// A field evaluable both on plain coordinates and on jets. The factories
// take one generic callable and keep both instantiations, so the same
// formula drives exact jet differentiation and finite differences.
template <class Result>
class GenericField {
 public:
  template <class T>
  using Out = std::conditional_t<std::is_same_v<Result, double>, T, std::vector<T>>;

  GenericField() = default;

  template <class Fn>
  static GenericField from(Fn fn) {
    GenericField f;
    f.real_ = [fn](std::span<const double> x) -> Out<double> { return fn(x); };
    f.jet_ = [fn](std::span<const Jet> x) -> Out<Jet> { return fn(x); };
    return f;
  }

  explicit operator bool() const { return static_cast<bool>(real_); }

  Out<double> operator()(std::span<const double> x) const { return real_(x); }
  Out<Jet> operator()(std::span<const Jet> x) const { return jet_(x); }
  Out<double> operator()(const std::vector<double>& x) const { return real_(x); }
  Out<Jet> operator()(const std::vector<Jet>& x) const { return jet_(x); }

 private:
  std::function<Out<double>(std::span<const double>)> real_;
  std::function<Out<Jet>(std::span<const Jet>)> jet_;
};

using ScalarField = GenericField<double>;
// n components (a vector or covector field) or n*n row-major components.
using ArrayField = GenericField<std::vector<double>>;

inline ScalarField constant_scalar(double c) {
  return ScalarField::from([c](auto x) { return constant_like(x[0], c); });
}

inline ScalarField sum(ScalarField a, ScalarField b, double scale_b = 1.0) {
  return ScalarField::from([a, b, scale_b](auto x) { return a(x) + scale_b * b(x); });
}

inline ArrayField sum(ArrayField a, ArrayField b, double scale_b = 1.0) {
  return ArrayField::from([a, b, scale_b](auto x) {
    auto u = a(x);
    auto v = b(x);
    if (u.size() != v.size()) throw std::invalid_argument("field component counts differ");
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += scale_b * v[i];
    return u;
  });
}

inline ArrayField zero_vector_field(int n) {
  return ArrayField::from([n](auto x) {
    using T = std::decay_t<decltype(x[0])>;
    return std::vector<T>(n, constant_like(x[0], 0.0));
  });
}

// F(x, y) on 2n inputs: first n are x, last n are y.
class FlagFunction {
 public:
  FlagFunction() = default;

  template <class Fn>
  static FlagFunction from(Fn fn) {
    FlagFunction f;
    f.real_ = [fn](std::span<const double> x, std::span<const double> y) { return fn(x, y); };
    f.jet_ = [fn](std::span<const Jet> x, std::span<const Jet> y) { return fn(x, y); };
    return f;
  }

  explicit operator bool() const { return static_cast<bool>(real_); }
  double operator()(std::span<const double> x, std::span<const double> y) const {
    return real_(x, y);
  }
  Jet operator()(std::span<const Jet> x, std::span<const Jet> y) const { return jet_(x, y); }

 private:
  std::function<double(std::span<const double>, std::span<const double>)> real_;
  std::function<Jet(std::span<const Jet>, std::span<const Jet>)> jet_;
};

// Coordinate jets x^0..x^{n-1} around `x` in a dim-n space of given order.
std::vector<Jet> coordinate_jets(std::span<const double> x, int order);

}  // namespace finsler
