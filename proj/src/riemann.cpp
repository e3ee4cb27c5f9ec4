#include "finsler/riemann.hpp"

#include <cmath>
#include <stdexcept>

#include "finsler/linalg.hpp"

namespace finsler {

std::vector<Jet> coordinate_jets(std::span<const double> x, int order) {
  const JetSpace& s = JetSpace::get(static_cast<int>(x.size()), order);
  std::vector<Jet> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out.push_back(Jet::variable(s, static_cast<int>(i), x[i]));
  return out;
}

std::vector<double> JetTensor::values() const {
  std::vector<double> v(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) v[i] = data[i].value();
  return v;
}

LeviCivita::LeviCivita(const RiemannMetric& h, std::span<const double> x, int order)
    : n_(h.dim), order_(order) {
  if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("point dimension mismatch");
  if (order < 1) throw std::invalid_argument("connection needs metric jets of order >= 1");
  x_ = coordinate_jets(x, order);
  h_ = h.h(x_);
  if (static_cast<int>(h_.size()) != n_ * n_)
    throw std::invalid_argument("metric must return n*n components");
  const auto hv = values_of<Jet>(h_);
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j)
      if (std::abs(hv[i * n_ + j] - hv[j * n_ + i]) >
          1e-12 * (std::abs(hv[i * n_ + j]) + std::abs(hv[j * n_ + i]) + 1.0))
        throw std::invalid_argument("metric is not symmetric at " + describe_point(x));
  if (!leading_minors_positive(hv, n_))
    throw NotPositiveDefiniteError("metric is not positive definite at " + describe_point(x));
  auto inv = invert<Jet>(h_, n_);
  hinv_ = std::move(inv.inverse);
  condition_ = inv.condition;

  const int n = n_;
  // dh[(l*n + i)*n + j] = d_l h_ij
  std::vector<Jet> dh;
  dh.reserve(n * n * n);
  for (int l = 0; l < n; ++l)
    for (int ij = 0; ij < n * n; ++ij) dh.push_back(h_[ij].differentiate(l));
  std::vector<Jet> first;  // Gamma_{l,ij} = 1/2 (d_i h_jl + d_j h_il - d_l h_ij)
  first.reserve(n * n * n);
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        first.push_back(0.5 * (dh[(i * n + j) * n + l] + dh[(j * n + i) * n + l] -
                               dh[(l * n + i) * n + j]));
  gamma_.reserve(n * n * n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Jet s = hinv_[k * n] * first[(0 * n + i) * n + j];
        for (int l = 1; l < n; ++l) s += hinv_[k * n + l] * first[(l * n + i) * n + j];
        gamma_.push_back(std::move(s));
      }
}

JetTensor LeviCivita::covariant(const JetTensor& t) const {
  const int n = n_;
  const int r = t.rank();
  std::size_t count = 1;
  for (int s = 0; s < r; ++s) count *= n;
  std::vector<std::size_t> stride(r, 1);
  for (int s = r - 2; s >= 0; --s) stride[s] = stride[s + 1] * n;

  JetTensor out;
  out.n = n;
  out.slots = t.slots;
  out.slots.push_back(Slot::Down);
  out.data.reserve(count * n);
  std::vector<int> idx(r, 0);
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t rem = flat;
    for (int s = 0; s < r; ++s) {
      idx[s] = static_cast<int>(rem / stride[s]);
      rem %= stride[s];
    }
    for (int k = 0; k < n; ++k) {
      Jet v = t.data[flat].differentiate(k);
      for (int s = 0; s < r; ++s) {
        const std::size_t base = flat - idx[s] * stride[s];
        for (int p = 0; p < n; ++p) {
          const Jet& tp = t.data[base + p * stride[s]];
          if (t.slots[s] == Slot::Up) {
            v += gamma_[(idx[s] * n + k) * n + p] * tp;
          } else {
            v -= gamma_[(p * n + k) * n + idx[s]] * tp;
          }
        }
      }
      out.data.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<Jet> LeviCivita::ricci_tensor() const {
  if (order_ < 2) throw std::logic_error("Ricci tensor needs metric jets of order >= 2");
  const int n = n_;
  auto G = [&](int k, int i, int j) -> const Jet& { return gamma_[(k * n + i) * n + j]; };
  std::vector<Jet> ric;
  ric.reserve(n * n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      Jet s = G(0, l, j).differentiate(0) - G(0, 0, j).differentiate(l);
      for (int i = 1; i < n; ++i) s += G(i, l, j).differentiate(i) - G(i, i, j).differentiate(l);
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < n; ++p) s += G(i, i, p) * G(p, l, j) - G(i, l, p) * G(p, i, j);
      ric.push_back(std::move(s));
    }
  return ric;
}

JetTensor LeviCivita::scalar(const Jet& f) const { return {n_, {}, {f}}; }

JetTensor LeviCivita::vector(std::vector<Jet> upper) const {
  return {n_, {Slot::Up}, std::move(upper)};
}

JetTensor LeviCivita::covector(std::vector<Jet> lower) const {
  return {n_, {Slot::Down}, std::move(lower)};
}

std::vector<Jet> LeviCivita::lower(std::span<const Jet> upper) const {
  std::vector<Jet> out;
  for (int i = 0; i < n_; ++i) {
    Jet s = h_[i * n_] * upper[0];
    for (int j = 1; j < n_; ++j) s += h_[i * n_ + j] * upper[j];
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Jet> LeviCivita::raise(std::span<const Jet> lower) const {
  std::vector<Jet> out;
  for (int i = 0; i < n_; ++i) {
    Jet s = hinv_[i * n_] * lower[0];
    for (int j = 1; j < n_; ++j) s += hinv_[i * n_ + j] * lower[j];
    out.push_back(std::move(s));
  }
  return out;
}

double quadratic_form(std::span<const double> m, std::span<const double> y) {
  const std::size_t n = y.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s += m[i * n + j] * y[i] * y[j];
  return s;
}

double frobenius_norm(std::span<const double> m) {
  double s = 0.0;
  for (double v : m) s += v * v;
  return std::sqrt(s);
}

std::vector<double> christoffel(const RiemannMetric& h, std::span<const double> x) {
  LeviCivita lc(h, x, 1);
  return values_of<Jet>(lc.christoffel());
}

std::vector<double> ricci_tensor(const RiemannMetric& h, std::span<const double> x) {
  LeviCivita lc(h, x, 2);
  return values_of<Jet>(lc.ricci_tensor());
}

double riemann_ricci(const RiemannMetric& h, std::span<const double> x,
                     std::span<const double> y) {
  return quadratic_form(ricci_tensor(h, x), y);
}

std::vector<double> covariant_derivative_1form(const RiemannMetric& h, const ArrayField& b,
                                               std::span<const double> x) {
  LeviCivita lc(h, x, 1);
  return lc.covariant(lc.covector(b(lc.coordinates()))).values();
}

std::vector<double> hessian_matrix(const RiemannMetric& h, const ScalarField& f,
                                   std::span<const double> x) {
  LeviCivita lc(h, x, 2);
  auto df = lc.covariant(lc.scalar(f(lc.coordinates())));
  return lc.covariant(df).values();
}

double hessian(const RiemannMetric& h, const ScalarField& f, std::span<const double> x,
               std::span<const double> y) {
  return quadratic_form(hessian_matrix(h, f, x), y);
}

namespace {

// V_{i:j} with V given by upper components
std::vector<double> lowered_derivative(const LeviCivita& lc, const VectorFieldSpec& V) {
  auto v = V(lc.coordinates());
  return lc.covariant(lc.covector(lc.lower(v))).values();
}

}  // namespace

double lie_h2(const RiemannMetric& h, const VectorFieldSpec& V, std::span<const double> x,
              std::span<const double> y) {
  LeviCivita lc(h, x, 1);
  return 2.0 * quadratic_form(lowered_derivative(lc, V), y);
}

double lie_W0(const RiemannMetric& h, const VectorFieldSpec& W, const VectorFieldSpec& V,
              std::span<const double> x, std::span<const double> y) {
  LeviCivita lc(h, x, 1);
  const int n = h.dim;
  const auto dW = lowered_derivative(lc, W);
  const auto dV = lowered_derivative(lc, V);
  const auto w = values_of<Jet>(W(lc.coordinates()));
  const auto v = values_of<Jet>(V(lc.coordinates()));
  double s = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) s += (v[k] * dW[j * n + k] + w[k] * dV[k * n + j]) * y[j];
  return s;
}

std::vector<double> conformal_residual(const RiemannMetric& h, const VectorFieldSpec& V,
                                       const ScalarField& c, std::span<const double> x) {
  LeviCivita lc(h, x, 1);
  const int n = h.dim;
  const auto dV = lowered_derivative(lc, V);
  const double cv = c(std::vector<double>(x.begin(), x.end()));
  std::vector<double> out(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out[i * n + j] = dV[i * n + j] + dV[j * n + i] - 4.0 * cv * lc.metric()[i * n + j].value();
  return out;
}

}  // namespace finsler
