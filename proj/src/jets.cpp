#include "finsler/jets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace finsler {

DomainError::DomainError(std::string primitive, const std::string& detail)
    : std::runtime_error(primitive + ": " + detail), primitive_(std::move(primitive)) {}

namespace {

std::uint64_t key_of(std::span<const int> exps) {
  std::uint64_t key = 0;
  for (int e : exps) key = (key << 4) | static_cast<std::uint64_t>(e);
  return key;
}

void enumerate_degree(int dim, int degree, int var, std::vector<int>& cur,
                      std::vector<int>& out) {
  if (var == dim - 1) {
    cur[var] = degree;
    out.insert(out.end(), cur.begin(), cur.end());
    cur[var] = 0;
    return;
  }
  for (int e = degree; e >= 0; --e) {
    cur[var] = e;
    enumerate_degree(dim, degree - e, var + 1, cur, out);
  }
  cur[var] = 0;
}

std::mutex& space_mutex() {
  static std::mutex m;
  return m;
}

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

}  // namespace

JetSpace::JetSpace(int dim, int order) : dim_(dim), order_(order) {
  count_.assign(order + 1, 0);
  std::vector<int> cur(std::max(dim, 1), 0);
  if (dim == 0) {
    count_.assign(order + 1, 1);
    degree_.push_back(0);
  } else {
    for (int d = 0; d <= order; ++d) {
      enumerate_degree(dim, d, 0, cur, exps_);
      count_[d] = exps_.size() / dim;
    }
    degree_.resize(count_[order]);
    for (std::size_t k = 0; k < count_[order]; ++k) {
      int s = 0;
      for (int v = 0; v < dim; ++v) s += exps_[k * dim + v];
      degree_[k] = s;
    }
  }
}

const JetSpace& JetSpace::get(int dim, int order) {
  if (dim < 0 || dim > kMaxJetDim)
    throw std::invalid_argument("jet dimension out of range: " + std::to_string(dim));
  if (order < 0 || order > kMaxJetOrder)
    throw std::invalid_argument("jet order out of range: " + std::to_string(order));
  static std::map<std::pair<int, int>, std::unique_ptr<JetSpace>> cache;
  std::lock_guard<std::mutex> lock(space_mutex());
  auto it = cache.find({dim, order});
  if (it != cache.end()) return *it->second;

  std::unique_ptr<JetSpace> s(new JetSpace(dim, order));
  auto& index = s->index_;
  const std::size_t n = s->size();
  for (std::size_t k = 0; k < n; ++k) index[key_of(s->exponents(k))] = static_cast<std::uint32_t>(k);

  std::vector<int> sum(dim);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (s->degree_[a] + s->degree_[b] > order) continue;
      auto ea = s->exponents(a);
      auto eb = s->exponents(b);
      for (int v = 0; v < dim; ++v) sum[v] = ea[v] + eb[v];
      s->products_.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                              index.at(key_of(sum))});
    }
  }
  if (order >= 1) {
    const std::size_t lower = s->count_[order - 1];
    s->shifted_.resize(dim);
    for (int v = 0; v < dim; ++v) {
      s->shifted_[v].resize(lower);
      for (std::size_t k = 0; k < lower; ++k) {
        auto e = s->exponents(k);
        std::copy(e.begin(), e.end(), sum.begin());
        ++sum[v];
        s->shifted_[v][k] = index.at(key_of(sum));
      }
    }
  }
  const JetSpace& ref = *s;
  cache.emplace(std::make_pair(dim, order), std::move(s));
  return ref;
}

std::size_t JetSpace::index_of(std::span<const int> exps) const {
  if (static_cast<int>(exps.size()) != dim_)
    throw std::invalid_argument("multi-index length does not match jet dimension");
  int deg = 0;
  for (int e : exps) {
    if (e < 0) throw std::invalid_argument("negative multi-index entry");
    deg += e;
  }
  if (deg > order_) throw std::out_of_range("multi-index degree exceeds jet order");
  if (dim_ == 0) return 0;
  return index_.at(key_of(exps));
}

Jet::Jet(const JetSpace& space, double value) : space_(&space), c_(space.size(), 0.0) {
  c_[0] = value;
}

Jet Jet::variable(const JetSpace& space, int var, double value) {
  if (var < 0 || var >= space.dim()) throw std::out_of_range("jet variable index out of range");
  Jet j(space, value);
  if (space.order() >= 1) j.c_[1 + var] = 1.0;
  return j;
}

double Jet::coeff(std::span<const int> exps) const { return c_[space_->index_of(exps)]; }

double Jet::derivative(std::span<const int> exps) const {
  double f = 1.0;
  for (int e : exps) f *= factorial(e);
  return coeff(exps) * f;
}

double Jet::partial(std::initializer_list<int> vars) const {
  std::vector<int> e(dim(), 0);
  for (int v : vars) {
    if (v < 0 || v >= dim()) throw std::out_of_range("jet variable index out of range");
    ++e[v];
  }
  return derivative(e);
}

Jet Jet::differentiate(int var) const {
  if (order() == 0) throw std::logic_error("cannot differentiate an order-0 jet");
  if (var < 0 || var >= dim()) throw std::out_of_range("jet variable index out of range");
  const JetSpace& lower = JetSpace::get(dim(), order() - 1);
  Jet r(&lower);
  for (std::size_t k = 0; k < lower.size(); ++k) {
    r.c_[k] = (lower.exponents(k)[var] + 1) * c_[space_->shifted(var, k)];
  }
  return r;
}

Jet Jet::truncate(int new_order) const {
  if (new_order >= order()) return *this;
  const JetSpace& lower = JetSpace::get(dim(), new_order);
  Jet r(&lower);
  std::copy(c_.begin(), c_.begin() + lower.size(), r.c_.begin());
  return r;
}

void Jet::align(const Jet& o) {
  if (space_ == o.space_) return;
  if (dim() != o.dim()) throw std::invalid_argument("jet dimension mismatch");
  if (o.order() < order()) {
    c_.resize(o.space_->size());
    space_ = o.space_;
  }
}

Jet& Jet::operator+=(const Jet& o) {
  align(o);
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  align(o);
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("jet dimension mismatch");
  const JetSpace* s = a.order() <= b.order() ? a.space_ : b.space_;
  Jet r(s);
  const double* pa = a.c_.data();
  const double* pb = b.c_.data();
  double* pr = r.c_.data();
  for (const auto& t : s->products()) pr[t.c] += pa[t.a] * pb[t.b];
  return r;
}

Jet& Jet::operator*=(const Jet& o) { return *this = *this * o; }

Jet operator-(const Jet& a) {
  Jet r = a;
  for (double& v : r.c_) v = -v;
  return r;
}

Jet& Jet::operator+=(double v) {
  c_[0] += v;
  return *this;
}
Jet& Jet::operator-=(double v) {
  c_[0] -= v;
  return *this;
}
Jet& Jet::operator*=(double v) {
  for (double& c : c_) c *= v;
  return *this;
}
Jet& Jet::operator/=(double v) {
  if (v == 0.0) throw DomainError("division", "division by zero");
  for (double& c : c_) c /= v;
  return *this;
}

namespace {

std::vector<double> reciprocal_series(double u0, int order) {
  if (u0 == 0.0) throw DomainError("division", "division by a jet with zero value");
  std::vector<double> t(order + 1);
  double p = 1.0 / u0;
  for (int k = 0; k <= order; ++k) {
    t[k] = (k % 2 == 0 ? 1.0 : -1.0) * p;
    p /= u0;
  }
  return t;
}

}  // namespace

Jet& Jet::operator/=(const Jet& o) {
  align(o);
  return *this = *this * o.compose(reciprocal_series(o.value(), o.order()));
}

Jet operator/(double v, const Jet& a) {
  return a.compose(reciprocal_series(a.value(), a.order())) * v;
}

Jet Jet::compose(std::span<const double> taylor) const {
  const int k_max = std::min<int>(order(), static_cast<int>(taylor.size()) - 1);
  Jet delta = *this;
  delta.c_[0] = 0.0;
  Jet r(space_);
  r.c_[0] = taylor[k_max];
  for (int k = k_max - 1; k >= 0; --k) {
    r = r * delta;
    r.c_[0] += taylor[k];
  }
  return r;
}

namespace {

std::string describe(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double binomial_real(double p, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= (p - i) / (i + 1);
  return r;
}

bool is_nonnegative_integer(double p) { return p >= 0 && std::floor(p) == p && p <= 64; }

}  // namespace

Jet pow(const Jet& u, double p) {
  const double u0 = u.value();
  if (u0 > 0.0) {
    std::vector<double> t(u.order() + 1);
    for (int k = 0; k <= u.order(); ++k) t[k] = binomial_real(p, k) * std::pow(u0, p - k);
    return u.compose(t);
  }
  if (is_nonnegative_integer(p)) {
    Jet r(u.space(), 1.0);
    for (int i = 0; i < static_cast<int>(p); ++i) r *= u;
    return r;
  }
  throw DomainError("pow", "non-integer power of non-positive base " + describe(u0));
}

Jet sqrt(const Jet& u) {
  const double u0 = u.value();
  if (u0 < 0.0) throw DomainError("sqrt", "negative argument " + describe(u0));
  if (u0 == 0.0) {
    if (u.order() == 0) return Jet(u.space(), 0.0);
    throw DomainError("sqrt", "not differentiable at 0");
  }
  return pow(u, 0.5);
}

Jet exp(const Jet& u) {
  const double e = std::exp(u.value());
  std::vector<double> t(u.order() + 1);
  for (int k = 0; k <= u.order(); ++k) t[k] = e / factorial(k);
  return u.compose(t);
}

Jet log(const Jet& u) {
  const double u0 = u.value();
  if (!(u0 > 0.0)) throw DomainError("log", "non-positive argument " + describe(u0));
  std::vector<double> t(u.order() + 1);
  t[0] = std::log(u0);
  for (int k = 1; k <= u.order(); ++k)
    t[k] = (k % 2 == 1 ? 1.0 : -1.0) / (k * std::pow(u0, k));
  return u.compose(t);
}

Jet sin(const Jet& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  const double cycle[4] = {s, c, -s, -c};
  std::vector<double> t(u.order() + 1);
  for (int k = 0; k <= u.order(); ++k) t[k] = cycle[k % 4] / factorial(k);
  return u.compose(t);
}

Jet cos(const Jet& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  const double cycle[4] = {c, -s, -c, s};
  std::vector<double> t(u.order() + 1);
  for (int k = 0; k <= u.order(); ++k) t[k] = cycle[k % 4] / factorial(k);
  return u.compose(t);
}

Jet tan(const Jet& u) {
  if (std::cos(u.value()) == 0.0) throw DomainError("tan", "pole at " + describe(u.value()));
  return sin(u) / cos(u);
}

Jet sinh(const Jet& u) {
  const double s = std::sinh(u.value()), c = std::cosh(u.value());
  std::vector<double> t(u.order() + 1);
  for (int k = 0; k <= u.order(); ++k) t[k] = (k % 2 == 0 ? s : c) / factorial(k);
  return u.compose(t);
}

Jet cosh(const Jet& u) {
  const double s = std::sinh(u.value()), c = std::cosh(u.value());
  std::vector<double> t(u.order() + 1);
  for (int k = 0; k <= u.order(); ++k) t[k] = (k % 2 == 0 ? c : s) / factorial(k);
  return u.compose(t);
}

Jet tanh(const Jet& u) { return sinh(u) / cosh(u); }

Jet asinh(const Jet& u) {
  // odd symmetry keeps u + sqrt(u^2+1) away from cancellation
  if (u.value() < 0.0) return -asinh(-u);
  Jet r = log(u + sqrt(u * u + 1.0));
  return r - r.value() + std::asinh(u.value());
}

double sqrt(double u) {
  if (u < 0.0) throw DomainError("sqrt", "negative argument " + describe(u));
  return std::sqrt(u);
}
double pow(double u, double p) {
  if (u < 0.0 && std::floor(p) != p)
    throw DomainError("pow", "non-integer power of negative base " + describe(u));
  return std::pow(u, p);
}
double exp(double u) { return std::exp(u); }
double log(double u) {
  if (!(u > 0.0)) throw DomainError("log", "non-positive argument " + describe(u));
  return std::log(u);
}
double sin(double u) { return std::sin(u); }
double cos(double u) { return std::cos(u); }
double tan(double u) {
  if (std::cos(u) == 0.0) throw DomainError("tan", "pole at " + describe(u));
  return std::tan(u);
}
double sinh(double u) { return std::sinh(u); }
double cosh(double u) { return std::cosh(u); }
double tanh(double u) { return std::tanh(u); }
double asinh(double u) { return std::asinh(u); }

void FlagPoint::validate() const {
  if (x.empty()) throw std::invalid_argument("flag has no coordinates");
  if (x.size() != y.size()) throw std::invalid_argument("flag x and y dimensions differ");
  if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; }))
    throw std::invalid_argument("flag direction y must be nonzero");
}

Jet lift(const JetMap& f, std::span<const double> point, int order,
         std::span<const int> active) {
  const JetSpace& space = JetSpace::get(static_cast<int>(active.size()), order);
  std::vector<Jet> in;
  in.reserve(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    auto it = std::find(active.begin(), active.end(), static_cast<int>(i));
    if (it == active.end()) {
      in.emplace_back(space, point[i]);
    } else {
      in.push_back(Jet::variable(space, static_cast<int>(it - active.begin()), point[i]));
    }
  }
  for (int a : active)
    if (a < 0 || a >= static_cast<int>(point.size()))
      throw std::out_of_range("active variable outside the point");
  return f(in);
}

Jet lift(const JetMap& f, const FlagPoint& p, int order, std::span<const int> active) {
  p.validate();
  std::vector<double> point(p.x);
  point.insert(point.end(), p.y.begin(), p.y.end());
  return lift(f, point, order, active);
}

double default_fd_step(double coordinate) { return 1e-5 * std::max(1.0, std::abs(coordinate)); }

namespace {

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;
};

const Stencil& central_stencil(int k) {
  static const Stencil s1{{-1, 1}, {-0.5, 0.5}};
  static const Stencil s2{{-1, 0, 1}, {1.0, -2.0, 1.0}};
  static const Stencil s3{{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}};
  switch (k) {
    case 1: return s1;
    case 2: return s2;
    default: return s3;
  }
}

std::vector<double> central(const RealVectorMap& f, std::span<const double> point,
                            std::span<const int> m, double h) {
  std::vector<int> vars;
  for (std::size_t v = 0; v < m.size(); ++v)
    if (m[v] > 0) vars.push_back(static_cast<int>(v));
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> total;
  // walk the tensor product of the 1D stencils
  std::vector<std::size_t> pos(vars.size(), 0);
  while (true) {
    double w = 1.0;
    for (std::size_t a = 0; a < vars.size(); ++a) {
      const Stencil& s = central_stencil(m[vars[a]]);
      x[vars[a]] = point[vars[a]] + s.offsets[pos[a]] * h;
      w *= s.weights[pos[a]];
    }
    const std::vector<double> fx = f(x);
    if (total.empty()) total.assign(fx.size(), 0.0);
    for (std::size_t i = 0; i < fx.size(); ++i) total[i] += w * fx[i];
    std::size_t a = 0;
    for (; a < vars.size(); ++a) {
      if (++pos[a] < central_stencil(m[vars[a]]).offsets.size()) break;
      pos[a] = 0;
    }
    if (a == vars.size()) break;
  }
  int deg = 0;
  for (int e : m) deg += e;
  const double scale = std::pow(h, deg);
  for (double& t : total) t /= scale;
  return total;
}

}  // namespace

std::vector<double> fd_derivative_vector(const RealVectorMap& f, std::span<const double> point,
                                         std::span<const int> multi_index, double step,
                                         bool* step_warning) {
  if (multi_index.size() != point.size())
    throw std::invalid_argument("multi-index length does not match the point");
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  int deg = 0;
  for (int e : multi_index) {
    if (e < 0) throw std::invalid_argument("negative multi-index entry");
    deg += e;
  }
  if (deg > 3) throw std::invalid_argument("finite differences support total order <= 3");
  if (deg == 0) return f(point);
  if (step_warning) {
    for (std::size_t v = 0; v < point.size(); ++v) {
      if (multi_index[v] == 0) continue;
      const double scale = std::max(1.0, std::abs(point[v]));
      if (step / 2 <= 1e3 * std::numeric_limits<double>::epsilon() * scale) *step_warning = true;
    }
  }
  const auto coarse = central(f, point, multi_index, step);
  const auto fine = central(f, point, multi_index, step / 2);
  std::vector<double> r(coarse.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
  return r;
}

FdResult fd_derivative(const RealMap& f, std::span<const double> point,
                       std::span<const int> multi_index, double step) {
  FdResult r;
  auto wrapped = [&f](std::span<const double> x) { return std::vector<double>{f(x)}; };
  r.value = fd_derivative_vector(wrapped, point, multi_index, step, &r.step_warning)[0];
  return r;
}

std::string describe_point(std::span<const double> x) {
  std::ostringstream os;
  os.precision(10);
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

std::string describe(const FlagPoint& p) {
  return "x=" + describe_point(p.x) + " y=" + describe_point(p.y);
}

}  // namespace finsler
