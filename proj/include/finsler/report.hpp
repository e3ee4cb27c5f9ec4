#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace finsler {

enum class Verdict { Pass, Fail, NotApplicable };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::NotApplicable:
      return "not-applicable";
  }
  return "?";
}

// One side-by-side comparison at a single flag. `scale` turns the raw
// difference into a scale-free residual (for example F^2 for a
// 2-homogeneous identity).
struct IdentityResidual {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double scale = 1.0;

  double abs() const { return std::abs(lhs - rhs) / scale; }
  double rel() const {
    const double m = std::max(std::abs(lhs), std::abs(rhs));
    return m > 0.0 ? std::abs(lhs - rhs) / m : 0.0;
  }
};

struct ResidualReport {
  std::string name;
  // human-readable formula of the checked relation
  std::string formula;
  std::size_t samples = 0;
  double max_abs = 0.0;
  double mean_abs = 0.0;
  double max_rel = 0.0;
  double tolerance = 0.0;
  Verdict verdict = Verdict::NotApplicable;
  // reported but excluded from the overall verdict
  bool informational = false;
  std::string note;
};

class ResidualAccumulator {
 public:
  ResidualAccumulator(std::string name, std::string formula, double tol)
      : name_(std::move(name)), formula_(std::move(formula)), tol_(tol) {}

  void add(double abs, double rel) {
    ++count_;
    if (!std::isfinite(abs)) {
      nonfinite_ = true;
      return;
    }
    max_abs_ = std::max(max_abs_, abs);
    sum_abs_ += abs;
    if (std::isfinite(rel)) max_rel_ = std::max(max_rel_, rel);
  }
  void add(const IdentityResidual& r) { add(r.abs(), r.rel()); }

  void set_informational(bool v = true) { informational_ = v; }
  void not_applicable(std::string why) {
    not_applicable_ = true;
    note_ = std::move(why);
  }
  void set_note(std::string note) { note_ = std::move(note); }
  std::size_t count() const { return count_; }
  double max_abs() const { return max_abs_; }

  ResidualReport finish() const {
    ResidualReport r;
    r.name = name_;
    r.formula = formula_;
    r.samples = count_;
    r.max_abs = nonfinite_ ? INFINITY : max_abs_;
    const std::size_t finite = count_;
    r.mean_abs = finite ? sum_abs_ / static_cast<double>(finite) : 0.0;
    if (nonfinite_) r.mean_abs = INFINITY;
    r.max_rel = max_rel_;
    r.tolerance = tol_;
    r.informational = informational_;
    r.note = note_;
    if (not_applicable_ || count_ == 0)
      r.verdict = Verdict::NotApplicable;
    else
      r.verdict = (!nonfinite_ && max_abs_ <= tol_) ? Verdict::Pass : Verdict::Fail;
    return r;
  }

 private:
  std::string name_, formula_;
  double tol_;
  std::size_t count_ = 0;
  double max_abs_ = 0.0, sum_abs_ = 0.0, max_rel_ = 0.0;
  bool nonfinite_ = false, informational_ = false, not_applicable_ = false;
  std::string note_;
};

// Overall verdict of a bundle: fail if any non-informational check fails,
// pass if at least one passes, otherwise not applicable.
inline Verdict combine(const std::vector<ResidualReport>& reports) {
  bool any_pass = false;
  for (const auto& r : reports) {
    if (r.informational) continue;
    if (r.verdict == Verdict::Fail) return Verdict::Fail;
    if (r.verdict == Verdict::Pass) any_pass = true;
  }
  return any_pass ? Verdict::Pass : Verdict::NotApplicable;
}

}  // namespace finsler
