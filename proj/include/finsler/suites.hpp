#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finsler/fixtures.hpp"
#include "finsler/report.hpp"
#include "finsler/soliton.hpp"

namespace finsler {

struct VerifyOptions {
  std::size_t samples = 64;
  std::uint64_t seed = 42;
  double tol = 1e-6;
  // applies to the curvature checks on F; the characterization bundles use jets
  DiffMode mode = DiffMode::Jet;
  int workers = 1;
};

struct SuiteReport {
  std::string subject;  // fixture or suite name
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::vector<CheckBundle> bundles;
  Verdict verdict = Verdict::NotApplicable;
};

// The fixture's full applicable suite: its curvature laws, the Ric_inf
// criterion, the fitted S-curvature, construction constraints, and the
// characterization bundles with the declared kappa, sigma and mu.
SuiteReport verify_fixture(const Fixture& fx, const VerifyOptions& opt);

struct CrosscheckOptions {
  std::size_t count = 20;
  std::uint64_t seed = 7;
  // <= 0 selects the suite's own tolerance
  double tol = 0.0;
  int workers = 1;
};

struct SuiteInfo {
  std::string name;
  std::string description;
  double tol;
};

std::vector<SuiteInfo> crosscheck_suites();
// Throws UnknownFixture-style std::out_of_range for an unknown suite.
SuiteReport run_crosscheck(const std::string& suite, const CrosscheckOptions& opt);

}  // namespace finsler
