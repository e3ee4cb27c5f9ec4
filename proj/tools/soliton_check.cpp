// soliton_check: verify fixtures, run oracle cross-checks, list the catalog.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage error or unknown
// fixture, 3 evaluation error at a flag.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "finsler/fixtures.hpp"
#include "finsler/suites.hpp"

namespace {

using finsler::SuiteReport;
using nlohmann::ordered_json;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;
constexpr int kEvaluation = 3;

struct RunConfig {
  std::string fixture;
  std::string config_path;
  std::string perturb;
  std::string suite;
  std::size_t samples = 64;
  std::size_t count = 20;
  std::uint64_t seed = 42;
  std::uint64_t crosscheck_seed = 7;
  double tol = 1e-6;
  double crosscheck_tol = 0.0;
  std::string diff_mode = "jet";
  std::string format = "json";
  std::string output;
  int workers = 1;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int default_workers() {
  const char* env = std::getenv("SOLITON_WORKERS");
  if (!env || !*env) return 1;
  try {
    std::size_t used = 0;
    const int w = std::stoi(env, &used);
    if (used == std::string(env).size() && w >= 1) return w;
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("SOLITON_WORKERS must be a positive integer, got '") + env + "'");
}

// Values from a JSON config file fill whatever the command line left unset.
void apply_config_file(RunConfig& cfg, const CLI::App& cmd) {
  std::ifstream in(cfg.config_path);
  if (!in) throw UsageError("cannot read config file " + cfg.config_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + cfg.config_path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  auto unset = [&cmd](const char* opt) { return cmd.count(opt) == 0; };
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "fixture") {
        if (unset("--fixture")) cfg.fixture = value.get<std::string>();
      } else if (key == "samples") {
        if (unset("--samples")) cfg.samples = value.get<std::size_t>();
      } else if (key == "seed") {
        if (unset("--seed")) cfg.seed = value.get<std::uint64_t>();
      } else if (key == "tol") {
        if (unset("--tol")) cfg.tol = value.get<double>();
      } else if (key == "diff_mode") {
        if (unset("--diff-mode")) cfg.diff_mode = value.get<std::string>();
      } else if (key == "format") {
        if (unset("--format")) cfg.format = value.get<std::string>();
      } else if (key == "output") {
        if (unset("--output")) cfg.output = value.get<std::string>();
      } else if (key == "perturb") {
        if (unset("--perturb")) cfg.perturb = value.get<std::string>();
      } else {
        throw UsageError("config file: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + cfg.config_path + ": " + e.what());
  }
  if (cfg.diff_mode != "jet" && cfg.diff_mode != "fd")
    throw UsageError("diff_mode must be jet or fd");
  if (cfg.format != "json" && cfg.format != "csv" && cfg.format != "text")
    throw UsageError("format must be json, csv or text");
  if (cfg.samples < 1) throw UsageError("samples must be at least 1");
  if (!(cfg.tol > 0.0)) throw UsageError("tol must be positive");
}

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::scientific << v;
  return os.str();
}

ordered_json finite_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

ordered_json to_json(const SuiteReport& r, const char* subject_key, const char* count_key) {
  ordered_json j;
  j[subject_key] = r.subject;
  j["seed"] = r.seed;
  j[count_key] = r.samples;
  j["verdict"] = finsler::to_string(r.verdict);
  ordered_json checks = ordered_json::array();
  for (const auto& b : r.bundles)
    for (const auto& c : b.checks) {
      ordered_json row;
      row["bundle"] = b.name;
      row["name"] = c.name;
      row["paper_ref"] = c.formula;
      row["max_abs"] = finite_or_null(c.max_abs);
      row["mean_abs"] = finite_or_null(c.mean_abs);
      row["max_rel"] = finite_or_null(c.max_rel);
      row["tol"] = c.tolerance;
      row["verdict"] = finsler::to_string(c.verdict);
      row["informational"] = c.informational;
      if (!c.note.empty()) row["note"] = c.note;
      checks.push_back(row);
    }
  j["checks"] = checks;
  return j;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string render(const SuiteReport& r, const std::string& format, bool is_suite) {
  std::ostringstream os;
  if (format == "json") {
    os << to_json(r, is_suite ? "suite" : "fixture", is_suite ? "count" : "samples").dump(2) << "\n";
  } else if (format == "csv") {
    os << (is_suite ? "suite" : "fixture")
       << ",bundle,name,paper_ref,max_abs,mean_abs,max_rel,tol,verdict,informational\n";
    for (const auto& b : r.bundles)
      for (const auto& c : b.checks)
        os << csv_field(r.subject) << "," << csv_field(b.name) << "," << csv_field(c.name) << ","
           << csv_field(c.formula) << "," << number(c.max_abs) << "," << number(c.mean_abs) << ","
           << number(c.max_rel) << "," << number(c.tolerance) << "," << finsler::to_string(c.verdict)
           << "," << (c.informational ? "true" : "false") << "\n";
  } else {
    os << (is_suite ? "suite " : "fixture ") << r.subject << "  seed " << r.seed << "  "
       << (is_suite ? "count " : "samples ") << r.samples << "\n";
    for (const auto& b : r.bundles) {
      os << "\n[" << b.name << "] " << finsler::to_string(b.verdict);
      if (!b.note.empty()) os << "  (" << b.note << ")";
      os << "\n";
      for (const auto& c : b.checks) {
        os << "  " << std::left << std::setw(22) << c.name << std::setw(15)
           << finsler::to_string(c.verdict) << "max " << number(c.max_abs) << "  mean "
           << number(c.mean_abs) << "  tol " << number(c.tolerance);
        if (c.informational) os << "  [info]";
        os << "\n";
      }
    }
    os << "\nverdict: " << finsler::to_string(r.verdict) << "\n";
  }
  return os.str();
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

// names of the failing, non-informational checks, for the terminal
void summarize_failures(const SuiteReport& r) {
  for (const auto& b : r.bundles)
    for (const auto& c : b.checks)
      if (!c.informational && c.verdict == finsler::Verdict::Fail)
        std::cerr << "FAIL " << b.name << "/" << c.name << ": max " << number(c.max_abs) << " > tol "
                  << number(c.tolerance) << "\n";
}

int exit_for(const SuiteReport& r) {
  return r.verdict == finsler::Verdict::Fail ? kFail : kPass;
}

void print_fixture_list(std::ostream& os) {
  os << "available fixtures:";
  for (const auto& n : finsler::fixture_names()) os << " " << n;
  os << "\n";
}

int cmd_verify(RunConfig cfg, const CLI::App& cmd) {
  if (!cfg.config_path.empty()) apply_config_file(cfg, cmd);
  if (cfg.fixture.empty()) throw UsageError("verify needs --fixture or a config file naming one");
  finsler::Fixture fx;
  try {
    fx = finsler::make_fixture(cfg.fixture);
  } catch (const finsler::UnknownFixture&) {
    std::cerr << "unknown fixture '" << cfg.fixture << "'\n";
    print_fixture_list(std::cerr);
    return kUsage;
  }
  if (!cfg.perturb.empty()) {
    try {
      fx = finsler::perturbed(fx, finsler::parse_perturbation(cfg.perturb));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  finsler::VerifyOptions opt;
  opt.samples = cfg.samples;
  opt.seed = cfg.seed;
  opt.tol = cfg.tol;
  opt.mode = cfg.diff_mode == "fd" ? finsler::DiffMode::FD : finsler::DiffMode::Jet;
  opt.workers = cfg.workers;
  const auto report = finsler::verify_fixture(fx, opt);
  emit(render(report, cfg.format, false), cfg.output);
  summarize_failures(report);
  return exit_for(report);
}

int cmd_crosscheck(const RunConfig& cfg) {
  std::vector<std::string> suites;
  if (cfg.suite.empty() || cfg.suite == "all") {
    for (const auto& s : finsler::crosscheck_suites()) suites.push_back(s.name);
  } else {
    suites.push_back(cfg.suite);
  }
  finsler::CrosscheckOptions opt;
  opt.count = cfg.count;
  opt.seed = cfg.crosscheck_seed;
  opt.tol = cfg.crosscheck_tol;
  opt.workers = cfg.workers;
  int code = kPass;
  std::string text;
  ordered_json all = ordered_json::array();
  for (const auto& name : suites) {
    SuiteReport r;
    try {
      r = finsler::run_crosscheck(name, opt);
    } catch (const std::out_of_range&) {
      std::cerr << "unknown suite '" << name << "'; available:";
      for (const auto& s : finsler::crosscheck_suites()) std::cerr << " " << s.name;
      std::cerr << "\n";
      return kUsage;
    }
    if (cfg.format == "json" && suites.size() > 1)
      all.push_back(to_json(r, "suite", "count"));
    else
      text += render(r, cfg.format, true);
    summarize_failures(r);
    code = std::max(code, exit_for(r));
  }
  if (cfg.format == "json" && suites.size() > 1) text = all.dump(2) + "\n";
  emit(text, cfg.output);
  return code;
}

int cmd_list(bool suites, const std::string& format) {
  if (format == "json") {
    ordered_json arr = ordered_json::array();
    if (suites) {
      for (const auto& s : finsler::crosscheck_suites())
        arr.push_back({{"name", s.name}, {"description", s.description}, {"tol", s.tol}});
    } else {
      for (const auto& n : finsler::fixture_names()) {
        const auto fx = finsler::make_fixture(n);
        arr.push_back({{"name", n}, {"dim", fx.dim}, {"summary", fx.summary}, {"domain", fx.domain}});
      }
    }
    std::cout << arr.dump(2) << "\n";
    return kPass;
  }
  if (suites) {
    for (const auto& s : finsler::crosscheck_suites())
      std::cout << std::left << std::setw(18) << s.name << " tol " << number(s.tol) << "  "
                << s.description << "\n";
  } else {
    for (const auto& n : finsler::fixture_names()) {
      const auto fx = finsler::make_fixture(n);
      std::cout << std::left << std::setw(22) << n << " n=" << fx.dim << "  " << fx.summary << "\n";
    }
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Almost Ricci soliton checks for Finsler and Randers metrics"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* verify = app.add_subcommand("verify", "run every applicable check on a fixture");
  verify->add_option("--fixture", cfg.fixture, "fixture name (see `list`)");
  verify->add_option("--config", cfg.config_path, "JSON file with run settings");
  verify->add_option("--samples", cfg.samples, "number of seeded flags")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", cfg.seed, "sampling seed");
  verify->add_option("--tol", cfg.tol, "absolute tolerance on scale-free residuals")
      ->check(CLI::PositiveNumber);
  verify->add_option("--diff-mode", cfg.diff_mode, "curvature differentiation: jet or fd")
      ->check(CLI::IsMember({"jet", "fd"}));
  verify->add_option("--perturb", cfg.perturb, "negative control, field:eps with field f|W|kappa|mu");
  verify->add_option("--format", cfg.format)->check(CLI::IsMember({"json", "csv", "text"}));
  verify->add_option("--output", cfg.output, "report path (default standard output)");
  verify->add_option("--workers", cfg.workers, "worker threads (default $SOLITON_WORKERS or 1)")
      ->check(CLI::PositiveNumber);

  auto* cross = app.add_subcommand("crosscheck", "oracle-equivalence suites");
  cross->add_option("--suite", cfg.suite, "suite name or all (default all)");
  cross->add_option("--count", cfg.count, "metrics or flags per suite")->check(CLI::PositiveNumber);
  cross->add_option("--seed", cfg.crosscheck_seed, "sampling seed");
  cross->add_option("--tol", cfg.crosscheck_tol, "override the suite tolerance")
      ->check(CLI::PositiveNumber);
  cross->add_option("--format", cfg.format)->check(CLI::IsMember({"json", "csv", "text"}));
  cross->add_option("--output", cfg.output, "report path (default standard output)");
  cross->add_option("--workers", cfg.workers, "worker threads (default $SOLITON_WORKERS or 1)")
      ->check(CLI::PositiveNumber);

  bool list_suites = false;
  std::string list_format = "text";
  auto* list = app.add_subcommand("list", "fixture and suite catalog");
  list->add_flag("--suites", list_suites, "list cross-check suites instead of fixtures");
  list->add_option("--format", list_format)->check(CLI::IsMember({"json", "text"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (verify->count("--workers") == 0 && cross->count("--workers") == 0)
      cfg.workers = default_workers();
    if (*verify) return cmd_verify(cfg, *verify);
    if (*cross) return cmd_crosscheck(cfg);
    return cmd_list(list_suites, list_format);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const finsler::FixtureError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const finsler::EvaluationError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kEvaluation;
  } catch (const std::exception& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kEvaluation;
  }
}
