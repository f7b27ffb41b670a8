// warpflow: run scenarios, twin runs and report checks from the command line.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "warpflow/errors.hpp"
#include "warpflow/report.hpp"
#include "warpflow/scenario.hpp"

namespace fs = std::filesystem;
using namespace warpflow;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kCheckFailed = 2;
constexpr int kSolverError = 3;

void print_checks(const DiagnosticsReport& rep, std::ostream& os) {
  for (const auto& c : rep.checks) {
    os << "  " << (c.pass ? "ok  " : "FAIL") << ' ' << c.name << " = " << c.constant;
    if (c.hard) os << " (tol " << c.tolerance << ")";
    os << '\n';
  }
}

int run_one(const std::string& path, const std::optional<std::string>& out, std::optional<double> h,
            std::optional<double> t_end, std::ostream& log) {
  try {
    ScenarioConfig cfg = load_config(path);
    if (h) cfg.h = *h;
    if (t_end) cfg.schedule.t_end = *t_end;
    if (cfg.mode == "twin") {
      const TwinReport tw = twin_run(cfg, cfg.twin_delta, output_root(out, cfg) / cfg.name);
      log << cfg.name << ": twin delta=" << tw.delta << " sup|u1-u2|=" << tw.sup_difference
          << " amplification=" << tw.amplification << '\n';
      return kOk;
    }
    const ScenarioResult res = run_scenario(cfg, output_root(out, cfg) / cfg.name);
    log << cfg.name << ": " << res.report.records.size() << " records, " << res.report.events.size()
        << " singular events, output " << res.output_dir.string() << '\n';
    print_checks(res.report, log);
    return res.exit_code;
  } catch (const ConfigParseError& e) {
    log << path << ":" << e.line << ": " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    log << path << ": solver error: " << e.what() << '\n';
    return kSolverError;
  } catch (const std::exception& e) {
    log << path << ": error: " << e.what() << '\n';
    return kSolverError;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lorentzian harmonic map flow simulator"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::optional<std::string> out;
  std::optional<std::string> h_text;
  std::optional<double> h, t_end;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "run one or more scenario files");
  run->add_option("config", configs, "scenario file(s)")->required();
  run->add_option("--out", out, "output root (default $WARPFLOW_OUT)");
  run->add_option("--h", h_text, "override mesh.h (fractions like 1/64 allowed)");
  run->add_option("--t-end", t_end, "override schedule.t_end");
  run->add_option("--jobs", jobs, "scenarios to run concurrently")->check(CLI::PositiveNumber);

  std::string twin_config;
  double delta = 0.0;
  std::optional<std::string> twin_out;
  auto* twin = app.add_subcommand("twin", "run a flow and a tangentially perturbed copy");
  twin->add_option("config", twin_config, "scenario file")->required();
  twin->add_option("--delta", delta, "perturbation size")->required()->check(CLI::NonNegativeNumber);
  twin->add_option("--out", twin_out, "output root (default $WARPFLOW_OUT)");

  std::string report_path;
  std::optional<std::string> compare_path;
  auto* check = app.add_subcommand("check", "re-evaluate the inequality suite on a stored report");
  check->add_option("report", report_path, "report.json")->required();
  check->add_option("--compare", compare_path, "report of the same scenario at h/2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage errors share the config-error exit code
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  if (*run) {
    if (h_text) {
      try {
        h = parse_number(*h_text);
      } catch (const std::exception&) {
        std::cerr << "--h: not a number: " << *h_text << '\n';
        return kConfigError;
      }
    }
    if (jobs <= 1 || configs.size() == 1) {
      int worst = kOk;
      for (const auto& c : configs) worst = std::max(worst, run_one(c, out, h, t_end, std::cout));
      return worst;
    }
    // Scenarios write to disjoint directories; logs are collected per job.
    int worst = kOk;
    for (std::size_t start = 0; start < configs.size(); start += static_cast<std::size_t>(jobs)) {
      std::vector<std::future<std::pair<int, std::string>>> batch;
      for (std::size_t i = start; i < std::min(configs.size(), start + jobs); ++i) {
        batch.push_back(std::async(std::launch::async, [&, i] {
          std::ostringstream log;
          const int code = run_one(configs[i], out, h, t_end, log);
          return std::pair{code, log.str()};
        }));
      }
      for (auto& f : batch) {
        auto [code, text] = f.get();
        std::cout << text;
        worst = std::max(worst, code);
      }
    }
    return worst;
  }

  if (*twin) {
    try {
      ScenarioConfig cfg = load_config(twin_config);
      const TwinReport tw = twin_run(cfg, delta, output_root(twin_out, cfg) / (cfg.name + "_twin"));
      std::cout << cfg.name << ": delta=" << tw.delta << " initial=" << tw.initial_difference
                << " sup=" << tw.sup_difference << " amplification=" << tw.amplification
                << " matched=" << tw.matched_samples << '\n';
      return kOk;
    } catch (const ConfigParseError& e) {
      std::cerr << twin_config << ":" << e.line << ": " << e.what() << '\n';
      return kConfigError;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kSolverError;
    }
  }

  try {
    DiagnosticsReport rep = load_report(report_path);
    const double tension = rep.convergence ? rep.convergence->final_tension : 0.0;
    evaluate_checks(rep, tension);
    std::cout << rep.name << ":\n";
    print_checks(rep, std::cout);
    bool ok = rep.hard_checks_pass();
    if (compare_path) {
      const DiagnosticsReport fine = load_report(*compare_path);
      for (const auto& c : compare_fitted_constants(rep, fine)) {
        std::cout << "  " << (c.pass ? "ok  " : "FAIL") << ' ' << c.name << " ratio " << c.constant << " ("
                  << c.note << ")\n";
        ok = ok && c.pass;
      }
    }
    return ok ? kOk : kCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
}
