//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Command-line driver. Every subcommand returns 0 on success, 1 on an input
// or configuration problem and 2 when the numerics did not converge.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cslme/cli.hpp"

namespace {

struct SchemaFlags {
  std::string group = "group";
  std::string response = "y";
  std::vector<std::string> features;
  std::vector<std::string> random_effects;
  bool intercept = true;

  void attach(CLI::App* app) {
    app->add_option("--group-col", group, "Grouping column")->capture_default_str();
    app->add_option("--response-col", response, "Response column")->capture_default_str();
    app->add_option("--features", features, "Feature columns (comma separated)")
        ->delimiter(',');
    app->add_option("--random-effects", random_effects,
                    "Random-effect columns; '(Intercept)' names the intercept")
        ->delimiter(',');
    app->add_flag("--intercept,!--no-intercept", intercept,
                  "Prepend an all-ones intercept column (default on)");
  }

  cslme::InputSchema schema() const {
    return {group, response, features, random_effects, intercept};
  }
};

// Writes to --out when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sign-constrained linear mixed-effects models with SDTN random effects"};
  app.set_version_flag("--version", std::string(cslme::kVersion));
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model to a long-format CSV file");
  SchemaFlags fit_schema;
  fit_schema.attach(fit);
  std::string fit_data;
  std::string fit_method = "PLS";
  std::string fit_out;
  std::string fit_format = "json";
  std::uint64_t fit_seed = 0;
  int fit_starts = 5;
  int fit_pit_q = 2;
  int fit_max_iter = 500;
  bool fit_unconstrained = false;
  std::string fit_r2 = "raw";
  fit->add_option("data", fit_data, "Input CSV")->required();
  fit->add_option("--method", fit_method, "PLS | PRLS | ML | REML | PIT")->capture_default_str();
  fit->add_option("--seed", fit_seed, "Seed for multi-start jitter")->capture_default_str();
  fit->add_option("--starts", fit_starts, "Number of starts")->capture_default_str();
  fit->add_option("--max-iter", fit_max_iter, "Iteration cap per start")->capture_default_str();
  fit->add_option("--pit-q", fit_pit_q, "Gauss-Hermite order for PIT (2 or 4)")
      ->capture_default_str();
  fit->add_option("--out", fit_out, "Output file (default stdout)");
  fit->add_option("--format", fit_format, "json | csv")->capture_default_str();
  fit->add_option("--r2-mode", fit_r2, "raw | effective")->capture_default_str();
  fit->add_flag("--unconstrained", fit_unconstrained, "Drop the beta >= 0 constraint");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a Monte-Carlo scenario");
  std::string sim_config;
  std::string sim_out;
  std::string sim_format;
  int sim_threads = 0;
  sim->add_option("config", sim_config, "Scenario config (key = value)")->required();
  sim->add_option("--out", sim_out, "Output file (default stdout)");
  sim->add_option("--format", sim_format, "csv | json");
  sim->add_option("--threads", sim_threads, "Worker threads (capped by CSLME_THREADS)");

  // contour
  auto* contour = app.add_subcommand("contour", "Evaluate an objective on a 2-D grid");
  SchemaFlags contour_schema;
  contour_schema.attach(contour);
  std::string contour_request;
  std::string contour_data;
  std::string contour_out;
  std::string contour_sidecar;
  contour->add_option("request", contour_request, "Grid request (key = value)")->required();
  contour->add_option("--data", contour_data, "Input CSV (otherwise the request's scenario)");
  contour->add_option("--out", contour_out, "Grid CSV (default stdout)");
  contour->add_option("--levels-out", contour_sidecar,
                      "Sidecar CSV of cells near the requested levels "
                      "(default <out>.levels.csv when --out is set)");

  // ranef
  auto* ranef = app.add_subcommand("ranef", "Per-group random effects from a fit document");
  SchemaFlags ranef_schema;
  ranef_schema.attach(ranef);
  std::string ranef_data;
  std::string ranef_params;
  std::string ranef_out;
  std::string ranef_format = "csv";
  ranef->add_option("data", ranef_data, "Input CSV")->required();
  ranef->add_option("--params", ranef_params, "JSON document written by 'fit'")->required();
  ranef->add_option("--out", ranef_out, "Output file (default stdout)");
  ranef->add_option("--format", ranef_format, "json | csv")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cslme::kExitInput;
  }

  try {
    if (*fit) {
      cslme::RunConfig cfg;
      try {
        cfg.method = cslme::parse_method(fit_method);
      } catch (const cslme::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cslme::kExitInput;
      }
      cfg.fit.n_starts = fit_starts;
      cfg.fit.seed = fit_seed;
      cfg.fit.max_iter = fit_max_iter;
      cfg.pit_q = fit_pit_q;
      cfg.format = fit_format;
      cfg.constrained = !fit_unconstrained;
      if (fit_r2 == "effective") cfg.fit.r2_mode = cslme::R2Mode::kEffective;
      else if (fit_r2 != "raw") {
        std::cerr << "error: --r2-mode must be raw or effective\n";
        return cslme::kExitInput;
      }
      if (fit_starts < 1 || fit_max_iter < 1) {
        std::cerr << "error: --starts and --max-iter must be >= 1\n";
        return cslme::kExitInput;
      }
      Sink sink(fit_out);
      return cslme::cmd_fit(fit_data, fit_schema.schema(), cfg, sink.stream(), std::cerr);
    }
    if (*sim) {
      Sink sink(sim_out);
      std::optional<std::string> fmt;
      if (!sim_format.empty()) fmt = sim_format;
      return cslme::cmd_simulate(sim_config, fmt, sim_threads, sink.stream(), std::cerr);
    }
    if (*contour) {
      Sink sink(contour_out);
      std::string side = contour_sidecar;
      if (side.empty() && !contour_out.empty()) side = contour_out + ".levels.csv";
      std::ofstream side_file;
      if (!side.empty()) side_file.open(side, std::ios::binary);
      std::optional<std::string> data;
      if (!contour_data.empty()) data = contour_data;
      return cslme::cmd_contour(contour_request, data, contour_schema.schema(), sink.stream(),
                                side_file.is_open() ? &side_file : nullptr, std::cerr);
    }
    if (*ranef) {
      Sink sink(ranef_out);
      return cslme::cmd_ranef(ranef_data, ranef_schema.schema(), ranef_params, ranef_format,
                              sink.stream(), std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cslme::kExitInput;
  }
  return cslme::kExitOk;
}
