// radwalk: run one experiment from a JSON config.
//
//   radwalk <experiment> --config PATH [--seed U64] [--workers N] [--out DIR] [--format csv|json|both]
//   radwalk run --config PATH ...        (experiment taken from the config)
//   radwalk validate --config PATH       (prints the canonical config)
//
// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 a check
// failed its threshold, 1 I/O or anything else.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "radwalk/errors.hpp"
#include "radwalk/harness.hpp"
#include "radwalk/replicate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitThreshold = 4;

int exit_code(radwalk::ErrorKind kind) {
  switch (kind) {
    case radwalk::ErrorKind::Config:
    case radwalk::ErrorKind::Domain:
      return kExitConfig;
    case radwalk::ErrorKind::Numerical:
      return kExitNumerical;
    case radwalk::ErrorKind::Io:
      return kExitOther;
  }
  return kExitOther;
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  int workers = radwalk::default_workers();
  std::optional<std::string> out;
  std::optional<std::string> format;
  bool quiet = false;
};

void add_run_options(CLI::App* sub, Options& opts) {
  sub->add_option("--config", opts.config, "experiment config (JSON)")->required();
  sub->add_option("--seed", opts.seed, "override the master seed");
  sub->add_option("--workers", opts.workers, "worker threads (default: RADWALK_WORKERS or hardware)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", opts.out, "output directory (overrides output.dir)");
  sub->add_option("--format", opts.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
  sub->add_flag("--quiet", opts.quiet, "only print failures");
}

int run(const Options& opts, std::optional<radwalk::Experiment> expected) {
  radwalk::ExperimentConfig cfg = radwalk::load_config(opts.config);
  if (expected && *expected != cfg.experiment)
    throw radwalk::ConfigError("experiment", "config describes '" + radwalk::to_string(cfg.experiment) +
                                                 "', not '" + radwalk::to_string(*expected) + "'");
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.out) cfg.output.dir = *opts.out;
  if (opts.format) cfg.output.format = radwalk::parse_output_format(*opts.format);

  const radwalk::RunRecord rec = radwalk::run_experiment(cfg, {opts.workers});
  const auto written = radwalk::emit_outputs(rec, cfg.output.dir, cfg.output.format);

  for (const auto& w : rec.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& c : rec.checks) {
    if (opts.quiet && c.pass) continue;
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value << " " << c.comparison << " ";
    if (c.comparison == "in") std::cout << "[" << c.threshold << ", " << c.threshold_hi << "]";
    else std::cout << c.threshold;
    std::cout << "\n";
  }
  if (!opts.quiet) {
    for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
    std::cout << "config_hash " << radwalk::hex64(rec.hash) << ", " << rec.wall_seconds << " s\n";
  }
  return rec.passed() ? kExitOk : kExitThreshold;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial random walks on matrix cones: Monte Carlo experiments"};
  app.require_subcommand(1);

  Options opts;
  std::optional<radwalk::Experiment> expected;
  for (const auto& name : radwalk::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "run a " + name + " experiment");
    add_run_options(sub, opts);
    sub->callback([&expected, name] { expected = radwalk::parse_experiment(name); });
  }
  CLI::App* generic = app.add_subcommand("run", "run the experiment named in the config");
  add_run_options(generic, opts);

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "parse a config and print its canonical form");
  validate->add_option("--config", validate_path, "experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (validate->parsed()) {
      const radwalk::ExperimentConfig cfg = radwalk::load_config(validate_path);
      std::cout << radwalk::to_json(cfg).dump(2) << "\n";
      return kExitOk;
    }
    return run(opts, expected);
  } catch (const radwalk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
}
