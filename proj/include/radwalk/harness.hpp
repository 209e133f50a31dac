#pragma once

// Experiment orchestration: JSON configs, deterministic replicate-parallel
// runs, and CSV / JSON outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "radwalk/cone_linalg.hpp"
#include "radwalk/orbit_sampler.hpp"
#include "radwalk/radial_laws.hpp"

namespace radwalk {

inline constexpr int kSchemaVersion = 1;

enum class Experiment { WalkGroup, WalkBessel, Convolve, Kappa, CltCheck, BerryEsseenScan, Axioms, MomentIdentity };

std::string to_string(Experiment e);
/// Accepts the kebab-case names ("walk-group", ...); throws ConfigError.
Experiment parse_experiment(const std::string& text);
const std::vector<std::string>& experiment_names();

/// Matrix entries as nested rows; im is empty over the reals.
struct MatrixSpec {
  std::vector<std::vector<double>> re;
  std::vector<std::vector<double>> im;
  bool operator==(const MatrixSpec&) const = default;
};

struct LawSpec {
  /// point_mass | mixture | two_point | log_normal | uniform | wishart_root
  std::string type = "point_mass";
  std::vector<MatrixSpec> atoms;
  std::vector<double> weights;
  bool atoms_squared = false;  ///< atoms are given as s^2 rather than s
  double a = 0.0, b = 0.0, p_a = 0.5;
  double log_mean = 0.0, log_sd = 1.0;
  double lo = 0.0, hi = 1.0;
  double scale = 1.0;
  int dof = 1;
  bool operator==(const LawSpec&) const = default;
};

RadialLaw build_law(const LawSpec& spec, int q, Field field);

struct ConvolveCase {
  int q = 1;
  Field field = Field::Real;
  double mu = 1.0;
  bool operator==(const ConvolveCase&) const = default;
};

struct Thresholds {
  double se_multiple = 4.0;
  double ks_max = 0.02;
  double ks_p_min = 1e-3;
  double mardia_level = 1e-3;
  double support_slack = 1e-8;
  double contraction_ks_max = 0.006;
  double slope_max = -0.35;
  double ratio_lo = 1.0;
  double ratio_hi = 4.0;
  double weak_law_eps = 0.1;
  double weak_law_max_fraction = 0.01;
  bool operator==(const Thresholds&) const = default;
};

enum class OutputFormat { Csv, Json, Both };
std::string to_string(OutputFormat f);
OutputFormat parse_output_format(const std::string& text);

struct OutputSpec {
  std::string dir = "out";
  std::string prefix;  ///< defaults to the config name, then the experiment name
  OutputFormat format = OutputFormat::Both;
  bool plot = true;
  bool operator==(const OutputSpec&) const = default;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  Experiment experiment = Experiment::WalkGroup;
  std::string name;
  int q = 1;
  Field field = Field::Real;
  LawSpec law;
  std::vector<int> p_grid;
  std::vector<double> mu_grid;
  int n_steps = 1;
  std::vector<int> checkpoints;
  std::uint64_t replicates = 1;
  std::uint64_t seed = 0;
  WalkMethod method = WalkMethod::Auto;
  bool per_replicate = false;

  // clt-check
  std::string statistic = "CLT2";  ///< CLT1..CLT4 or weak-law
  std::string engine = "group";    ///< group | bessel
  // walk-bessel
  bool compare_group = false;
  // moment-identity: (n, p)
  std::vector<std::pair<int, int>> pairs;
  // convolve
  std::vector<ConvolveCase> cases;
  // axioms: character | root_lipschitz_gap | mu_degeneration
  std::vector<std::string> axioms;
  double r1 = 1.0, r2 = 2.0, s = 0.7;
  double cap = 0.0;  ///< clipped quadratic cap; 0 places the kink at the mean

  Thresholds thresholds;
  OutputSpec output;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates; errors are ConfigError with the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& cfg);
/// Throws ConfigError for inconsistent settings.
void validate(const ExperimentConfig& cfg);

/// FNV-1a 64 of the canonical config without the output section.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hex64(std::uint64_t x);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string comparison;  ///< "<=", ">=", "in"
  double threshold_hi = 0.0;  ///< upper end for "in"
  bool pass = false;
};

struct StreamProvenance {
  std::string label;
  std::uint64_t family = 0;
  std::uint64_t key = 0;
  std::uint64_t streams = 0;  ///< stream i serves replicate i
};

struct RunRecord {
  ExperimentConfig config;
  std::uint64_t hash = 0;
  std::vector<Table> tables;
  std::optional<Table> plot;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  std::vector<StreamProvenance> streams;
  nlohmann::json results = nlohmann::json::object();
  double wall_seconds = 0.0;

  bool passed() const;
};

struct RunOptions {
  int workers = 1;
};

RunRecord run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

/// Deterministic summary (no timing, no worker count).
nlohmann::json summary_json(const RunRecord& record);

/// Writes <prefix>_<table>.csv, <prefix>_summary.json and <prefix>_plot.csv
/// into dir; returns the paths written. Throws IoError.
std::vector<std::filesystem::path> emit_outputs(const RunRecord& record, const std::filesystem::path& dir,
                                                OutputFormat format);

/// CSV body (header row plus data) without the leading comment line.
std::string csv_body(const Table& table);

}  // namespace radwalk
