#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "radwalk/errors.hpp"
#include "radwalk/harness.hpp"

using namespace radwalk;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigRoot = RADWALK_SOURCE_DIR "/configs";

ExperimentConfig small(const std::string& text) { return parse_config(json::parse(text)); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string without_first_line(const std::string& s) { return s.substr(s.find('\n') + 1); }

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("radwalk_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string config_error_field(const std::string& text) {
  try {
    small(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("shipped configs parse and round-trip") {
  int count = 0;
  for (const auto& sub : {"acceptance", "examples"}) {
    for (const auto& entry : fs::directory_iterator(kConfigRoot / sub)) {
      if (entry.path().extension() != ".json") continue;
      INFO(entry.path().string());
      const ExperimentConfig cfg = load_config(entry.path());
      CHECK_NOTHROW(validate(cfg));
      const ExperimentConfig again = parse_config(to_json(cfg));
      CHECK(again == cfg);
      CHECK(to_json(again) == to_json(cfg));
      CHECK(config_hash(again) == config_hash(cfg));
      ++count;
    }
  }
  CHECK(count >= 15);
}

TEST_CASE("config errors name the field") {
  CHECK(config_error_field(R"({"experiment": "walk-group", "p": 3, "bogus": 1})") == "bogus");
  CHECK(config_error_field(R"({"experiment": "walk-sideways", "p": 3})") == "experiment");
  CHECK(config_error_field(R"({"experiment": "walk-group", "p": 3, "replicates": 0})") == "replicates");
  CHECK(config_error_field(R"({"experiment": "walk-group"})") == "p");
  CHECK(config_error_field(R"({"experiment": "walk-group", "p": 3, "law": {"type": "two_point", "p_a": 1.5}})")
            .starts_with("law"));
  CHECK(config_error_field(R"({"experiment": "walk-group", "p": 3, "field": "quaternion"})") == "field");
  CHECK(config_error_field(R"({"experiment": "walk-bessel", "q": 1, "mu": [0.2]})").starts_with("mu"));
  CHECK(config_error_field(R"({"schema_version": 99, "experiment": "walk-group", "p": 3})") == "schema_version");
  CHECK_THROWS_AS(load_config("/nonexistent/radwalk.json"), Error);
}

TEST_CASE("config hash ignores the output section") {
  ExperimentConfig a = small(R"({"experiment": "walk-group", "p": [3, 5], "seed": 4})");
  ExperimentConfig b = a;
  b.output.dir = "elsewhere";
  b.output.format = OutputFormat::Csv;
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 5;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("walk-group with delta_0 gives zero rows") {
  const ExperimentConfig cfg = small(R"({
    "experiment": "walk-group", "q": 2, "p": [2, 5],
    "law": {"type": "point_mass", "atom": 0},
    "n_steps": 6, "checkpoints": [1, 3, 6], "replicates": 50, "per_replicate": true, "seed": 1})");
  const RunRecord rec = run_experiment(cfg, {2});
  bool saw_traj = false;
  for (const auto& t : rec.tables) {
    if (t.name == "summary") {
      CHECK(t.rows.size() == 6);
      for (const auto& row : t.rows) {
        CHECK(row[2] == 0.0);
        CHECK(row[4] == 0.0);
      }
    }
    if (t.name == "trajectories") {
      saw_traj = true;
      CHECK(t.rows.size() == 2 * 50 * 3);
      for (const auto& row : t.rows)
        for (std::size_t c = 3; c < row.size(); ++c) CHECK(row[c] == 0.0);
    }
  }
  CHECK(saw_traj);
  CHECK(rec.passed());
}

TEST_CASE("runs are deterministic across reruns and worker counts") {
  const char* configs[] = {
      R"({"experiment": "walk-bessel", "q": 2, "mu": [5, 40], "n_steps": 4,
          "law": {"type": "mixture", "atoms": [[[1, 0], [0, 0.5]], 2], "weights": [0.5, 0.5]},
          "replicates": 700, "seed": 3})",
      R"({"experiment": "clt-check", "statistic": "CLT2", "law": {"type": "two_point", "a": 1, "b": 2},
          "p": 1000, "n_steps": 10, "replicates": 500, "seed": 9})",
      R"({"experiment": "convolve", "cases": [{"q": 2, "field": "complex", "mu": 6}], "replicates": 600, "seed": 2})"};
  for (const char* text : configs) {
    const ExperimentConfig cfg = small(text);
    const RunRecord one = run_experiment(cfg, {1});
    const json ref = summary_json(one);
    for (int workers : {1, 4, 16}) {
      const RunRecord rec = run_experiment(cfg, {workers});
      CHECK(summary_json(rec) == ref);
      REQUIRE(rec.tables.size() == one.tables.size());
      for (std::size_t t = 0; t < rec.tables.size(); ++t) CHECK(csv_body(rec.tables[t]) == csv_body(one.tables[t]));
    }
  }
}

TEST_CASE("emitted files match byte for byte after the header line") {
  const ExperimentConfig cfg = small(R"({"experiment": "berry-esseen-scan", "name": "scan",
      "law": {"type": "two_point", "a": 1, "b": 2}, "p": 3, "n_steps": 8, "checkpoints": [1, 2, 4, 8],
      "replicates": 2000, "seed": 5})");
  const fs::path a = scratch_dir("emit_a"), b = scratch_dir("emit_b");
  const auto fa = emit_outputs(run_experiment(cfg, {1}), a, OutputFormat::Both);
  const auto fb = emit_outputs(run_experiment(cfg, {16}), b, OutputFormat::Both);
  REQUIRE(fa.size() == 3);
  REQUIRE(fb.size() == fa.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    CHECK(fa[i].filename() == fb[i].filename());
    const std::string sa = slurp(fa[i]), sb = slurp(fb[i]);
    if (fa[i].extension() == ".csv") {
      CHECK(sa.starts_with("# config_hash="));
      CHECK(without_first_line(sa) == without_first_line(sb));
    } else {
      CHECK(sa == sb);
    }
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("berry-esseen plot data and slope field") {
  const ExperimentConfig cfg = small(R"({"experiment": "berry-esseen-scan", "name": "scan",
      "law": {"type": "two_point", "a": 1, "b": 2}, "p": 3, "n_steps": 16, "checkpoints": [2, 4, 8, 16],
      "replicates": 200000, "method": "reduced", "seed": 6})");
  const RunRecord rec = run_experiment(cfg, {2});
  REQUIRE(rec.plot.has_value());
  CHECK(rec.plot->columns == std::vector<std::string>{"x", "y", "y_err"});
  REQUIRE(rec.plot->rows.size() == 4);
  CHECK(rec.plot->rows[0][0] == doctest::Approx(std::log(2.0)));
  const json s = summary_json(rec);
  CHECK(s["results"]["slope"].is_number());
  CHECK(s["results"]["points"].size() == 4);
}

TEST_CASE("kappa at mu = 3/2 is 2") {
  const ExperimentConfig cfg = small(R"({"experiment": "kappa", "q": 1, "mu": 1.5, "replicates": 20000, "seed": 7})");
  const json s = summary_json(run_experiment(cfg, {1}));
  const json& e = s["results"]["grid"][0];
  CHECK(std::abs(e["estimate"].get<double>() - 2.0) <= 4.0 * e["std_error"].get<double>() + 1e-12);
  CHECK(s["pass"].get<bool>());
  CHECK(s["schema_version"] == kSchemaVersion);
  CHECK_FALSE(s.contains("wall_seconds"));
}

TEST_CASE("CLT2 at desk scale") {
  const ExperimentConfig cfg = small(R"({"experiment": "clt-check", "statistic": "CLT2",
      "law": {"type": "two_point", "a": 1, "b": 2, "p_a": 0.5}, "p": 100000, "n_steps": 100,
      "replicates": 20000, "seed": 8})");
  const RunRecord rec = run_experiment(cfg, {2});
  CHECK(rec.results["limit_variance"].get<double>() == doctest::Approx(2.25));
  CHECK(rec.results["ks_distance"].get<double>() <= 0.02);
  CHECK(rec.warnings.empty());
  CHECK(rec.passed());
}

TEST_CASE("regime warnings") {
  const ExperimentConfig cfg = small(R"({"experiment": "clt-check", "statistic": "CLT2",
      "law": {"type": "two_point", "a": 1, "b": 2}, "p": 50, "n_steps": 10, "replicates": 100, "seed": 1})");
  const RunRecord rec = run_experiment(cfg, {1});
  REQUIRE_FALSE(rec.warnings.empty());
  CHECK(rec.warnings[0].find("n^2/p") != std::string::npos);
}

TEST_CASE("empty record") {
  RunRecord rec;
  rec.config = small(R"({"experiment": "walk-group", "name": "empty", "p": 1})");
  rec.hash = config_hash(rec.config);
  rec.tables.push_back(Table{"summary", {"p", "step", "mean_trace"}, {}});
  const fs::path dir = scratch_dir("empty");
  const auto files = emit_outputs(rec, dir, OutputFormat::Both);
  REQUIRE(files.size() == 2);
  CHECK(without_first_line(slurp(files[0])) == "p,step,mean_trace\n");
  const json s = json::parse(slurp(files[1]));
  CHECK(s["row_counts"]["summary"] == 0);
  CHECK(s["checks"].empty());
  CHECK(s["pass"].get<bool>());
  fs::remove_all(dir);
}

TEST_CASE("non-finite values become null in JSON") {
  RunRecord rec;
  rec.config = small(R"({"experiment": "walk-group", "p": 1})");
  rec.checks.push_back(Check{"x", std::nan(""), 1.0, "<=", 0.0, false});
  rec.results["y"] = std::numeric_limits<double>::infinity();
  const fs::path dir = scratch_dir("nan");
  const auto files = emit_outputs(rec, dir, OutputFormat::Json);
  const json s = json::parse(slurp(files[0]));
  CHECK(s["checks"][0]["value"].is_null());
  CHECK(s["results"]["y"].is_null());
  CHECK_FALSE(s["pass"].get<bool>());
  fs::remove_all(dir);
}

TEST_CASE("unwritable output directory is an I/O error") {
  const fs::path dir = scratch_dir("blocked");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  RunRecord rec;
  rec.config = small(R"({"experiment": "walk-group", "p": 1})");
  CHECK_THROWS_AS(emit_outputs(rec, dir / "file" / "sub", OutputFormat::Both), IoError);
  fs::remove_all(dir);
}
