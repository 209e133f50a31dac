#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "radwalk/errors.hpp"
#include "radwalk/harness.hpp"

namespace radwalk {

using nlohmann::json;

namespace {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// JSON has no NaN / infinity.
json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << content;
  out.close();
  if (!out) throw IoError(path.string(), "write failed");
}

std::string header_line(const RunRecord& record) {
  std::ostringstream os;
  os << "# config_hash=" << hex64(record.hash) << " timestamp=" << utc_timestamp()
     << " wall_seconds=" << format_double(record.wall_seconds) << "\n";
  return os.str();
}

std::string prefix_of(const RunRecord& record) {
  const auto& o = record.config.output;
  if (!o.prefix.empty()) return o.prefix;
  if (!record.config.name.empty()) return record.config.name;
  return to_string(record.config.experiment);
}

}  // namespace

std::string csv_body(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

json summary_json(const RunRecord& record) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["experiment"] = to_string(record.config.experiment);
  j["name"] = record.config.name;
  j["config_hash"] = hex64(record.hash);
  json cfg = to_json(record.config);
  cfg.erase("output");
  j["config"] = cfg;
  json streams = json::array();
  for (const auto& s : record.streams)
    streams.push_back({{"label", s.label}, {"family", hex64(s.family)}, {"key", hex64(s.key)}, {"streams", s.streams}});
  j["seed_provenance"] = {{"master_seed", record.config.seed},
                          {"derivation", "Philox4x32-10; key from (master_seed, family); counter high word = replicate"},
                          {"families", streams}};
  json checks = json::array();
  for (const auto& c : record.checks) {
    json cj{{"name", c.name}, {"value", finite_or_null(c.value)}, {"comparison", c.comparison}, {"pass", c.pass}};
    if (c.comparison == "in") {
      cj["threshold"] = {c.threshold, c.threshold_hi};
    } else {
      cj["threshold"] = c.threshold;
    }
    checks.push_back(cj);
  }
  j["checks"] = checks;
  j["pass"] = record.passed();
  j["warnings"] = record.warnings;
  j["results"] = record.results;
  json rows = json::object();
  for (const auto& t : record.tables) rows[t.name] = t.rows.size();
  j["row_counts"] = rows;
  return j;
}

std::vector<std::filesystem::path> emit_outputs(const RunRecord& record, const std::filesystem::path& dir,
                                                OutputFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
  const std::string prefix = prefix_of(record);
  std::vector<std::filesystem::path> written;
  if (format != OutputFormat::Json) {
    const std::string header = header_line(record);
    for (const auto& t : record.tables) {
      const auto path = dir / (prefix + "_" + t.name + ".csv");
      write_file(path, header + csv_body(t));
      written.push_back(path);
    }
    if (record.plot && record.config.output.plot) {
      const auto path = dir / (prefix + "_plot.csv");
      write_file(path, header + csv_body(*record.plot));
      written.push_back(path);
    }
  }
  if (format != OutputFormat::Csv) {
    const auto path = dir / (prefix + "_summary.json");
    // Non-finite values inside results are replaced by null on dump.
    write_file(path, summary_json(record).dump(2, ' ', false, json::error_handler_t::replace) + "\n");
    written.push_back(path);
  }
  return written;
}

}  // namespace radwalk
