#include "mgno/expcli/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mgno/expcli/run_config.hpp"

namespace mgno::cli {

namespace fs = std::filesystem;

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string opt(const std::optional<double>& x) { return x ? g17(*x) : ""; }

double to_double(const std::string& s) { return s.empty() ? 0.0 : std::stod(s); }

std::size_t to_count(const std::string& s) { return s.empty() ? 0 : std::stoull(s); }

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "method", "scales",   "intra_share", "iter_share", "train_error", "test_error",
      "sec_per_epoch", "n_params", "model", "cycle", "depth", "skip", "train_std",
      "test_std", "n_seeds", "status", "key"};
  return cols;
}

std::string csv_header() {
  std::string s;
  for (const auto& c : csv_columns()) s += (s.empty() ? "" : ",") + c;
  return s;
}

std::string quote_csv(const std::string& f) {
  if (f.find_first_of(",\"\n\r") == std::string::npos) return f;
  std::string q = "\"";
  for (char c : f) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw std::invalid_argument("csv: unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

std::string csv_line(const train::MetricsRow& r, const std::string& key) {
  char sec[40];
  std::snprintf(sec, sizeof sec, "%.6f", r.seconds_per_epoch);
  const std::vector<std::string> fields = {
      r.method,
      std::to_string(r.scales),
      r.intra_cycle_sharing ? "1" : "0",
      r.iteration_sharing ? "1" : "0",
      g17(r.train_error),
      g17(r.test_error),
      sec,
      std::to_string(r.n_params),
      std::string(ops::to_string(r.kind)),
      std::string(ops::to_string(r.cycle)),
      std::to_string(r.depth),
      r.skip_connections ? "1" : "0",
      opt(r.train_std),
      opt(r.test_std),
      std::to_string(r.n_seeds),
      r.ok() ? "ok" : "failed: " + r.failure,
      key};
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) s += (i ? "," : "") + quote_csv(fields[i]);
  return s;
}

CsvRecord parse_csv_line(const std::string& line) {
  const auto f = split_csv(line);
  if (f.size() != csv_columns().size()) {
    throw std::invalid_argument("csv: expected " + std::to_string(csv_columns().size()) +
                                " fields, got " + std::to_string(f.size()));
  }
  CsvRecord rec;
  auto& r = rec.row;
  r.method = f[0];
  r.scales = to_count(f[1]);
  r.intra_cycle_sharing = parse_bool(f[2]);
  r.iteration_sharing = parse_bool(f[3]);
  r.train_error = to_double(f[4]);
  r.test_error = to_double(f[5]);
  r.seconds_per_epoch = to_double(f[6]);
  r.n_params = to_count(f[7]);
  r.kind = ops::parse_model_kind(f[8]);
  r.cycle = ops::parse_cycle_kind(f[9]);
  r.depth = to_count(f[10]);
  r.skip_connections = parse_bool(f[11]);
  if (!f[12].empty()) r.train_std = to_double(f[12]);
  if (!f[13].empty()) r.test_std = to_double(f[13]);
  r.n_seeds = to_count(f[14]);
  if (f[15] != "ok") r.failure = f[15].rfind("failed: ", 0) == 0 ? f[15].substr(8) : f[15];
  rec.key = f[16];
  return rec;
}

std::vector<CsvRecord> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) {
    throw std::invalid_argument("csv: " + path.string() + " does not have the metrics header");
  }
  std::vector<CsvRecord> out;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_csv_line(line));
  }
  return out;
}

void write_csv(const fs::path& path, const std::vector<CsvRecord>& records) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << csv_header() << "\n";
    for (const auto& r : records) out << csv_line(r.row, r.key) << "\n";
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

void upsert_csv(const fs::path& path, const train::MetricsRow& row, const std::string& key) {
  std::vector<CsvRecord> records;
  if (fs::exists(path)) records = read_csv(path);
  bool replaced = false;
  for (auto& r : records) {
    if (r.key == key) {
      r.row = row;
      replaced = true;
    }
  }
  if (!replaced) records.push_back({row, key});
  write_csv(path, records);
}

}  // namespace mgno::cli
