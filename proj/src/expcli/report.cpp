#include "mgno/expcli/report.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "mgno/expcli/csv.hpp"

namespace mgno::cli {

namespace {

std::string flag(const train::MetricsRow& r, bool on) {
  if (r.kind != ops::ModelKind::mgno) return "-";
  return on ? "yes" : "no";
}

std::string seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

}  // namespace

TableFormat parse_table_format(const std::string& s) {
  if (s == "md") return TableFormat::md;
  if (s == "csv") return TableFormat::csv;
  throw std::invalid_argument("unknown table format '" + s + "' (md or csv)");
}

std::string format_e2(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", x * 100.0);
  return buf;
}

std::string render_table(const std::vector<train::MetricsRow>& rows, TableFormat format) {
  std::string s;
  if (format == TableFormat::md) {
    s += "| Method | Scales | Intra-cycle sharing | Iteration sharing | Skip | Train Error (x1e-2) "
         "| Test Error (x1e-2) | Time/epoch (s) | N. params | Seeds | Notes |\n";
    s += "|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
      auto pm = [](double m, const std::optional<double>& sd) {
        return format_e2(m) + (sd ? " ± " + format_e2(*sd) : "");
      };
      const bool has = r.n_seeds > 0;
      s += "| " + r.method + " | " + std::to_string(r.scales) + " | " +
           flag(r, r.intra_cycle_sharing) + " | " + flag(r, r.iteration_sharing) + " | " +
           flag(r, r.skip_connections) + " | " + (has ? pm(r.train_error, r.train_std) : "-") +
           " | " + (has ? pm(r.test_error, r.test_std) : "-") + " | " +
           (has ? seconds(r.seconds_per_epoch) : "-") + " | " + std::to_string(r.n_params) +
           " | " + std::to_string(r.n_seeds) + " | " + (r.ok() ? "" : "failed: " + r.failure) +
           " |\n";
    }
    return s;
  }
  s += "method,scales,intra_share,iter_share,skip,train_error_e2,train_std_e2,test_error_e2,"
       "test_std_e2,sec_per_epoch,n_params,n_seeds,status\n";
  for (const auto& r : rows) {
    const bool has = r.n_seeds > 0;
    const std::vector<std::string> f = {
        r.method,
        std::to_string(r.scales),
        flag(r, r.intra_cycle_sharing),
        flag(r, r.iteration_sharing),
        flag(r, r.skip_connections),
        has ? format_e2(r.train_error) : "",
        r.train_std ? format_e2(*r.train_std) : "",
        has ? format_e2(r.test_error) : "",
        r.test_std ? format_e2(*r.test_std) : "",
        has ? seconds(r.seconds_per_epoch) : "",
        std::to_string(r.n_params),
        std::to_string(r.n_seeds),
        r.ok() ? "ok" : "failed: " + r.failure};
    for (std::size_t i = 0; i < f.size(); ++i) s += (i ? "," : "") + quote_csv(f[i]);
    s += "\n";
  }
  return s;
}

}  // namespace mgno::cli
