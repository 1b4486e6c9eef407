#include "olab/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace olab {

const char* const kMetricsHeader =
    "run_id,algorithm,seed,k,wall_time_s,objective,grad_norm_sq,consensus_dist,comm_bytes,idle_s";

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  return out;
}

void close_checked(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

double parse_real(const std::string& s) {
  // strtod rather than stod: subnormal values are valid output and must parse back.
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::runtime_error("metrics csv: bad number '" + s + "'");
  return v;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    const MetricsRecord& m = r.record;
    out << r.run_id << ',' << r.algorithm << ',' << r.seed << ',' << m.k << ',' << format_real(m.wall_time_s) << ','
        << format_real(m.objective) << ',' << format_real(m.grad_norm_sq) << ',' << format_real(m.consensus_dist)
        << ',' << format_real(m.comm_bytes) << ',' << format_real(m.idle_s) << '\n';
  }
}

void emit_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows) {
  std::ofstream out = open_for_write(path);
  write_metrics_csv(out, rows);
  close_checked(out, path);
}

std::vector<CsvRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw std::runtime_error("metrics csv: missing header");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw std::runtime_error("metrics csv: expected 10 columns, got " + std::to_string(cells.size()));
    CsvRow r;
    r.run_id = cells[0];
    r.algorithm = cells[1];
    r.seed = std::stoull(cells[2]);
    r.record.k = std::stoull(cells[3]);
    r.record.wall_time_s = parse_real(cells[4]);
    r.record.objective = parse_real(cells[5]);
    r.record.grad_norm_sq = parse_real(cells[6]);
    r.record.consensus_dist = parse_real(cells[7]);
    r.record.comm_bytes = parse_real(cells[8]);
    r.record.idle_s = parse_real(cells[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out = open_for_write(path);
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  close_checked(out, path);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out = open_for_write(path);
  out << doc.dump(2) << '\n';
  close_checked(out, path);
}

}  // namespace olab
