#pragma once

// CSV and JSON emission. Reals are written with 17 significant digits so a
// parse of the output reproduces every value exactly; lines end in LF.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "olab/algorithms.hpp"

namespace olab {

struct CsvRow {
  std::string run_id;
  std::string algorithm;
  std::uint64_t seed = 0;
  MetricsRecord record;
};

/// "run_id,algorithm,seed,k,wall_time_s,objective,grad_norm_sq,consensus_dist,comm_bytes,idle_s"
extern const char* const kMetricsHeader;

std::string format_real(double v);

void write_metrics_csv(std::ostream& out, const std::vector<CsvRow>& rows);
void emit_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows);
/// Inverse of write_metrics_csv. Throws std::runtime_error on a malformed file.
std::vector<CsvRow> read_metrics_csv(std::istream& in);

/// Generic table writer for sweep rows and plot triples.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace olab
