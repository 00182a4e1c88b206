#pragma once

// Long-format result rows and their CSV / JSON emission.
//
// CSV columns: experiment,cell,seed,epoch,metric,value
//   epoch is empty for end-of-run metrics; value uses %.17g ("inf", "nan" as is).
// Rows are sorted by (cell, seed, epoch with empty first, metric).
// The JSON summary aggregates end-of-run metrics per (cell, metric) over seeds:
// n, min, mean, max and sample standard deviation (n-1 denominator).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sgdlab {

struct ResultRow {
  std::string cell;
  std::uint64_t seed = 0;
  std::optional<int> epoch;
  std::string metric;
  double value = 0.0;
  bool operator==(const ResultRow&) const = default;
};

struct Aggregate {
  std::string cell;
  std::string metric;
  std::size_t n = 0;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
  double stddev = 0.0;  // sample std; 0 when n == 1
};

struct ResultsTable {
  std::string experiment;
  std::vector<ResultRow> rows;

  void add(std::string cell, std::uint64_t seed, std::string metric, double value);
  void add_epoch(std::string cell, std::uint64_t seed, int epoch, std::string metric, double value);
  void append(const ResultsTable& other);
  void sort();

  // End-of-run value, if recorded.
  std::optional<double> value(const std::string& cell, std::uint64_t seed,
                              const std::string& metric) const;
  // End-of-run values of one metric in a cell, ordered by seed.
  std::vector<double> values(const std::string& cell, const std::string& metric) const;
  // Distinct cells in first-appearance order.
  std::vector<std::string> cells() const;
  std::vector<Aggregate> aggregates() const;
};

std::string format_value(double v);
std::string to_csv(const ResultsTable& table);
std::string summary_json(const ResultsTable& table);

struct EmittedFiles {
  std::filesystem::path csv;
  std::filesystem::path json;
};

// Writes <dir>/<experiment>.csv and <dir>/<experiment>_summary.json.
EmittedFiles emit_results(const ResultsTable& table, const std::filesystem::path& dir);

}  // namespace sgdlab
