#include "sgdlab/results.hpp"

#include "sgdlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <tuple>

namespace sgdlab {

using nlohmann::ordered_json;

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// JSON has no inf/nan, those go out as strings.
ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_value(v);
}

void write_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", file.string()));
  out << text;
  if (!out) throw IoError(fmt::format("short write to '{}'", file.string()));
}

}  // namespace

void ResultsTable::add(std::string cell, std::uint64_t seed, std::string metric, double value) {
  rows.push_back({std::move(cell), seed, std::nullopt, std::move(metric), value});
}

void ResultsTable::add_epoch(std::string cell, std::uint64_t seed, int epoch, std::string metric,
                             double value) {
  rows.push_back({std::move(cell), seed, epoch, std::move(metric), value});
}

void ResultsTable::append(const ResultsTable& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

void ResultsTable::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    const int ea = a.epoch.value_or(-1);
    const int eb = b.epoch.value_or(-1);
    return std::tie(a.cell, a.seed, ea, a.metric) < std::tie(b.cell, b.seed, eb, b.metric);
  });
}

std::optional<double> ResultsTable::value(const std::string& cell, std::uint64_t seed,
                                          const std::string& metric) const {
  for (const auto& r : rows) {
    if (!r.epoch && r.seed == seed && r.cell == cell && r.metric == metric) return r.value;
  }
  return std::nullopt;
}

std::vector<double> ResultsTable::values(const std::string& cell, const std::string& metric) const {
  std::vector<std::pair<std::uint64_t, double>> found;
  for (const auto& r : rows) {
    if (!r.epoch && r.cell == cell && r.metric == metric) found.emplace_back(r.seed, r.value);
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> out;
  for (const auto& f : found) out.push_back(f.second);
  return out;
}

std::vector<std::string> ResultsTable::cells() const {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.cell) == out.end()) out.push_back(r.cell);
  }
  return out;
}

std::vector<Aggregate> ResultsTable::aggregates() const {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : rows) {
    if (!r.epoch) groups[{r.cell, r.metric}].push_back(r.value);
  }
  std::vector<Aggregate> out;
  for (const auto& [key, xs] : groups) {
    Aggregate a;
    a.cell = key.first;
    a.metric = key.second;
    a.n = xs.size();
    a.min = *std::min_element(xs.begin(), xs.end());
    a.max = *std::max_element(xs.begin(), xs.end());
    double sum = 0.0;
    for (double x : xs) sum += x;
    a.mean = sum / static_cast<double>(a.n);
    if (a.n > 1) {
      double ss = 0.0;
      for (double x : xs) ss += (x - a.mean) * (x - a.mean);
      a.stddev = std::sqrt(ss / static_cast<double>(a.n - 1));
    }
    out.push_back(a);
  }
  return out;
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string to_csv(const ResultsTable& table) {
  ResultsTable sorted = table;
  sorted.sort();
  std::string out = "experiment,cell,seed,epoch,metric,value\n";
  for (const auto& r : sorted.rows) {
    out += fmt::format("{},{},{},{},{},{}\n", csv_field(table.experiment), csv_field(r.cell), r.seed,
                       r.epoch ? std::to_string(*r.epoch) : std::string(), csv_field(r.metric),
                       format_value(r.value));
  }
  return out;
}

std::string summary_json(const ResultsTable& table) {
  ordered_json cells = ordered_json::object();
  for (const auto& a : table.aggregates()) {
    cells[a.cell][a.metric] = {{"n", a.n},
                               {"min", json_number(a.min)},
                               {"mean", json_number(a.mean)},
                               {"max", json_number(a.max)},
                               {"stddev", json_number(a.stddev)}};
  }
  ordered_json doc = {{"experiment", table.experiment},
                      {"deviation", "sample standard deviation over seeds"},
                      {"cells", cells}};
  return doc.dump(2) + "\n";
}

EmittedFiles emit_results(const ResultsTable& table, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  const std::string stem = table.experiment.empty() ? "results" : table.experiment;
  EmittedFiles files{dir / (stem + ".csv"), dir / (stem + "_summary.json")};
  write_file(files.csv, to_csv(table));
  write_file(files.json, summary_json(table));
  return files;
}

}  // namespace sgdlab
