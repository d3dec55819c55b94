#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace predrate {

/// Text form used for every number written by the tool: 17 significant
/// digits, "inf"/"-inf"/"nan" for non-finite values.
std::string format_number(double value);

/// A CSV file with a self-describing '#' header: columns with units, what the
/// statistic is, and the seed.
class CsvTable {
 public:
  struct Column {
    std::string name;
    std::string unit;  // "1" for dimensionless
  };
  using Cell = std::variant<double, std::uint64_t, std::string, bool>;

  CsvTable(std::string title, std::vector<Column> columns, std::string statistic, std::uint64_t seed);

  void add_row(std::vector<Cell> row);
  /// Extra '#' lines after the standard header.
  void add_note(std::string note) { notes_.push_back(std::move(note)); }

  std::string to_string() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string title_;
  std::vector<Column> columns_;
  std::string statistic_;
  std::uint64_t seed_;
  std::vector<std::string> notes_;
  std::vector<std::vector<Cell>> rows_;
};

struct VerificationOutcome {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// summary.csv: one row per verification with status and detail.
CsvTable summary_table(const std::vector<VerificationOutcome>& outcomes, std::uint64_t seed,
                       const std::string& config_source);

/// Rows of a summary.csv written by summary_table.
std::vector<VerificationOutcome> read_summary(const std::filesystem::path& path);

}  // namespace predrate
