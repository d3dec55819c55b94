#include "predrate/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace predrate {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

// Quotes a text cell when it would break the row.
std::string text_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

std::string cell_text(const CsvTable::Cell& cell) {
  struct Visitor {
    std::string operator()(double v) const { return format_number(v); }
    std::string operator()(std::uint64_t v) const { return std::to_string(v); }
    std::string operator()(const std::string& v) const { return text_cell(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  };
  return std::visit(Visitor{}, cell);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

CsvTable::CsvTable(std::string title, std::vector<Column> columns, std::string statistic,
                   std::uint64_t seed)
    : title_(std::move(title)), columns_(std::move(columns)), statistic_(std::move(statistic)), seed_(seed) {}

void CsvTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) throw std::logic_error("row width does not match the columns of " + title_);
  rows_.push_back(std::move(row));
}

std::string CsvTable::to_string() const {
  std::ostringstream out;
  out << "# " << title_ << "\n# columns:";
  for (std::size_t k = 0; k < columns_.size(); ++k) out << (k ? ", " : " ") << columns_[k].name;
  out << "\n# units:";
  for (std::size_t k = 0; k < columns_.size(); ++k) out << (k ? ", " : " ") << columns_[k].name << " [" << columns_[k].unit << "]";
  out << "\n# statistic: " << statistic_ << "\n# seed: " << seed_ << "\n";
  for (const auto& note : notes_) out << "# " << note << "\n";
  for (std::size_t k = 0; k < columns_.size(); ++k) out << (k ? "," : "") << columns_[k].name;
  out << "\n";
  for (const auto& row : rows_) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << cell_text(row[k]);
    out << "\n";
  }
  return out.str();
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_string();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

CsvTable summary_table(const std::vector<VerificationOutcome>& outcomes, std::uint64_t seed,
                       const std::string& config_source) {
  CsvTable t("summary", {{"verification", "name"}, {"status", "pass|fail"}, {"detail", "text"}},
             "pass/fail of each selected verification; failures are listed with their reason", seed);
  t.add_note("config: " + config_source);
  std::string failed;
  for (const auto& o : outcomes) {
    if (!o.pass) failed += (failed.empty() ? "" : " ") + o.name;
  }
  t.add_note("failures: " + (failed.empty() ? std::string("none") : failed));
  for (const auto& o : outcomes) t.add_row({o.name, std::string(o.pass ? "pass" : "fail"), o.detail});
  return t;
}

std::vector<VerificationOutcome> read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<VerificationOutcome> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto cells = split_row(line);
    if (cells.size() < 3) throw std::runtime_error("malformed summary row in " + path.string());
    out.push_back({cells[0], cells[1] == "pass", cells[2]});
  }
  return out;
}

}  // namespace predrate
