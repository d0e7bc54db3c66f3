#include "rcsl/report.hpp"

#include <array>
#include <charconv>
#include <sstream>
#include <stdexcept>

namespace rcsl {

ExperimentReport::ExperimentReport(std::string experiment_id, std::vector<std::string> columns)
    : experiment_id_(std::move(experiment_id)), columns_(std::move(columns)) {
  if (columns_.empty()) throw std::invalid_argument("ExperimentReport: no columns");
}

void ExperimentReport::add_row(ReportRow row) {
  if (row.size() != columns_.size()) {
    throw std::invalid_argument("ExperimentReport " + experiment_id_ + ": row has " + std::to_string(row.size()) +
                                " cells, schema has " + std::to_string(columns_.size()));
  }
  for (const auto& c : columns_) {
    if (!row.contains(c)) throw std::invalid_argument("ExperimentReport " + experiment_id_ + ": missing column " + c);
  }
  rows_.push_back(std::move(row));
}

void ExperimentReport::append(const ExperimentReport& other) {
  if (other.columns_ != columns_) throw std::invalid_argument("ExperimentReport::append: schema mismatch");
  for (const auto& r : other.rows_) rows_.push_back(r);
}

double cell_as_double(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&c)) return *d;
  throw std::invalid_argument("cell_as_double: string cell");
}

std::string format_cell(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), *d);
    return std::string(buf.data(), end);
  }
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + '"';
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << format_cell(row.at(columns_[i]));
    out << '\n';
  }
  return out.str();
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : rows_) {
    nlohmann::json r = nlohmann::json::object();
    for (const auto& c : columns_) {
      std::visit([&](const auto& v) { r[c] = v; }, row.at(c));
    }
    rows.push_back(std::move(r));
  }
  return nlohmann::json{{"experiment_id", experiment_id_},
                        {"schema_version", kSchemaVersion},
                        {"params", params_},
                        {"columns", columns_},
                        {"rows", std::move(rows)}};
}

}  // namespace rcsl
