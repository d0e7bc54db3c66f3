#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace rcsl {

using Cell = std::variant<std::int64_t, double, std::string>;
using ReportRow = std::map<std::string, Cell>;

/// Append-only table of experiment results with a fixed column schema.
class ExperimentReport {
public:
  static constexpr int kSchemaVersion = 1;

  ExperimentReport(std::string experiment_id, std::vector<std::string> columns);

  void set_param(const std::string& key, const std::string& value) { params_[key] = value; }
  /// Throws std::invalid_argument unless the row has exactly the schema's
  /// columns.
  void add_row(ReportRow row);
  void append(const ExperimentReport& other);

  const std::string& experiment_id() const { return experiment_id_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<ReportRow>& rows() const { return rows_; }
  const std::map<std::string, std::string>& params() const { return params_; }

  /// UTF-8 CSV with a header row, columns in schema order.
  std::string to_csv() const;
  nlohmann::json to_json() const;

private:
  std::string experiment_id_;
  std::vector<std::string> columns_;
  std::map<std::string, std::string> params_;
  std::vector<ReportRow> rows_;
};

double cell_as_double(const Cell& c);
std::string format_cell(const Cell& c);

}  // namespace rcsl
