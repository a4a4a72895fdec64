#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmca/dynamics.hpp"

namespace pmca::cli {

inline constexpr int kSchemaVersion = 1;

/// 17 significant digits, "%.17g".
std::string format_csv(double value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  /// Throws std::logic_error on a width mismatch.
  void add_row(const std::vector<double>& row);
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

CsvTable trajectory_table(const Trajectory& traj);
CsvTable control_table(const ControlSignal& control);

/// Throws std::runtime_error if the file cannot be written.
void write_text(const std::string& path, const std::string& text);
void write_csv(const std::string& path, const CsvTable& table);
void write_json(const std::string& path, const nlohmann::ordered_json& doc);

}  // namespace pmca::cli
