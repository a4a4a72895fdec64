#include "pmca_cli/output.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pmca::cli {

std::string format_csv(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void CsvTable::add_row(const std::vector<double>& row) {
  if (row.size() != header_.size()) throw std::logic_error("csv row width mismatch");
  rows_.push_back(row);
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t k = 0; k < header_.size(); ++k) {
    if (k) out += ',';
    out += header_[k];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      out += format_csv(row[k]);
    }
    out += '\n';
  }
  return out;
}

CsvTable trajectory_table(const Trajectory& traj) {
  const int n = static_cast<int>(traj.x.rows());
  std::vector<std::string> header{"t"};
  for (int i = 1; i <= n; ++i) header.push_back("x_" + std::to_string(i));
  for (int i = 1; i <= n; ++i) header.push_back("p_" + std::to_string(i));
  for (const char* c : {"u", "v", "Phi", "H"}) header.emplace_back(c);

  CsvTable table(header);
  std::vector<double> row(header.size());
  for (std::size_t j = 0; j < traj.points(); ++j) {
    std::size_t c = 0;
    row[c++] = traj.t[j];
    for (int i = 0; i < n; ++i) row[c++] = traj.x(i, j);
    for (int i = 0; i < n; ++i) row[c++] = traj.p(i, j);
    row[c++] = traj.u[j];
    row[c++] = traj.v[j];
    row[c++] = traj.Phi[j];
    row[c++] = traj.H[j];
    table.add_row(row);
  }
  return table;
}

CsvTable control_table(const ControlSignal& control) {
  CsvTable table({"t_start", "t_end", "u", "v"});
  for (const ControlSegment& s : control.segments()) table.add_row({s.t_start, s.t_end, s.u, s.v});
  return table;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void write_csv(const std::string& path, const CsvTable& table) { write_text(path, table.str()); }

void write_json(const std::string& path, const nlohmann::ordered_json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

}  // namespace pmca::cli
