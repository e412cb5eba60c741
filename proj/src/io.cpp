#include "seldyn/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace seldyn::io {

namespace {

constexpr double kNodeTol = 1e-9;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "' for reading");
  return in;
}

struct CsvTable {
  std::string header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path, const std::string& expected_header) {
  std::ifstream in = open_in(path);
  CsvTable table;
  if (!std::getline(in, table.header))
    throw ConfigError("'" + path.string() + "' is empty");
  if (!table.header.empty() && table.header.back() == '\r') table.header.pop_back();
  if (table.header != expected_header)
    throw ConfigError("'" + path.string() + "': expected header '" + expected_header +
                      "', found '" + table.header + "'");

  const size_t cols = std::count(expected_header.begin(), expected_header.end(), ',') + 1;
  std::string line;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(cols);
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw ConfigError("'" + path.string() + "' line " + std::to_string(lineno) +
                          ": bad number '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != cols)
      throw ConfigError("'" + path.string() + "' line " + std::to_string(lineno) +
                        ": expected " + std::to_string(cols) + " columns");
    table.rows.push_back(std::move(row));
  }
  return table;
}

void check_node(double got, double want, const std::filesystem::path& path, const char* what) {
  if (std::abs(got - want) > kNodeTol)
    throw ConfigError("'" + path.string() + "': " + what + " coordinate " + format_g17(got) +
                      " does not match the configured grid value " + format_g17(want));
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_field_csv(const std::filesystem::path& path, const Field& f, const Grid& grid) {
  detail::require(f.size() == grid.size(), "write_field_csv: field length must match grid");
  std::ofstream out = open_out(path);
  out << "y,value\n";
  for (int i = 0; i < grid.size(); ++i)
    out << format_g17(grid.nodes()[i]) << ',' << format_g17(f.values[i]) << '\n';
}

Field read_field_csv(const std::filesystem::path& path, const Grid& grid) {
  CsvTable table = read_csv(path, "y,value");
  if (static_cast<int>(table.rows.size()) != grid.size())
    throw ConfigError("'" + path.string() + "': expected " + std::to_string(grid.size()) +
                      " rows, found " + std::to_string(table.rows.size()));
  Field f = Field::zeros(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    check_node(table.rows[i][0], grid.nodes()[i], path, "node");
    f.values[i] = table.rows[i][1];
  }
  return f;
}

void write_kernel_csv(const std::filesystem::path& path, const KernelSlice& k, const Grid& grid) {
  detail::require(k.size() == grid.size(), "write_kernel_csv: kernel size must match grid");
  std::ofstream out = open_out(path);
  out << "y,z,value\n";
  for (int i = 0; i < grid.size(); ++i)
    for (int j = 0; j < grid.size(); ++j)
      out << format_g17(grid.nodes()[i]) << ',' << format_g17(grid.nodes()[j]) << ','
          << format_g17(k.values(i, j)) << '\n';
}

KernelSlice read_kernel_csv(const std::filesystem::path& path, const Grid& grid) {
  CsvTable table = read_csv(path, "y,z,value");
  const int n = grid.size();
  if (static_cast<int>(table.rows.size()) != n * n)
    throw ConfigError("'" + path.string() + "': expected " + std::to_string(n * n) +
                      " rows, found " + std::to_string(table.rows.size()));
  KernelSlice k = KernelSlice::zeros(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::vector<double>& row = table.rows[i * n + j];
      check_node(row[0], grid.nodes()[i], path, "y");
      check_node(row[1], grid.nodes()[j], path, "z");
      k.values(i, j) = row[2];
    }
  }
  return k;
}

void write_control_bias_csv(const std::filesystem::path& path, const std::vector<Field>& a,
                            const Grid& grid, const TimeGrid& time) {
  detail::require(static_cast<int>(a.size()) == time.steps,
                  "write_control_bias_csv: slice count must equal step count");
  std::ofstream out = open_out(path);
  out << "t,y,value\n";
  for (int l = 0; l < time.steps; ++l)
    for (int i = 0; i < grid.size(); ++i)
      out << format_g17(time.time_at(l)) << ',' << format_g17(grid.nodes()[i]) << ','
          << format_g17(a[l].values[i]) << '\n';
}

std::vector<Field> read_control_bias_csv(const std::filesystem::path& path, const Grid& grid,
                                         const TimeGrid& time) {
  CsvTable table = read_csv(path, "t,y,value");
  const int n = grid.size();
  const size_t expect = static_cast<size_t>(time.steps) * n;
  if (table.rows.size() != expect)
    throw ConfigError("'" + path.string() + "': expected " + std::to_string(expect) +
                      " rows, found " + std::to_string(table.rows.size()));
  std::vector<Field> a(time.steps, Field::zeros(n));
  for (int l = 0; l < time.steps; ++l) {
    for (int i = 0; i < n; ++i) {
      const std::vector<double>& row = table.rows[static_cast<size_t>(l) * n + i];
      check_node(row[0], time.time_at(l), path, "time");
      check_node(row[1], grid.nodes()[i], path, "node");
      a[l].values[i] = row[2];
    }
  }
  return a;
}

void write_control_kernel_csv(const std::filesystem::path& path,
                              const std::vector<KernelSlice>& b, const Grid& grid,
                              const TimeGrid& time) {
  detail::require(static_cast<int>(b.size()) == time.steps,
                  "write_control_kernel_csv: slice count must equal step count");
  std::ofstream out = open_out(path);
  out << "t,y,z,value\n";
  for (int l = 0; l < time.steps; ++l)
    for (int i = 0; i < grid.size(); ++i)
      for (int j = 0; j < grid.size(); ++j)
        out << format_g17(time.time_at(l)) << ',' << format_g17(grid.nodes()[i]) << ','
            << format_g17(grid.nodes()[j]) << ',' << format_g17(b[l].values(i, j)) << '\n';
}

std::vector<KernelSlice> read_control_kernel_csv(const std::filesystem::path& path,
                                                 const Grid& grid, const TimeGrid& time) {
  CsvTable table = read_csv(path, "t,y,z,value");
  const int n = grid.size();
  const size_t expect = static_cast<size_t>(time.steps) * n * n;
  if (table.rows.size() != expect)
    throw ConfigError("'" + path.string() + "': expected " + std::to_string(expect) +
                      " rows, found " + std::to_string(table.rows.size()));
  std::vector<KernelSlice> b(time.steps, KernelSlice::zeros(n));
  for (int l = 0; l < time.steps; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const std::vector<double>& row =
            table.rows[(static_cast<size_t>(l) * n + i) * n + j];
        check_node(row[0], time.time_at(l), path, "time");
        check_node(row[1], grid.nodes()[i], path, "y");
        check_node(row[2], grid.nodes()[j], path, "z");
        b[l].values(i, j) = row[3];
      }
    }
  }
  return b;
}

namespace {

void write_states_csv(const std::filesystem::path& path, const std::vector<Field>& states,
                      const Grid& grid, const TimeGrid& time) {
  std::ofstream out = open_out(path);
  out << "t,y,value\n";
  for (size_t l = 0; l < states.size(); ++l)
    for (int i = 0; i < grid.size(); ++i)
      out << format_g17(time.time_at(static_cast<int>(l))) << ','
          << format_g17(grid.nodes()[i]) << ',' << format_g17(states[l].values[i]) << '\n';
}

}  // namespace

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  write_states_csv(path, traj.states, traj.grid, traj.time);
}

void write_costate_csv(const std::filesystem::path& path, const CostateTrajectory& costate) {
  write_states_csv(path, costate.states, costate.grid, costate.time);
}

void write_history_csv(const std::filesystem::path& path, const std::vector<double>& values) {
  std::ofstream out = open_out(path);
  out << "iter,value\n";
  for (size_t i = 0; i < values.size(); ++i)
    out << i << ',' << format_g17(values[i]) << '\n';
}

void write_columns_csv(const std::filesystem::path& path, const std::string& header,
                       const std::vector<const std::vector<double>*>& columns) {
  detail::require(!columns.empty(), "write_columns_csv: need at least one column");
  const size_t rows = columns.front()->size();
  for (const auto* col : columns)
    detail::require(col->size() == rows, "write_columns_csv: column lengths differ");
  std::ofstream out = open_out(path);
  out << header << '\n';
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ',';
      out << format_g17((*columns[c])[r]);
    }
    out << '\n';
  }
}

std::string peek_csv_header(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  return header;
}

}  // namespace seldyn::io
