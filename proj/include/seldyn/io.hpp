#ifndef SELDYN_IO_HPP
#define SELDYN_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "seldyn/adjoint.hpp"
#include "seldyn/dynamics.hpp"

namespace seldyn::io {

/// Shortest-faithful decimal rendering used for every numeric output:
/// 17 significant digits round-trip IEEE doubles exactly.
std::string format_g17(double v);

/// Node-indexed field, header "y,value".  Loading validates the node
/// column against the grid within 1e-9.
void write_field_csv(const std::filesystem::path& path, const Field& f, const Grid& grid);
Field read_field_csv(const std::filesystem::path& path, const Grid& grid);

/// Kernel slice in row-major order, header "y,z,value".
void write_kernel_csv(const std::filesystem::path& path, const KernelSlice& k, const Grid& grid);
KernelSlice read_kernel_csv(const std::filesystem::path& path, const Grid& grid);

/// Time-dependent controls, headers "t,y,value" and "t,y,z,value"; the
/// t column must hold the left endpoints l*dt of the step intervals.
void write_control_bias_csv(const std::filesystem::path& path, const std::vector<Field>& a,
                            const Grid& grid, const TimeGrid& time);
std::vector<Field> read_control_bias_csv(const std::filesystem::path& path, const Grid& grid,
                                         const TimeGrid& time);
void write_control_kernel_csv(const std::filesystem::path& path,
                              const std::vector<KernelSlice>& b, const Grid& grid,
                              const TimeGrid& time);
std::vector<KernelSlice> read_control_kernel_csv(const std::filesystem::path& path,
                                                 const Grid& grid, const TimeGrid& time);

/// State (or costate) series, header "t,y,value", one row per node and
/// stored step.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
void write_costate_csv(const std::filesystem::path& path, const CostateTrajectory& costate);

/// Iteration series, header "iter,value".
void write_history_csv(const std::filesystem::path& path, const std::vector<double>& values);

/// Aligned numeric columns under a caller-supplied header line.
void write_columns_csv(const std::filesystem::path& path, const std::string& header,
                       const std::vector<const std::vector<double>*>& columns);

/// Reads the header of a CSV file (first line).
std::string peek_csv_header(const std::filesystem::path& path);

}  // namespace seldyn::io

#endif
