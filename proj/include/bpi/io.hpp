#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bpi/diffusion.hpp"
#include "bpi/discrete.hpp"
#include "bpi/forest.hpp"
#include "bpi/rayknight.hpp"

namespace bpi::io {

/// Shortest round-trip text for a double ("%.17g").
std::string number(double v);

/// Writes a CSV file with a header row; every row must match the header width.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; std::out_of_range when absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

void write_step_path(const std::filesystem::path& path, const StepPath& p);
void write_ledger(const std::filesystem::path& path, const MartingaleLedger& ledger);
void write_trajectory(const std::filesystem::path& path, const Trajectory& t);
/// id, parent_id, birth_time, death_time, censored, planar_key
void write_forest(const std::filesystem::path& path, const PlanarForest& forest);
void write_poly_path(const std::filesystem::path& path, const PolyPath& p);
/// x_target, level, local_time
void write_field(const std::filesystem::path& path, const std::vector<double>& x_targets,
                 const std::vector<LocalTimeField>& snapshots);
void write_samples(const std::filesystem::path& path, const std::vector<double>& values);

}  // namespace bpi::io
