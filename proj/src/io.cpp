#include "bpi/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bpi::io {

namespace fs = std::filesystem;

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void header_line(std::ofstream& out, const std::vector<std::string>& header) {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
}

}  // namespace

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out = open_out(path);
  header_line(out, header);
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::invalid_argument("row width differs from header in " + path.string());
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << number(row[i]);
    out << '\n';
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::out_of_range("no column named " + name);
}

std::vector<double> CsvTable::values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(c));
  return out;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("non-numeric cell '" + cell + "' in " + path.string());
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_step_path(const fs::path& path, const StepPath& p) {
  std::vector<std::vector<double>> rows;
  rows.push_back({0.0, static_cast<double>(p.initial) / static_cast<double>(p.scale)});
  for (std::size_t i = 0; i < p.jump_times.size(); ++i)
    rows.push_back({p.jump_times[i], static_cast<double>(p.counts[i]) / static_cast<double>(p.scale)});
  write_csv(path, {"time", "value"}, rows);
}

void write_ledger(const fs::path& path, const MartingaleLedger& ledger) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < ledger.times.size(); ++i)
    rows.push_back({ledger.times[i], ledger.predictable[i], ledger.realized[i]});
  write_csv(path, {"time", "predictable", "realized"}, rows);
}

void write_trajectory(const fs::path& path, const Trajectory& t) {
  std::vector<std::vector<double>> rows;
  rows.reserve(t.values.size());
  for (std::size_t k = 0; k < t.values.size(); ++k) rows.push_back({t.dt * static_cast<double>(k), t.values[k]});
  write_csv(path, {"t", "value"}, rows);
}

void write_forest(const fs::path& path, const PlanarForest& forest) {
  std::ofstream out = open_out(path);
  out << "id,parent_id,birth_time,death_time,censored,planar_key\n";
  for (const Individual& x : forest.individuals) {
    out << x.id << ',' << x.parent << ',' << number(x.birth) << ',' << number(x.death) << ','
        << (x.censored ? 1 : 0) << ',' << key_to_string(x.key) << '\n';
  }
}

void write_poly_path(const fs::path& path, const PolyPath& p) {
  std::vector<std::vector<double>> rows;
  rows.reserve(p.vertices.size());
  for (const Vertex& v : p.vertices) rows.push_back({v.s, v.h});
  write_csv(path, {"s", "h"}, rows);
}

void write_field(const fs::path& path, const std::vector<double>& x_targets,
                 const std::vector<LocalTimeField>& snapshots) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < snapshots.size() && i < x_targets.size(); ++i) {
    const LocalTimeField& f = snapshots[i];
    for (std::size_t j = 0; j < f.accumulated.size(); ++j) rows.push_back({x_targets[i], f.level(j), f.accumulated[j]});
  }
  write_csv(path, {"x_target", "level", "local_time"}, rows);
}

void write_samples(const fs::path& path, const std::vector<double>& values) {
  std::vector<std::vector<double>> rows;
  rows.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) rows.push_back({static_cast<double>(i), values[i]});
  write_csv(path, {"replicate", "value"}, rows);
}

}  // namespace bpi::io
