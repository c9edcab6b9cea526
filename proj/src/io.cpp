#include "nss/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nss {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open for writing: " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw InvalidArgument("write_csv: row width differs from header");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  if (!out) throw RuntimeError("write failed: " + path.string());
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size());
  for (const auto& row : rows) {
    std::vector<std::string> c;
    c.reserve(row.size());
    for (double v : row) c.push_back(format_double(v));
    cells.push_back(std::move(c));
  }
  write_csv(path, header, cells);
}

void write_points_csv(const std::filesystem::path& path, std::span<const Point> points) {
  const Eigen::Index d = points.empty() ? 0 : points.front().size();
  std::vector<std::string> header;
  for (Eigen::Index i = 0; i < d; ++i) header.push_back("x" + std::to_string(i));
  std::vector<std::vector<double>> rows;
  rows.reserve(points.size());
  for (const Point& p : points) rows.emplace_back(p.data(), p.data() + p.size());
  write_csv(path, header, rows);
}

void write_dead_csv(const std::filesystem::path& path, std::span<const DeadRecord> dead) {
  const Eigen::Index d = dead.empty() ? 0 : dead.front().x.size();
  std::vector<std::string> header{"index", "energy", "n_live", "birth_energy"};
  for (Eigen::Index i = 0; i < d; ++i) header.push_back("x" + std::to_string(i));
  std::vector<std::vector<double>> rows;
  rows.reserve(dead.size());
  for (std::size_t i = 0; i < dead.size(); ++i) {
    const DeadRecord& r = dead[i];
    std::vector<double> row{static_cast<double>(i), r.energy, static_cast<double>(r.n_live), r.birth_energy};
    row.insert(row.end(), r.x.data(), r.x.data() + r.x.size());
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

std::vector<Point> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty CSV: " + path.string());
  std::vector<Point> points;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      std::size_t used = 0;
      try {
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cell.size()) {
        throw InvalidArgument("non-numeric CSV cell '" + cell + "' in " + path.string());
      }
    }
    if (points.empty()) width = row.size();
    if (row.size() != width || width == 0) throw InvalidArgument("ragged CSV: " + path.string());
    points.emplace_back(Eigen::Map<Point>(row.data(), static_cast<Eigen::Index>(row.size())));
  }
  return points;
}

nlohmann::json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw RuntimeError("write failed: " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open for reading: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace nss
