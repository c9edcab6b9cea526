#pragma once

#include "json.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nss/nested.hpp"
#include "nss/target.hpp"

namespace nss {

/// Formats a double with 17 significant digits ("nan", "inf", "-inf" for non-finite values).
std::string format_double(double v);

/// Writes a header line and numeric rows; every value is printed with format_double.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Same layout for pre-formatted cells (mixed text and numbers).
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// One point per row with columns x0, x1, ...
void write_points_csv(const std::filesystem::path& path, std::span<const Point> points);

/// index, energy, n_live, birth_energy, x0, x1, ...
void write_dead_csv(const std::filesystem::path& path, std::span<const DeadRecord> dead);

/// Reads a numeric CSV with a header line into points; all rows must have equal width.
std::vector<Point> read_points_csv(const std::filesystem::path& path);

/// Non-finite doubles become null.
nlohmann::json json_number(double v);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace nss
