#pragma once

// Shared on-disk formats:
//
//   MAT-CSV  first line "rows cols", then one comma-separated line per row.
//   MAT-BIN  "ESIM", version byte, u64 rows, u64 cols (little-endian), then
//            rows*cols little-endian float64 values in row-major order.
//   VEC      single-column matrix. Written as one value per line; the reader
//            also accepts a MAT-CSV "n 1" header or a MAT-BIN file.
//   Manifest key = value text, one pair per line, '#' comments.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace esi::io {

enum class MatrixFormat { Csv, Bin };

inline constexpr char kMatBinMagic[4] = {'E', 'S', 'I', 'M'};
inline constexpr std::uint8_t kMatBinVersion = 1;

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Format chosen from the extension: ".bin" means MAT-BIN, anything else CSV.
MatrixFormat format_for_path(const std::filesystem::path& path);

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  MatrixFormat format);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Reads either format; MAT-BIN is recognised by its magic bytes.
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(const std::filesystem::path& path);

Eigen::MatrixXd parse_matrix_csv(std::string_view text);
std::string matrix_to_csv(const Eigen::MatrixXd& m);

using Manifest = std::map<std::string, std::string>;

void write_manifest(const std::filesystem::path& path, const Manifest& entries);
Manifest read_manifest(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace esi::io
