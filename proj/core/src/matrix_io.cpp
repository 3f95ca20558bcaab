#include "esi/matrix_io.hpp"

#include "esi/errors.hpp"
#include "text_util.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace esi::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "MAT-BIN reader/writer assumes a little-endian host");

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ParseError(path.string() + ": truncated MAT-BIN file");
  }
  return value;
}

bool has_bin_magic(const std::string& bytes) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), kMatBinMagic, 4) == 0;
}

Eigen::MatrixXd parse_matrix_bin(const std::string& bytes,
                                 const std::filesystem::path& path) {
  std::istringstream in(bytes, std::ios::binary);
  in.ignore(4);
  const auto version = get<std::uint8_t>(in, path);
  if (version != kMatBinVersion) {
    throw FormatError(path.string() + ": unsupported MAT-BIN version " +
                      std::to_string(version));
  }
  const auto rows = get<std::uint64_t>(in, path);
  const auto cols = get<std::uint64_t>(in, path);
  const std::uint64_t expected = 4 + 1 + 16 + rows * cols * sizeof(double);
  if (bytes.size() != expected) {
    throw ParseError(path.string() + ": MAT-BIN payload size " +
                     std::to_string(bytes.size()) + " does not match header " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = get<double>(in, path);
    }
  }
  return m;
}

Eigen::MatrixXd parse_csv_impl(std::string_view text, const std::filesystem::path& path) {
  const auto lines = detail::split_lines(text);
  std::size_t i = 0;
  auto next_content = [&]() -> std::pair<std::size_t, std::string_view> {
    while (i < lines.size()) {
      auto line = detail::trim(lines[i]);
      ++i;
      if (!line.empty() && line.front() != '#') return {i, line};
    }
    return {0, {}};
  };

  auto [header_no, header] = next_content();
  if (header_no == 0) throw ParseError(path.string() + ": empty matrix file");
  const auto dims = detail::split_fields(header);
  if (dims.size() != 2) {
    throw ParseError(where(path, header_no) + "expected header \"rows cols\"");
  }
  const auto rows = detail::parse_index(dims[0], where(path, header_no));
  const auto cols = detail::parse_index(dims[1], where(path, header_no));

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    auto [line_no, line] = next_content();
    if (line_no == 0) {
      throw ParseError(path.string() + ": expected " + std::to_string(rows) +
                       " rows, found " + std::to_string(r));
    }
    const auto fields = detail::split_fields(line);
    if (fields.size() != cols) {
      throw ParseError(where(path, line_no) + "expected " + std::to_string(cols) +
                       " values, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          detail::parse_double(fields[c], where(path, line_no));
    }
  }
  if (auto [extra, _] = next_content(); extra != 0) {
    throw ParseError(where(path, extra) + "trailing data after " + std::to_string(rows) +
                     " rows");
  }
  return m;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::logic_error("format_double: to_chars failed");
  return std::string(buf.data(), end);
}

MatrixFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? MatrixFormat::Bin : MatrixFormat::Csv;
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  MatrixFormat format) {
  if (format == MatrixFormat::Csv) {
    write_text_file(path, matrix_to_csv(m));
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMatBinMagic, 4);
  put<std::uint8_t>(out, kMatBinVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(out, m(r, c));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  write_matrix(path, m, format_for_path(path));
}

Eigen::MatrixXd parse_matrix_csv(std::string_view text) {
  return parse_csv_impl(text, "<memory>");
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  const auto bytes = read_text_file(path);
  if (has_bin_magic(bytes)) return parse_matrix_bin(bytes, path);
  return parse_csv_impl(bytes, path);
}

void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v) {
  if (format_for_path(path) == MatrixFormat::Bin) {
    write_matrix(path, v, MatrixFormat::Bin);
    return;
  }
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += format_double(v[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

Eigen::VectorXd read_vector(const std::filesystem::path& path) {
  const auto bytes = read_text_file(path);
  if (has_bin_magic(bytes)) {
    auto m = parse_matrix_bin(bytes, path);
    if (m.cols() != 1) throw ShapeError(path.string() + ": VEC file must have one column");
    return m.col(0);
  }

  // A MAT-CSV header has two fields on its first content line; a plain VEC
  // line has one.
  const auto lines = detail::split_lines(bytes);
  std::vector<double> values;
  bool first = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = detail::split_fields(line);
    if (first && fields.size() == 2) {
      auto m = parse_csv_impl(bytes, path);
      if (m.cols() != 1) throw ShapeError(path.string() + ": VEC file must have one column");
      return m.col(0);
    }
    first = false;
    if (fields.size() != 1) {
      throw ParseError(where(path, i + 1) + "expected one value per line");
    }
    values.push_back(detail::parse_double(fields[0], where(path, i + 1)));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

void write_manifest(const std::filesystem::path& path, const Manifest& entries) {
  std::string out;
  for (const auto& [key, value] : entries) out += key + " = " + value + "\n";
  write_text_file(path, out);
}

Manifest read_manifest(const std::filesystem::path& path) {
  Manifest entries;
  const auto text = read_text_file(path);
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(where(path, i + 1) + "expected key = value");
    }
    entries[std::string(detail::trim(line.substr(0, eq)))] =
        std::string(detail::trim(line.substr(eq + 1)));
  }
  return entries;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace esi::io
