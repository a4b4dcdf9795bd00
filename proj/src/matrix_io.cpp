#include "shiftsel/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "shiftsel/errors.hpp"

namespace shiftsel {
namespace {

constexpr std::array<char, 4> kMagic = {'S', 'P', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8;

template <typename T>
T read_le(std::string_view bytes, std::size_t offset) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U value = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    value |= static_cast<U>(static_cast<unsigned char>(bytes[offset + b])) << (8 * b);
  }
  return std::bit_cast<T>(value);
}

template <typename T>
void append_le(std::string& out, T raw) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U value = std::bit_cast<U>(raw);
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    out.push_back(static_cast<char>((value >> (8 * b)) & 0xFF));
  }
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  // Trailing blank lines carry no rows.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, std::size_t line, std::size_t column) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(ParseError::Kind::kNonNumeric,
                     "non-numeric cell '" + std::string(cell) + "' at line " +
                         std::to_string(line) + ", column " + std::to_string(column),
                     line, 0);
  }
  if (!std::isfinite(value)) {
    throw ParseError(ParseError::Kind::kNonFinite,
                     "non-finite value at line " + std::to_string(line) + ", column " +
                         std::to_string(column),
                     line, 0);
  }
  return value;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

MatrixFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".sprm" ? MatrixFormat::kSprmBinary : MatrixFormat::kCsv;
}

Matrix parse_csv_matrix(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<std::vector<double>> rows;
  rows.reserve(lines.size());
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    std::vector<double> row;
    std::size_t start = 0;
    std::string_view line = lines[li];
    while (true) {
      std::size_t end = line.find(',', start);
      if (end == std::string_view::npos) end = line.size();
      row.push_back(parse_cell(line.substr(start, end - start), line_no, row.size() + 1));
      if (end == line.size()) break;
      start = end + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(ParseError::Kind::kRagged,
                       "ragged row at line " + std::to_string(line_no) + ": expected " +
                           std::to_string(rows.front().size()) + " cells, got " +
                           std::to_string(row.size()),
                       line_no, 0);
    }
    rows.push_back(std::move(row));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Matrix out(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) out(i, j) = rows[i][j];
  }
  return out;
}

std::string format_csv_matrix(const Matrix& matrix) {
  std::string out;
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (j > 0) out.push_back(',');
      out += format_double(matrix(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

Matrix parse_sprm(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw ParseError(ParseError::Kind::kTruncated,
                     "truncated header: " + std::to_string(bytes.size()) + " bytes", 0,
                     bytes.size());
  }
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw ParseError(ParseError::Kind::kHeader, "bad magic at offset 0", 0, 0);
  }
  const auto version = read_le<std::uint32_t>(bytes, 4);
  if (version != kVersion) {
    throw ParseError(ParseError::Kind::kHeader,
                     "unsupported version " + std::to_string(version) + " at offset 4", 0, 4);
  }
  const auto rows = read_le<std::uint64_t>(bytes, 8);
  const auto cols = read_le<std::uint64_t>(bytes, 16);
  const std::size_t payload = bytes.size() - kHeaderBytes;
  const bool fits = cols == 0 || rows <= payload / 8 / cols;
  if (!fits || payload != rows * cols * 8) {
    throw ParseError(ParseError::Kind::kDimension,
                     "header declares " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " but payload has " + std::to_string(payload) + " bytes",
                     0, kHeaderBytes);
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t offset = kHeaderBytes;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const double v = read_le<double>(bytes, offset);
      if (!std::isfinite(v)) {
        throw ParseError(ParseError::Kind::kNonFinite,
                         "non-finite value at offset " + std::to_string(offset), 0, offset);
      }
      out(i, j) = v;
      offset += 8;
    }
  }
  return out;
}

std::string encode_sprm(const Matrix& matrix) {
  std::string out(kMagic.begin(), kMagic.end());
  out.reserve(kHeaderBytes + static_cast<std::size_t>(matrix.size()) * 8);
  append_le(out, kVersion);
  append_le(out, static_cast<std::uint64_t>(matrix.rows()));
  append_le(out, static_cast<std::uint64_t>(matrix.cols()));
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) append_le(out, matrix(i, j));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path.string(), "read failed");
  return contents;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  const std::string contents = read_file(path);
  return format == MatrixFormat::kCsv ? parse_csv_matrix(contents) : parse_sprm(contents);
}

void save_matrix(const Matrix& matrix, const std::filesystem::path& path, MatrixFormat format) {
  write_file(path, format == MatrixFormat::kCsv ? format_csv_matrix(matrix) : encode_sprm(matrix));
}

std::vector<int> load_labels(const std::filesystem::path& path) {
  const Matrix m = load_matrix(path, MatrixFormat::kCsv);
  if (m.rows() > 0 && m.cols() != 1) {
    throw ParseError(ParseError::Kind::kDimension, "label file must have one column", 1, 0);
  }
  std::vector<int> labels(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double v = m(i, 0);
    if (v != std::floor(v) || std::abs(v) > 1e9) {
      throw ParseError(ParseError::Kind::kNonNumeric,
                       "label at line " + std::to_string(i + 1) + " is not an integer",
                       static_cast<std::size_t>(i + 1), 0);
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(v);
  }
  return labels;
}

void save_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
  std::string out;
  for (int label : labels) out += std::to_string(label) + "\n";
  write_file(path, out);
}

IndexList load_index_list(const std::filesystem::path& path) {
  const std::vector<int> raw = load_labels(path);
  IndexList out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0) {
      throw ParseError(ParseError::Kind::kNonNumeric,
                       "negative index at line " + std::to_string(i + 1), i + 1, 0);
    }
    out.push_back(static_cast<std::size_t>(raw[i]));
  }
  return out;
}

void save_index_list(const IndexList& indices, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t idx : indices) out += std::to_string(idx) + "\n";
  write_file(path, out);
}

}  // namespace shiftsel
