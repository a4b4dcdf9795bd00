#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "shiftsel/data_model.hpp"

namespace shiftsel {

enum class MatrixFormat {
  kCsv,          ///< headerless, comma separated, row-major, '\n' rows
  kSprmBinary,   ///< "SPRM" | u32 version=1 | u64 rows | u64 cols | rows*cols f64, all LE
};

/// ".sprm" selects binary, anything else CSV.
MatrixFormat format_for_path(const std::filesystem::path& path);

Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
void save_matrix(const Matrix& matrix, const std::filesystem::path& path, MatrixFormat format);

Matrix parse_csv_matrix(std::string_view text);
std::string format_csv_matrix(const Matrix& matrix);
Matrix parse_sprm(std::string_view bytes);
std::string encode_sprm(const Matrix& matrix);

/// Integer class labels, one per line.
std::vector<int> load_labels(const std::filesystem::path& path);
void save_labels(const std::vector<int>& labels, const std::filesystem::path& path);

/// Instance indices, one per line.
IndexList load_index_list(const std::filesystem::path& path);
void save_index_list(const IndexList& indices, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace shiftsel
