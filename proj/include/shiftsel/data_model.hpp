#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace shiftsel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<std::size_t>;

/// n x p real features. Always at least one row; zero columns are allowed.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(Matrix data);

  const Matrix& data() const noexcept { return data_; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(data_.cols()); }

 private:
  Matrix data_;
};

/// n x c one-hot label rows.
class LabelMatrix {
 public:
  explicit LabelMatrix(Matrix data);

  const Matrix& data() const noexcept { return data_; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t classes() const noexcept { return static_cast<std::size_t>(data_.cols()); }

 private:
  Matrix data_;
};

LabelMatrix encode_one_hot(std::span<const int> raw_labels, int classes);

/// Column index of the 1 in each row.
std::vector<int> decode_one_hot(const LabelMatrix& labels);

/// Features paired with labels. Labels are kept both one-hot (regression
/// target) and as integers (used for class bookkeeping).
class Dataset {
 public:
  /// `instance_ids` defaults to 0..n-1 when empty.
  Dataset(FeatureMatrix features, std::vector<int> raw_labels, int classes,
          std::vector<std::uint64_t> instance_ids = {});

  const FeatureMatrix& features() const noexcept { return features_; }
  const LabelMatrix& labels() const noexcept { return labels_; }
  const std::vector<int>& raw_labels() const noexcept { return raw_labels_; }
  const std::vector<std::uint64_t>& instance_ids() const noexcept { return instance_ids_; }
  std::size_t size() const noexcept { return features_.rows(); }
  int classes() const noexcept { return static_cast<int>(labels_.classes()); }

  /// Same labels and ids, new features (row count must match).
  Dataset with_features(FeatureMatrix features) const;

 private:
  FeatureMatrix features_;
  LabelMatrix labels_;
  std::vector<int> raw_labels_;
  std::vector<std::uint64_t> instance_ids_;
};

enum class PenaltyMode {
  kElementwise,  ///< l1 on every entry of gamma
  kRowGroup,     ///< l2 norm of each row gamma_i
};

std::string_view to_string(PenaltyMode mode);
/// Accepts "elementwise", "row-group" and "row_group".
PenaltyMode parse_penalty_mode(std::string_view text);

struct LambdaGridSummary {
  double max = 0.0;
  double min_ratio = 0.0;
  std::size_t count = 0;

  bool operator==(const LambdaGridSummary&) const = default;
};

/// Result of a detection run: per-instance selecting times, the full ranking
/// (most suspicious first) and the selected noisy set.
struct NoiseReport {
  std::vector<double> selecting_times;
  IndexList ranking;
  IndexList noisy_set;  ///< sorted ascending
  double select_ratio = 0.5;
  LambdaGridSummary lambda_grid;
  PenaltyMode penalty_mode = PenaltyMode::kRowGroup;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return selecting_times.size(); }

  /// Throws DomainError if any report invariant is broken.
  void validate() const;

  bool operator==(const NoiseReport&) const = default;
};

/// round(ratio * n), half away from zero.
std::size_t selected_count(double select_ratio, std::size_t n);

}  // namespace shiftsel
