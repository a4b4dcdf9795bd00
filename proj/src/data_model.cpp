#include "shiftsel/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "shiftsel/errors.hpp"

namespace shiftsel {

FeatureMatrix::FeatureMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1) throw DomainError("feature matrix needs at least one row");
  if (!data_.allFinite()) throw DomainError("feature matrix has non-finite entries");
}

LabelMatrix::LabelMatrix(Matrix data) : data_(std::move(data)) {
  for (Eigen::Index i = 0; i < data_.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index j = 0; j < data_.cols(); ++j) {
      const double v = data_(i, j);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        throw DomainError("label row " + std::to_string(i) + " is not one-hot");
      }
    }
    if (ones != 1) throw DomainError("label row " + std::to_string(i) + " is not one-hot");
  }
}

LabelMatrix encode_one_hot(std::span<const int> raw_labels, int classes) {
  if (classes < 1) throw DomainError("class count must be positive");
  Matrix data = Matrix::Zero(static_cast<Eigen::Index>(raw_labels.size()), classes);
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    const int label = raw_labels[i];
    if (label < 0 || label >= classes) {
      throw DomainError("label " + std::to_string(label) + " out of range at index " +
                        std::to_string(i));
    }
    data(static_cast<Eigen::Index>(i), label) = 1.0;
  }
  return LabelMatrix(std::move(data));
}

std::vector<int> decode_one_hot(const LabelMatrix& labels) {
  std::vector<int> out(labels.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    Eigen::Index col = 0;
    labels.data().row(static_cast<Eigen::Index>(i)).maxCoeff(&col);
    out[i] = static_cast<int>(col);
  }
  return out;
}

namespace {

std::vector<std::uint64_t> default_ids(std::size_t n) {
  std::vector<std::uint64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

}  // namespace

Dataset::Dataset(FeatureMatrix features, std::vector<int> raw_labels, int classes,
                 std::vector<std::uint64_t> instance_ids)
    : features_(std::move(features)),
      labels_(encode_one_hot(raw_labels, classes)),
      raw_labels_(std::move(raw_labels)),
      instance_ids_(instance_ids.empty() ? default_ids(raw_labels_.size())
                                         : std::move(instance_ids)) {
  if (raw_labels_.size() != features_.rows()) {
    throw DomainError("label count " + std::to_string(raw_labels_.size()) +
                      " does not match feature rows " + std::to_string(features_.rows()));
  }
  if (instance_ids_.size() != raw_labels_.size()) {
    throw DomainError("instance id count does not match label count");
  }
  std::unordered_set<std::uint64_t> seen(instance_ids_.begin(), instance_ids_.end());
  if (seen.size() != instance_ids_.size()) throw DomainError("instance ids are not unique");
}

Dataset Dataset::with_features(FeatureMatrix features) const {
  if (features.rows() != size()) {
    throw DomainError("new feature matrix has " + std::to_string(features.rows()) +
                      " rows, dataset has " + std::to_string(size()));
  }
  return Dataset(std::move(features), raw_labels_, classes(), instance_ids_);
}

std::string_view to_string(PenaltyMode mode) {
  return mode == PenaltyMode::kElementwise ? "elementwise" : "row-group";
}

PenaltyMode parse_penalty_mode(std::string_view text) {
  if (text == "elementwise") return PenaltyMode::kElementwise;
  if (text == "row-group" || text == "row_group") return PenaltyMode::kRowGroup;
  throw DomainError("unknown penalty mode '" + std::string(text) + "'");
}

std::size_t selected_count(double select_ratio, std::size_t n) {
  return static_cast<std::size_t>(std::llround(select_ratio * static_cast<double>(n)));
}

void NoiseReport::validate() const {
  const std::size_t n = selecting_times.size();
  if (!(select_ratio > 0.0 && select_ratio < 1.0)) {
    throw DomainError("select_ratio must be in (0,1)");
  }
  if (ranking.size() != n) throw DomainError("ranking length differs from instance count");
  std::vector<bool> seen(n, false);
  for (std::size_t idx : ranking) {
    if (idx >= n || seen[idx]) throw DomainError("ranking is not a permutation");
    seen[idx] = true;
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (selecting_times[ranking[k - 1]] < selecting_times[ranking[k]]) {
      throw DomainError("ranking is not in descending selecting-time order");
    }
  }
  for (double c : selecting_times) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("selecting time must be finite and >= 0");
  }
  if (noisy_set.size() != selected_count(select_ratio, n)) {
    throw DomainError("noisy set size differs from round(select_ratio * n)");
  }
  IndexList top(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(noisy_set.size()));
  std::sort(top.begin(), top.end());
  if (top != noisy_set) throw DomainError("noisy set is not the top of the ranking");
}

}  // namespace shiftsel
