#pragma once

#include <cstddef>

#include "shiftsel/data_model.hpp"

namespace shiftsel {

/// Residual maker I - X (X^T X)^+ X^T as a dense symmetric n x n matrix.
struct Projector {
  Matrix matrix;
  std::size_t rank_removed = 0;  ///< numerical column rank of X

  std::size_t size() const noexcept { return static_cast<std::size_t>(matrix.rows()); }
};

struct PcaModel {
  Vector mean;                 ///< length p
  Matrix components;           ///< p x d, orthonormal columns
  Vector explained_variance;   ///< length d, descending, sample variance (n - 1 denominator)
};

struct PcaResult {
  PcaModel model;
  FeatureMatrix transformed;   ///< n x d centered scores
};

/// Projects centered rows onto the top `target_dim` principal directions.
/// Each component is sign-normalized so its largest-magnitude entry is
/// positive (first such entry on ties).
PcaResult pca_fit_transform(const FeatureMatrix& features, std::size_t target_dim);

/// Relative singular-value cutoff used for the pseudo-inverse.
inline constexpr double kRankCutoff = 1e-10;

Projector residual_projector(const Matrix& design);
inline Projector residual_projector(const FeatureMatrix& features) {
  return residual_projector(features.data());
}

Matrix apply_projector(const Projector& projector, const Matrix& targets);

/// Proximal operator of lambda * pen at v: entrywise soft-threshold for
/// kElementwise, v * max(1 - lambda / |v|_2, 0) for kRowGroup.
Vector soft_threshold_row(const Eigen::Ref<const Vector>& v, double lambda, PenaltyMode mode);

}  // namespace shiftsel
