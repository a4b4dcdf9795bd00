#include "shiftsel/linalg.hpp"

#include <cmath>

#include "shiftsel/errors.hpp"

namespace shiftsel {

PcaResult pca_fit_transform(const FeatureMatrix& features, std::size_t target_dim) {
  const Matrix& x = features.data();
  const std::size_t limit = std::min(features.rows(), features.cols());
  if (target_dim < 1 || target_dim > limit) {
    throw DomainError("PCA target_dim " + std::to_string(target_dim) + " outside [1, " +
                      std::to_string(limit) + "]");
  }
  const auto d = static_cast<Eigen::Index>(target_dim);

  PcaModel model;
  model.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - model.mean.transpose();

  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  model.components = svd.matrixV().leftCols(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    auto col = model.components.col(k);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
  }
  const double dof = std::max<double>(1.0, static_cast<double>(x.rows()) - 1.0);
  model.explained_variance = svd.singularValues().head(d).array().square() / dof;

  Matrix scores = centered * model.components;
  return PcaResult{std::move(model), FeatureMatrix(std::move(scores))};
}

Projector residual_projector(const Matrix& design) {
  if (!design.allFinite()) throw DomainError("design matrix has non-finite entries");
  const Eigen::Index n = design.rows();
  Projector out{Matrix::Identity(n, n), 0};
  if (design.cols() == 0 || n == 0) return out;

  Eigen::BDCSVD<Matrix> svd(design, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  const double cutoff = kRankCutoff * (sv.size() > 0 ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff && sv(rank) > 0.0) ++rank;
  if (rank == 0) return out;

  const auto basis = svd.matrixU().leftCols(rank);
  out.matrix.noalias() -= basis * basis.transpose();
  // Symmetric to the last bit so downstream Gram identities are exact.
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  out.rank_removed = static_cast<std::size_t>(rank);
  return out;
}

Matrix apply_projector(const Projector& projector, const Matrix& targets) {
  if (static_cast<Eigen::Index>(projector.size()) != targets.rows()) {
    throw DomainError("projector is " + std::to_string(projector.size()) + "x" +
                      std::to_string(projector.size()) + " but targets have " +
                      std::to_string(targets.rows()) + " rows");
  }
  return projector.matrix * targets;
}

Vector soft_threshold_row(const Eigen::Ref<const Vector>& v, double lambda, PenaltyMode mode) {
  Vector out(v.size());
  if (mode == PenaltyMode::kElementwise) {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const double mag = std::abs(v(j)) - lambda;
      out(j) = mag > 0.0 ? std::copysign(mag, v(j)) : 0.0;
    }
    return out;
  }
  const double norm = v.norm();
  if (norm <= lambda) {
    out.setZero();
  } else {
    out = v * (1.0 - lambda / norm);
  }
  return out;
}

}  // namespace shiftsel
