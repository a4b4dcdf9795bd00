#include "shiftsel/recovery_cert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shiftsel/errors.hpp"

namespace shiftsel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Support split by class block: rows[j] lists the P-columns in S for class j.
std::vector<IndexList> split_by_class(const IndexList& support, std::size_t n, std::size_t classes) {
  std::vector<IndexList> rows(classes);
  for (std::size_t idx : support) {
    const std::size_t j = idx / n;
    if (j >= classes) throw DomainError("support index " + std::to_string(idx) + " out of range");
    rows[j].push_back(idx % n);
  }
  return rows;
}

std::size_t classes_spanned(const IndexList& support, std::size_t n) {
  return support.empty() ? 1 : support.back() / n + 1;
}

Matrix columns(const Matrix& m, const IndexList& idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(idx[k]));
  return out;
}

IndexList complement(const IndexList& in, std::size_t n) {
  std::vector<bool> member(n, false);
  for (std::size_t i : in) member[i] = true;
  IndexList out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!member[i]) out.push_back(i);
  }
  return out;
}

struct Block {
  Matrix on;           // P columns in S_j
  Matrix gram;         // on^T on
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
};

Block make_block(const Matrix& p, const IndexList& cols) {
  Block b;
  b.on = columns(p, cols);
  b.gram = b.on.transpose() * b.on;
  b.eig.compute(b.gram);
  return b;
}

Matrix inverse_of(const Block& b) {
  const Vector& vals = b.eig.eigenvalues();
  if (vals.size() > 0 && vals.minCoeff() <= kRestrictedEigenFloor) {
    throw DomainError("restricted Gram matrix is singular; C1 (restricted eigenvalue) fails");
  }
  return b.eig.eigenvectors() * vals.cwiseInverse().asDiagonal() * b.eig.eigenvectors().transpose();
}

}  // namespace

IndexList vectorized_support(const Matrix& gamma_true) {
  if (!gamma_true.allFinite()) throw DomainError("gamma has non-finite entries");
  IndexList out;
  const auto n = static_cast<std::size_t>(gamma_true.rows());
  for (Eigen::Index j = 0; j < gamma_true.cols(); ++j) {
    for (Eigen::Index i = 0; i < gamma_true.rows(); ++i) {
      if (gamma_true(i, j) != 0.0) out.push_back(static_cast<std::size_t>(j) * n + static_cast<std::size_t>(i));
    }
  }
  return out;
}

RestrictedEigen restricted_eigen(const Projector& projector, const IndexList& support) {
  if (support.empty()) return {kInf, true};
  const std::size_t n = projector.size();
  const auto blocks = split_by_class(support, n, classes_spanned(support, n));
  double smallest = kInf;
  for (const auto& cols : blocks) {
    if (cols.empty()) continue;
    smallest = std::min(smallest, make_block(projector.matrix, cols).eig.eigenvalues().minCoeff());
  }
  return {smallest, false};
}

double irrepresentability(const Projector& projector, const IndexList& support, std::size_t classes) {
  const std::size_t n = projector.size();
  const auto blocks = split_by_class(support, n, classes);
  double worst = 0.0;
  for (const auto& cols : blocks) {
    if (cols.empty()) continue;
    const Block b = make_block(projector.matrix, cols);
    const Matrix off = columns(projector.matrix, complement(cols, n));
    const Matrix m = off.transpose() * b.on * inverse_of(b);
    if (m.rows() > 0) worst = std::max(worst, m.cwiseAbs().rowwise().sum().maxCoeff());
  }
  return 1.0 - worst;
}

double max_offsupport_column_norm(const Projector& projector, const IndexList& support,
                                  std::size_t classes) {
  const std::size_t n = projector.size();
  const auto blocks = split_by_class(support, n, classes);
  const Vector norms = projector.matrix.colwise().squaredNorm().transpose();
  double best = 0.0;
  for (const auto& cols : blocks) {
    for (std::size_t i : complement(cols, n)) best = std::max(best, norms(static_cast<Eigen::Index>(i)));
  }
  return best;
}

double lambda_lower_bound(double sigma, double mu, double eta, std::size_t classes, std::size_t n) {
  if (!(eta > 0.0)) return kInf;
  const double cn = static_cast<double>(classes) * static_cast<double>(n);
  return 2.0 * sigma * std::sqrt(mu) / eta * std::sqrt(std::log(cn));
}

RecoveryCertificate certify(const Projector& projector, const Matrix& gamma_true, double lambda,
                            double sigma) {
  if (static_cast<std::size_t>(gamma_true.rows()) != projector.size()) {
    throw DomainError("gamma rows differ from projector size");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be finite and >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and >= 0");

  const std::size_t n = projector.size();
  const auto classes = static_cast<std::size_t>(gamma_true.cols());
  const IndexList support = vectorized_support(gamma_true);

  RecoveryCertificate cert;
  cert.lambda_used = lambda;
  cert.mu = max_offsupport_column_norm(projector, support, classes);

  if (support.empty()) {
    cert.empty_support = true;
    cert.c_min = kInf;
    cert.eta = 1.0;
    cert.gamma_min = kInf;
    cert.h_threshold = 0.0;
    cert.c1_ok = cert.c2_ok = cert.c3_ok = true;
    cert.lambda_lower_bound = lambda_lower_bound(sigma, cert.mu, 1.0, classes, n);
    cert.lambda_ok = lambda >= cert.lambda_lower_bound;
    cert.subset_recovery = cert.lambda_ok;
    cert.exact_recovery = cert.lambda_ok;
    return cert;
  }

  cert.c_min = restricted_eigen(projector, support).value;
  cert.c1_ok = cert.c_min > kRestrictedEigenFloor;
  cert.gamma_min = kInf;
  for (std::size_t idx : support) {
    cert.gamma_min = std::min(cert.gamma_min, std::abs(gamma_true(static_cast<Eigen::Index>(idx % n),
                                                                  static_cast<Eigen::Index>(idx / n))));
  }

  if (cert.c1_ok) {
    const double eta = irrepresentability(projector, support, classes);
    cert.eta = eta;
    cert.c2_ok = eta > 0.0;

    double sign_term = 0.0;
    const auto blocks = split_by_class(support, n, classes);
    for (std::size_t j = 0; j < classes; ++j) {
      if (blocks[j].empty()) continue;
      Vector signs(static_cast<Eigen::Index>(blocks[j].size()));
      for (std::size_t k = 0; k < blocks[j].size(); ++k) {
        signs(static_cast<Eigen::Index>(k)) =
            gamma_true(static_cast<Eigen::Index>(blocks[j][k]), static_cast<Eigen::Index>(j)) > 0.0 ? 1.0 : -1.0;
      }
      const Vector v = inverse_of(make_block(projector.matrix, blocks[j])) * signs;
      sign_term = std::max(sign_term, v.lpNorm<Eigen::Infinity>());
    }
    cert.h_threshold = lambda * eta / std::sqrt(cert.c_min * cert.mu) + lambda * sign_term;
    cert.c3_ok = cert.gamma_min > *cert.h_threshold;
    cert.lambda_lower_bound = lambda_lower_bound(sigma, cert.mu, eta, classes, n);
  } else {
    cert.lambda_lower_bound = kInf;
  }
  cert.lambda_ok = lambda >= cert.lambda_lower_bound;
  cert.subset_recovery = cert.c1_ok && cert.c2_ok && cert.lambda_ok;
  cert.exact_recovery = cert.subset_recovery && cert.c3_ok;
  return cert;
}

nlohmann::json certificate_to_json(const RecoveryCertificate& cert) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : json(nullptr); };
  return {{"c_min", num(cert.c_min)},
          {"empty_support", cert.empty_support},
          {"eta", opt(cert.eta)},
          {"gamma_min", num(cert.gamma_min)},
          {"h_threshold", opt(cert.h_threshold)},
          {"mu", num(cert.mu)},
          {"lambda_used", num(cert.lambda_used)},
          {"lambda_lower_bound", num(cert.lambda_lower_bound)},
          {"verdicts",
           {{"c1_ok", cert.c1_ok}, {"c2_ok", cert.c2_ok}, {"c3_ok", cert.c3_ok}, {"lambda_ok", cert.lambda_ok}}},
          {"predicted", {{"subset_recovery", cert.subset_recovery}, {"exact_recovery", cert.exact_recovery}}}};
}

}  // namespace shiftsel
