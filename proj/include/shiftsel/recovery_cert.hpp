#pragma once

#include <cstddef>
#include <optional>

#include <json.hpp>

#include "shiftsel/data_model.hpp"
#include "shiftsel/linalg.hpp"

namespace shiftsel {

// Support-recovery conditions for the elementwise-l1 problem
//   min 1/2 |vec(Y~) - K vec(gamma)|^2 + lambda |vec(gamma)|_1,  K = I_c (x) P.
// vec() stacks columns, so entry (i, j) of an n x c matrix has index j*n + i.
// K is block diagonal with one copy of P per class, and every quantity below
// is computed one class block at a time.

/// Indices j*n + i where gamma_true(i, j) != 0, ascending.
IndexList vectorized_support(const Matrix& gamma_true);

/// Eigenvalues at or below this count as zero for C1.
inline constexpr double kRestrictedEigenFloor = 1e-10;

struct RestrictedEigen {
  double value = 0.0;       ///< +inf when the support is empty
  bool empty_support = false;
};

/// Smallest eigenvalue of K_S^T K_S.
RestrictedEigen restricted_eigen(const Projector& projector, const IndexList& support);

/// eta = 1 - |K_{S^c}^T K_S (K_S^T K_S)^{-1}|_inf (max absolute row sum).
/// Throws DomainError when K_S^T K_S is singular (C1 fails).
double irrepresentability(const Projector& projector, const IndexList& support, std::size_t classes);

/// Largest squared column norm of K over S^c (0 when S^c is empty).
double max_offsupport_column_norm(const Projector& projector, const IndexList& support,
                                  std::size_t classes);

/// (2 sigma sqrt(mu) / eta) sqrt(log(c n)); +inf when eta <= 0.
double lambda_lower_bound(double sigma, double mu, double eta, std::size_t classes, std::size_t n);

struct RecoveryCertificate {
  double c_min = 0.0;
  bool empty_support = false;
  std::optional<double> eta;        ///< empty when C1 fails
  double gamma_min = 0.0;           ///< +inf for empty support
  std::optional<double> h_threshold;
  double mu = 0.0;
  double lambda_used = 0.0;
  double lambda_lower_bound = 0.0;
  bool c1_ok = false;
  bool c2_ok = false;
  bool c3_ok = false;
  bool lambda_ok = false;
  bool subset_recovery = false;     ///< c1 && c2 && lambda
  bool exact_recovery = false;      ///< subset && c3
};

RecoveryCertificate certify(const Projector& projector, const Matrix& gamma_true, double lambda,
                            double sigma);

/// Non-finite values are written as null.
nlohmann::json certificate_to_json(const RecoveryCertificate& cert);

}  // namespace shiftsel
