#pragma once

#include <cstddef>
#include <vector>

#include "shiftsel/data_model.hpp"

namespace shiftsel {

// Huber's M-estimate, fitted column by column:
//   min_beta  sum_i rho((y_ij - x_i^T beta_j) / sigma; lambda)
//   rho(t; lambda) = t^2/2 for |t| <= lambda, lambda|t| - lambda^2/2 otherwise.
// Its minimizer coincides with the beta of the mean-shift problem
//   min 1/2 |Y - X beta - gamma|_F^2 + lambda * sigma * |gamma|_1.

struct HuberFit {
  Matrix beta;                         ///< p x c
  std::size_t iterations = 0;          ///< largest count over columns
  bool converged = false;
  std::vector<double> objective_trace; ///< summed objective after each iteration
};

inline constexpr std::size_t kHuberMaxIterations = 500;
inline constexpr double kHuberRelTol = 1e-10;

double huber_rho(double t, double lambda);
double huber_objective(const Matrix& x, const Matrix& y, const Matrix& beta, double lambda, double sigma);

/// Iteratively reweighted least squares starting from OLS.
/// Throws DomainError for rank-deficient X or invalid lambda / sigma.
HuberFit huber_fit(const Matrix& x, const Matrix& y, double lambda, double sigma);

struct MeanShiftFit {
  Matrix beta;
  Matrix gamma;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Alternates beta = OLS(X, Y - gamma) with an entrywise soft-threshold of
/// Y - X beta at `penalty`.
MeanShiftFit mean_shift_alternating(const Matrix& x, const Matrix& y, double penalty,
                                    double tol = 1e-13, std::size_t max_iter = 200000);

/// max |beta_huber - beta_mean_shift| with the mean-shift penalty lambda * sigma.
double equivalence_check(const Matrix& x, const Matrix& y, double lambda, double sigma);

}  // namespace shiftsel
