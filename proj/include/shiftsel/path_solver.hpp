#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "shiftsel/data_model.hpp"
#include "shiftsel/linalg.hpp"

namespace shiftsel {

/// Strictly descending positive regularization values.
class LambdaGrid {
 public:
  /// Validates strict descent and positivity; a single value is allowed.
  static LambdaGrid from_values(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double max() const noexcept { return values_.front(); }
  double min_ratio() const noexcept { return values_.back() / values_.front(); }
  LambdaGridSummary summary() const { return {max(), min_ratio(), size()}; }

 private:
  explicit LambdaGrid(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

/// Geometric grid lambda_k = lambda_max * min_ratio^(k / (count - 1)).
LambdaGrid make_lambda_grid(double lambda_max, double min_ratio, std::size_t count);

struct LambdaMax {
  double value = 0.0;
  bool degenerate = false;  ///< all-zero correlation: no usable grid
};

/// Smallest lambda at which gamma = 0 is optimal. `row_weights` scales the
/// per-row penalty (empty means all ones).
LambdaMax lambda_max(const Projector& projector, const Matrix& y_tilde, PenaltyMode mode,
                     std::span<const double> row_weights = {});

struct SolverOptions {
  double tol = 1e-6;              ///< max entry change per sweep, and KKT gap bound
  std::size_t max_sweeps = 1000;  ///< per knot, counting full and active-set sweeps
  std::vector<double> row_weights;
  bool record_objective = false;  ///< keep the objective after every sweep
  /// Stop the path once every row has been non-zero at some knot. Selecting
  /// times are final at that point; the returned grid is truncated to match.
  bool stop_when_all_active = false;
};

/// Solution at a single lambda.
struct KnotSolution {
  Matrix gamma;
  bool converged = false;
  double kkt_gap = 0.0;
  std::size_t sweeps = 0;
  std::vector<double> objective_trace;
};

/// Block coordinate descent on
///   1/2 |Y~ - P gamma|_F^2 + lambda * sum_i w_i pen(gamma_i)
/// starting from `warm_start` (zero when null). P must be a projector.
KnotSolution solve_at_lambda(const Projector& projector, const Matrix& y_tilde, double lambda,
                             PenaltyMode mode, const SolverOptions& options,
                             const Matrix* warm_start = nullptr);

struct GammaPath {
  LambdaGrid grid;
  PenaltyMode mode = PenaltyMode::kRowGroup;
  std::vector<Eigen::SparseMatrix<double>> gammas;  ///< one n x c matrix per knot
  std::vector<bool> converged;
  std::vector<double> kkt_gap;
  std::vector<std::size_t> sweeps;
  std::vector<std::vector<double>> objective_traces;  ///< filled when requested

  std::size_t instances() const { return gammas.empty() ? 0 : static_cast<std::size_t>(gammas.front().rows()); }
  /// Number of rows with a non-zero entry at knot k.
  std::size_t support_size(std::size_t knot) const;
};

/// Solves every knot in descending order, each warm-started from the last.
GammaPath solve_gamma_path(const Projector& projector, const Matrix& y_tilde,
                           const LambdaGrid& grid, PenaltyMode mode,
                           const SolverOptions& options = {});

/// Objective value evaluated directly (dense products, no shortcuts).
double penalized_objective(const Projector& projector, const Matrix& y_tilde, const Matrix& gamma,
                           double lambda, PenaltyMode mode,
                           std::span<const double> row_weights = {});

/// KKT residual of `gamma` at `lambda`: worst violation over inactive rows
/// plus worst stationarity residual over active rows.
double kkt_gap(const Projector& projector, const Matrix& y_tilde, const Matrix& gamma,
               double lambda, PenaltyMode mode, std::span<const double> row_weights = {});

/// C_i = largest grid value with gamma_i != 0, or 0 when the row never activates.
std::vector<double> selecting_times(const GammaPath& path);

/// Orders instances by descending score, ties by larger `tie_norms` then by
/// smaller index, and marks the top round(select_ratio * n) as noisy.
NoiseReport rank_and_select(std::span<const double> scores, std::span<const double> tie_norms,
                            double select_ratio);

}  // namespace shiftsel
