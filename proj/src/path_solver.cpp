#include "shiftsel/path_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shiftsel/errors.hpp"
#include "shiftsel/log.hpp"

namespace shiftsel {
namespace {

// Rows whose projector diagonal falls below this carry no signal; their
// gamma row is pinned to zero.
constexpr double kTinyDiag = 1e-12;

std::vector<double> resolve_weights(std::span<const double> weights, Eigen::Index n) {
  if (weights.empty()) return std::vector<double>(static_cast<std::size_t>(n), 1.0);
  if (static_cast<Eigen::Index>(weights.size()) != n) {
    throw DomainError("row weight count differs from instance count");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("row weights must be positive");
  }
  return {weights.begin(), weights.end()};
}

void check_dims(const Projector& projector, const Matrix& y_tilde) {
  if (static_cast<Eigen::Index>(projector.size()) != y_tilde.rows()) {
    throw DomainError("projector size " + std::to_string(projector.size()) +
                      " differs from target rows " + std::to_string(y_tilde.rows()));
  }
}

double row_penalty(const Eigen::Ref<const Vector>& row, PenaltyMode mode) {
  return mode == PenaltyMode::kElementwise ? row.lpNorm<1>() : row.norm();
}

// Violation of the optimality conditions for one row given its gradient
// correlation g_i = (P^T (Y~ - P gamma))_i.
double row_kkt(const Eigen::Ref<const Vector>& gamma_row, const Eigen::Ref<const Vector>& grad,
               double thr, PenaltyMode mode, bool* active) {
  *active = !gamma_row.isZero(0.0);
  if (mode == PenaltyMode::kElementwise) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < grad.size(); ++j) {
      const double v = gamma_row(j) != 0.0 ? std::abs(grad(j) - thr * std::copysign(1.0, gamma_row(j)))
                                           : std::max(std::abs(grad(j)) - thr, 0.0);
      worst = std::max(worst, v);
    }
    return worst;
  }
  if (!*active) return std::max(grad.norm() - thr, 0.0);
  return (grad - thr * gamma_row / gamma_row.norm()).norm();
}

double kkt_from_gradient(const Matrix& gamma, const Matrix& grad, double lambda,
                         const std::vector<double>& weights, PenaltyMode mode) {
  double inactive = 0.0;
  double active = 0.0;
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    bool is_active = false;
    const double v = row_kkt(gamma.row(i).transpose(), grad.row(i).transpose(),
                             lambda * weights[static_cast<std::size_t>(i)], mode, &is_active);
    if (is_active) {
      active = std::max(active, v);
    } else {
      inactive = std::max(inactive, v);
    }
  }
  return inactive + active;
}

// Coordinate descent state shared across the knots of one path. Because the
// projector is symmetric and idempotent, P^T P = P, so P itself serves as the
// Gram matrix and P^T Y~ = P Y~ is the gradient at gamma = 0.
class BlockDescent {
 public:
  BlockDescent(const Projector& projector, const Matrix& y_tilde, PenaltyMode mode,
               const SolverOptions& options)
      : p_(projector.matrix),
        mode_(mode),
        options_(options),
        weights_(resolve_weights(options.row_weights, y_tilde.rows())),
        diag_(p_.diagonal()),
        corr_(p_ * y_tilde),
        half_sq_norm_(0.5 * y_tilde.squaredNorm()),
        z_(y_tilde.cols()),
        next_(y_tilde.cols()) {}

  Eigen::Index rows() const { return corr_.rows(); }
  Eigen::Index cols() const { return corr_.cols(); }

  KnotSolution solve(double lambda, const Matrix* warm_start) {
    KnotSolution out;
    out.gamma = warm_start != nullptr ? *warm_start : Matrix::Zero(rows(), cols());
    if (out.gamma.rows() != rows() || out.gamma.cols() != cols()) {
      throw DomainError("warm start has wrong shape");
    }
    refresh_gradient(out.gamma);

    const std::size_t budget = std::max<std::size_t>(options_.max_sweeps, 1);
    while (out.sweeps < budget) {
      const double full_change = sweep(lambda, out.gamma, /*active_only=*/false);
      ++out.sweeps;
      record(out, lambda);
      if (full_change <= options_.tol) {
        refresh_gradient(out.gamma);
        out.kkt_gap = kkt_from_gradient(out.gamma, grad_, lambda, weights_, mode_);
        if (out.kkt_gap <= options_.tol) {
          out.converged = true;
          return out;
        }
        continue;
      }
      while (out.sweeps < budget) {
        const double change = sweep(lambda, out.gamma, /*active_only=*/true);
        ++out.sweeps;
        record(out, lambda);
        if (change <= options_.tol) break;
      }
    }
    refresh_gradient(out.gamma);
    out.kkt_gap = kkt_from_gradient(out.gamma, grad_, lambda, weights_, mode_);
    out.converged = false;
    return out;
  }

 private:
  void refresh_gradient(const Matrix& gamma) {
    grad_ = corr_;
    for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
      if (!gamma.row(i).isZero(0.0)) grad_.noalias() -= p_.col(i) * gamma.row(i);
    }
  }

  // One pass of exact block minimization; returns the largest entry change.
  double sweep(double lambda, Matrix& gamma, bool active_only) {
    double largest = 0.0;
    for (Eigen::Index i = 0; i < rows(); ++i) {
      if (active_only && gamma.row(i).isZero(0.0)) continue;
      largest = std::max(largest, update_row(i, lambda, gamma));
    }
    return largest;
  }

  double update_row(Eigen::Index i, double lambda, Matrix& gamma) {
    const double d = diag_(i);
    if (d <= kTinyDiag) {
      next_.setZero();
    } else {
      z_ = gamma.row(i).transpose() + grad_.row(i).transpose() / d;
      prox(z_, lambda * weights_[static_cast<std::size_t>(i)] / d, next_);
    }
    z_ = next_ - gamma.row(i).transpose();  // reuse as delta
    const double change = z_.cwiseAbs().maxCoeff();
    if (change > 0.0) {
      gamma.row(i) = next_.transpose();
      grad_.noalias() -= p_.col(i) * z_.transpose();
    }
    return change;
  }

  void prox(const Vector& v, double thr, Vector& out) const {
    if (mode_ == PenaltyMode::kElementwise) {
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        const double mag = std::abs(v(j)) - thr;
        out(j) = mag > 0.0 ? std::copysign(mag, v(j)) : 0.0;
      }
      return;
    }
    const double norm = v.norm();
    if (norm <= thr) {
      out.setZero();
    } else {
      out = v * (1.0 - thr / norm);
    }
  }

  // 1/2|Y~|^2 - <gamma, P Y~> + 1/2 <gamma, P gamma>, with P gamma = corr - grad.
  double objective(const Matrix& gamma, double lambda) const {
    double pen = 0.0;
    for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
      pen += weights_[static_cast<std::size_t>(i)] * row_penalty(gamma.row(i).transpose(), mode_);
    }
    return half_sq_norm_ - 0.5 * (gamma.array() * (corr_ + grad_).array()).sum() + lambda * pen;
  }

  void record(KnotSolution& out, double lambda) const {
    if (options_.record_objective) out.objective_trace.push_back(objective(out.gamma, lambda));
  }

  const Matrix& p_;
  PenaltyMode mode_;
  const SolverOptions& options_;
  std::vector<double> weights_;
  Vector diag_;
  Matrix corr_;
  Matrix grad_;
  double half_sq_norm_;
  Vector z_;
  Vector next_;
};

Eigen::SparseMatrix<double> to_sparse(const Matrix& dense) {
  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index j = 0; j < dense.cols(); ++j) {
    for (Eigen::Index i = 0; i < dense.rows(); ++i) {
      if (dense(i, j) != 0.0) entries.emplace_back(i, j, dense(i, j));
    }
  }
  Eigen::SparseMatrix<double> out(dense.rows(), dense.cols());
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

}  // namespace

LambdaGrid LambdaGrid::from_values(std::vector<double> values) {
  if (values.empty()) throw DomainError("lambda grid is empty");
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > 0.0) || !std::isfinite(values[k])) {
      throw DomainError("lambda grid values must be positive and finite");
    }
    if (k > 0 && !(values[k] < values[k - 1])) {
      throw DomainError("lambda grid must be strictly descending");
    }
  }
  return LambdaGrid(std::move(values));
}

LambdaGrid make_lambda_grid(double lambda_max_value, double min_ratio, std::size_t count) {
  if (!(lambda_max_value > 0.0) || !std::isfinite(lambda_max_value)) {
    throw DomainError("lambda_max must be positive");
  }
  if (!(min_ratio > 0.0 && min_ratio < 1.0)) throw DomainError("min_ratio must be in (0,1)");
  if (count < 2) throw DomainError("grid needs at least two knots");
  std::vector<double> values(count);
  const double span = static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) {
    values[k] = lambda_max_value * std::pow(min_ratio, static_cast<double>(k) / span);
  }
  values.front() = lambda_max_value;
  values.back() = lambda_max_value * min_ratio;
  return LambdaGrid::from_values(std::move(values));
}

LambdaMax lambda_max(const Projector& projector, const Matrix& y_tilde, PenaltyMode mode,
                     std::span<const double> row_weights) {
  check_dims(projector, y_tilde);
  const auto weights = resolve_weights(row_weights, y_tilde.rows());
  const Matrix corr = projector.matrix * y_tilde;
  double best = 0.0;
  for (Eigen::Index i = 0; i < corr.rows(); ++i) {
    const double size = mode == PenaltyMode::kElementwise ? corr.row(i).lpNorm<Eigen::Infinity>()
                                                          : corr.row(i).norm();
    best = std::max(best, size / weights[static_cast<std::size_t>(i)]);
  }
  LambdaMax out{best, best == 0.0};
  if (out.degenerate) log::info("lambda_max is zero: targets are fully explained by the design");
  return out;
}

KnotSolution solve_at_lambda(const Projector& projector, const Matrix& y_tilde, double lambda,
                             PenaltyMode mode, const SolverOptions& options,
                             const Matrix* warm_start) {
  check_dims(projector, y_tilde);
  if (!(options.tol > 0.0)) throw DomainError("tol must be positive");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be non-negative");
  BlockDescent solver(projector, y_tilde, mode, options);
  return solver.solve(lambda, warm_start);
}

std::size_t GammaPath::support_size(std::size_t knot) const {
  const auto& g = gammas.at(knot);
  std::vector<bool> hit(static_cast<std::size_t>(g.rows()), false);
  for (Eigen::Index k = 0; k < g.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(g, k); it; ++it) {
      hit[static_cast<std::size_t>(it.row())] = true;
    }
  }
  return static_cast<std::size_t>(std::count(hit.begin(), hit.end(), true));
}

GammaPath solve_gamma_path(const Projector& projector, const Matrix& y_tilde,
                           const LambdaGrid& grid, PenaltyMode mode, const SolverOptions& options) {
  check_dims(projector, y_tilde);
  if (!(options.tol > 0.0)) throw DomainError("tol must be positive");
  BlockDescent solver(projector, y_tilde, mode, options);

  GammaPath path{grid, mode, {}, {}, {}, {}, {}};
  path.gammas.reserve(grid.size());
  Matrix warm = Matrix::Zero(y_tilde.rows(), y_tilde.cols());
  std::vector<bool> activated(static_cast<std::size_t>(y_tilde.rows()), false);
  std::size_t activated_count = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    KnotSolution knot = solver.solve(grid.values()[k], &warm);
    if (!knot.converged) {
      log::debug("knot " + std::to_string(k) + " stopped after " + std::to_string(knot.sweeps) +
                 " sweeps, kkt gap " + std::to_string(knot.kkt_gap));
    }
    path.gammas.push_back(to_sparse(knot.gamma));
    path.converged.push_back(knot.converged);
    path.kkt_gap.push_back(knot.kkt_gap);
    path.sweeps.push_back(knot.sweeps);
    if (options.record_objective) path.objective_traces.push_back(std::move(knot.objective_trace));
    warm = std::move(knot.gamma);
    if (options.stop_when_all_active) {
      for (Eigen::Index i = 0; i < warm.rows(); ++i) {
        if (!activated[static_cast<std::size_t>(i)] && !warm.row(i).isZero(0.0)) {
          activated[static_cast<std::size_t>(i)] = true;
          ++activated_count;
        }
      }
      if (activated_count == activated.size() && k + 1 < grid.size()) {
        std::vector<double> solved(grid.values().begin(),
                                   grid.values().begin() + static_cast<std::ptrdiff_t>(k + 1));
        path.grid = LambdaGrid::from_values(std::move(solved));
        break;
      }
    }
  }
  return path;
}

double penalized_objective(const Projector& projector, const Matrix& y_tilde, const Matrix& gamma,
                           double lambda, PenaltyMode mode, std::span<const double> row_weights) {
  check_dims(projector, y_tilde);
  const auto weights = resolve_weights(row_weights, y_tilde.rows());
  double pen = 0.0;
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    pen += weights[static_cast<std::size_t>(i)] * row_penalty(gamma.row(i).transpose(), mode);
  }
  return 0.5 * (y_tilde - projector.matrix * gamma).squaredNorm() + lambda * pen;
}

double kkt_gap(const Projector& projector, const Matrix& y_tilde, const Matrix& gamma,
               double lambda, PenaltyMode mode, std::span<const double> row_weights) {
  check_dims(projector, y_tilde);
  const auto weights = resolve_weights(row_weights, y_tilde.rows());
  const Matrix grad = projector.matrix.transpose() * (y_tilde - projector.matrix * gamma);
  return kkt_from_gradient(gamma, grad, lambda, weights, mode);
}

std::vector<double> selecting_times(const GammaPath& path) {
  const std::size_t n = path.instances();
  std::vector<double> times(n, 0.0);
  std::vector<bool> done(n, false);
  for (std::size_t k = 0; k < path.gammas.size(); ++k) {
    const auto& g = path.gammas[k];
    for (Eigen::Index col = 0; col < g.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(g, col); it; ++it) {
        const auto i = static_cast<std::size_t>(it.row());
        if (!done[i] && it.value() != 0.0) {
          done[i] = true;
          times[i] = path.grid.values()[k];
        }
      }
    }
  }
  return times;
}

NoiseReport rank_and_select(std::span<const double> scores, std::span<const double> tie_norms,
                            double select_ratio) {
  if (!(select_ratio > 0.0 && select_ratio < 1.0)) {
    throw DomainError("select-ratio must be in (0,1)");
  }
  if (!tie_norms.empty() && tie_norms.size() != scores.size()) {
    throw DomainError("tie-break norms must match score count");
  }
  const std::size_t n = scores.size();
  NoiseReport report;
  report.select_ratio = select_ratio;
  report.selecting_times.assign(scores.begin(), scores.end());
  report.ranking.resize(n);
  std::iota(report.ranking.begin(), report.ranking.end(), std::size_t{0});
  std::sort(report.ranking.begin(), report.ranking.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (!tie_norms.empty() && tie_norms[a] != tie_norms[b]) return tie_norms[a] > tie_norms[b];
    return a < b;
  });
  const std::size_t k = selected_count(select_ratio, n);
  report.noisy_set.assign(report.ranking.begin(), report.ranking.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(report.noisy_set.begin(), report.noisy_set.end());
  return report;
}

}  // namespace shiftsel
