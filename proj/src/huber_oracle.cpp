#include "shiftsel/huber_oracle.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>

#include "shiftsel/errors.hpp"

namespace shiftsel {
namespace {

void check_inputs(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) throw DomainError("X and Y row counts differ");
  if (x.rows() == 0 || x.cols() == 0) throw DomainError("X is empty");
  if (!x.allFinite() || !y.allFinite()) throw DomainError("X and Y must be finite");
}

Eigen::ColPivHouseholderQR<Matrix> full_rank_qr(const Matrix& x) {
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < x.cols()) throw DomainError("X is not full column rank");
  return qr;
}

}  // namespace

double huber_rho(double t, double lambda) {
  const double a = std::abs(t);
  return a <= lambda ? 0.5 * t * t : lambda * a - 0.5 * lambda * lambda;
}

double huber_objective(const Matrix& x, const Matrix& y, const Matrix& beta, double lambda, double sigma) {
  const Matrix r = (y - x * beta) / sigma;
  double total = 0.0;
  for (Eigen::Index k = 0; k < r.size(); ++k) total += huber_rho(r.data()[k], lambda);
  return total;
}

HuberFit huber_fit(const Matrix& x, const Matrix& y, double lambda, double sigma) {
  check_inputs(x, y);
  if (!(lambda > 0.0)) throw DomainError("lambda must be > 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be finite and > 0");

  HuberFit fit;
  fit.beta = full_rank_qr(x).solve(y);
  fit.converged = true;
  const double cut = lambda * sigma;

  std::vector<bool> done(static_cast<std::size_t>(y.cols()), false);
  for (std::size_t it = 1; it <= kHuberMaxIterations; ++it) {
    bool all_done = true;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (done[static_cast<std::size_t>(j)]) continue;
      const Vector r = y.col(j) - x * fit.beta.col(j);
      Vector w(r.size());
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double a = std::abs(r(i));
        w(i) = a <= cut ? 1.0 : cut / a;
      }
      const Vector sw = w.cwiseSqrt();
      const Matrix xw = sw.asDiagonal() * x;
      const Vector next = full_rank_qr(xw).solve(Vector(sw.cwiseProduct(y.col(j))));
      const double change = (next - fit.beta.col(j)).norm();
      const double scale = std::max(fit.beta.col(j).norm(), 1e-300);
      fit.beta.col(j) = next;
      if (change <= kHuberRelTol * scale) {
        done[static_cast<std::size_t>(j)] = true;
      } else {
        all_done = false;
      }
    }
    fit.iterations = it;
    fit.objective_trace.push_back(huber_objective(x, y, fit.beta, lambda, sigma));
    if (all_done) return fit;
  }
  fit.converged = std::all_of(done.begin(), done.end(), [](bool d) { return d; });
  return fit;
}

MeanShiftFit mean_shift_alternating(const Matrix& x, const Matrix& y, double penalty, double tol,
                                    std::size_t max_iter) {
  check_inputs(x, y);
  if (!(penalty >= 0.0)) throw DomainError("penalty must be >= 0");
  const auto qr = full_rank_qr(x);

  MeanShiftFit fit;
  fit.gamma = Matrix::Zero(y.rows(), y.cols());
  fit.beta = qr.solve(y);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const Matrix r = y - x * fit.beta;
    for (Eigen::Index k = 0; k < r.size(); ++k) {
      const double v = r.data()[k];
      const double mag = std::abs(v) - penalty;
      fit.gamma.data()[k] = mag > 0.0 ? std::copysign(mag, v) : 0.0;
    }
    const Matrix next = qr.solve(Matrix(y - fit.gamma));
    const double change = (next - fit.beta).cwiseAbs().maxCoeff();
    fit.beta = next;
    fit.iterations = it;
    if (change <= tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

double equivalence_check(const Matrix& x, const Matrix& y, double lambda, double sigma) {
  const HuberFit huber = huber_fit(x, y, lambda, sigma);
  const MeanShiftFit shift = mean_shift_alternating(x, y, lambda * sigma);
  return (huber.beta - shift.beta).cwiseAbs().maxCoeff();
}

}  // namespace shiftsel
