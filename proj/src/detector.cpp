#include "shiftsel/detector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "shiftsel/errors.hpp"
#include "shiftsel/linalg.hpp"
#include "shiftsel/log.hpp"
#include "shiftsel/path_solver.hpp"

namespace shiftsel {

std::string_view to_string(MergeMode mode) {
  return mode == MergeMode::kUnion ? "union" : "normalized-score";
}

MergeMode parse_merge_mode(std::string_view text) {
  if (text == "normalized-score") return MergeMode::kNormalizedScore;
  if (text == "union") return MergeMode::kUnion;
  throw DomainError("unknown merge mode '" + std::string(text) + "'");
}

void DetectorConfig::validate() const {
  if (!(select_ratio > 0.0 && select_ratio < 1.0)) throw DomainError("select-ratio must be in (0,1)");
  if (per_class < 1) throw DomainError("per-class must be at least 1");
  if (group_size < 1) throw DomainError("group-size must be at least 1");
  if (grid_knots < 2) throw DomainError("grid-knots must be at least 2");
  if (!(grid_min_ratio > 0.0 && grid_min_ratio < 1.0)) {
    throw DomainError("grid-min-ratio must be in (0,1)");
  }
  if (!(tol > 0.0)) throw DomainError("tol must be positive");
  if (max_sweeps < 1) throw DomainError("max-sweeps must be at least 1");
  if (workers < 1) throw DomainError("workers must be at least 1");
}

std::size_t pca_dim_for(std::size_t p, std::size_t piece_n, const DetectorConfig& config) {
  if (config.pca_dim) return std::min({*config.pca_dim, p, piece_n});
  return std::min(p, piece_n / 4);
}

PieceProblem build_piece_problem(const Dataset& dataset, const IndexList& instances,
                                 const DetectorConfig& config) {
  const auto n = static_cast<Eigen::Index>(instances.size());
  if (n == 0) throw DomainError("empty piece");
  const Matrix& features = dataset.features().data();
  const Matrix& labels = dataset.labels().data();
  Matrix x(n, features.cols());
  Matrix y(n, labels.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = static_cast<Eigen::Index>(instances[static_cast<std::size_t>(r)]);
    x.row(r) = features.row(src);
    y.row(r) = labels.row(src);
  }

  const std::size_t dim = pca_dim_for(dataset.features().cols(), instances.size(), config);
  Matrix reduced(n, 0);
  if (dim > 0) reduced = pca_fit_transform(FeatureMatrix(std::move(x)), dim).transformed.data();
  Matrix design = reduced;
  if (config.fit_intercept) {
    design.resize(n, reduced.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(reduced.cols()) = reduced;
  }

  PieceProblem problem;
  problem.projector = residual_projector(design);
  problem.y_tilde = apply_projector(problem.projector, y);
  return problem;
}

PieceResult solve_piece(const Dataset& dataset, const IndexList& instances,
                        const DetectorConfig& config) {
  PieceResult out;
  if (instances.empty()) {
    out.diagnostic = "empty piece";
    return out;
  }
  const auto n = static_cast<Eigen::Index>(instances.size());
  const PieceProblem problem = build_piece_problem(dataset, instances, config);
  const Projector& projector = problem.projector;
  if (projector.rank_removed >= instances.size()) {
    out.diagnostic = "design spans every row; residual projector is zero";
    return out;
  }
  const Matrix& y_tilde = problem.y_tilde;
  out.residual_norms.resize(instances.size());
  for (Eigen::Index r = 0; r < n; ++r) out.residual_norms[static_cast<std::size_t>(r)] = y_tilde.row(r).norm();

  const LambdaMax top = lambda_max(projector, y_tilde, config.penalty);
  if (!std::isfinite(top.value)) {
    out.diagnostic = "non-finite lambda_max";
    return out;
  }
  out.lambda_max = top.value;
  out.selecting_times.assign(instances.size(), 0.0);
  out.scores.assign(instances.size(), 0.0);
  if (top.degenerate) {
    out.ok = true;
    return out;
  }

  const LambdaGrid grid = make_lambda_grid(top.value, config.grid_min_ratio, config.grid_knots);
  SolverOptions options;
  options.tol = config.tol;
  options.max_sweeps = config.max_sweeps;
  options.stop_when_all_active = true;
  const GammaPath path = solve_gamma_path(projector, y_tilde, grid, config.penalty, options);
  out.selecting_times = selecting_times(path);
  for (std::size_t r = 0; r < out.scores.size(); ++r) {
    out.scores[r] = out.selecting_times[r] / top.value;
    if (!std::isfinite(out.scores[r])) {
      out.diagnostic = "non-finite selecting time";
      return out;
    }
  }
  out.ok = true;
  return out;
}

std::vector<PieceResult> solve_pieces_parallel(const Dataset& dataset,
                                               const std::vector<IndexList>& pieces,
                                               const DetectorConfig& config, std::size_t workers) {
  if (workers < 1) throw DomainError("workers must be at least 1");
  std::vector<PieceResult> results(pieces.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next.fetch_add(1); k < pieces.size(); k = next.fetch_add(1)) {
      try {
        results[k] = solve_piece(dataset, pieces[k], config);
      } catch (const std::exception& e) {
        results[k] = PieceResult{};
        results[k].diagnostic = e.what();
      }
    }
  };
  const std::size_t threads = std::min(workers, pieces.size());
  if (threads <= 1) {
    work();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  pool.clear();  // joins
  return results;
}

namespace {

// Top-k slots of a single piece, same ordering rule as the global ranking.
std::vector<bool> piece_selection(const PieceResult& piece, double ratio) {
  const NoiseReport local = rank_and_select(piece.scores, piece.residual_norms, ratio);
  std::vector<bool> flagged(piece.scores.size(), false);
  for (std::size_t slot : local.noisy_set) flagged[slot] = true;
  return flagged;
}

NoiseReport merge_pieces(const Dataset& dataset, const std::vector<IndexList>& pieces,
                         const std::vector<PieceResult>& results, const DetectorConfig& config) {
  const std::size_t n = dataset.size();
  std::vector<double> score(n, 0.0);
  std::vector<double> tie(n, 0.0);
  std::vector<bool> seen(n, false);
  std::size_t solved = 0;
  double largest_lambda = 0.0;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const PieceResult& piece = results[k];
    if (!piece.ok) {
      log::error("piece " + std::to_string(k) + " skipped: " + piece.diagnostic);
      continue;
    }
    ++solved;
    largest_lambda = std::max(largest_lambda, piece.lambda_max);
    std::vector<bool> flagged;
    if (config.merge == MergeMode::kUnion) flagged = piece_selection(piece, config.select_ratio);
    for (std::size_t slot = 0; slot < pieces[k].size(); ++slot) {
      const std::size_t i = pieces[k][slot];
      double s = piece.scores[slot];
      if (!flagged.empty() && flagged[slot]) s += 1.0;
      score[i] = seen[i] ? std::max(score[i], s) : s;
      tie[i] = seen[i] ? std::max(tie[i], piece.residual_norms[slot]) : piece.residual_norms[slot];
      seen[i] = true;
    }
  }
  if (solved == 0) throw DomainError("detection failed: no piece could be solved");
  const auto missing = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), false));
  if (missing > 0) {
    log::error(std::to_string(missing) + " instances only appeared in skipped pieces; scored as 0");
  }

  NoiseReport report = rank_and_select(score, tie, config.select_ratio);
  report.penalty_mode = config.penalty;
  report.seed = config.seed;
  report.lambda_grid = {largest_lambda, config.grid_min_ratio, config.grid_knots};
  return report;
}

}  // namespace

SplitPlan plan_split(const Dataset& dataset, const DetectorConfig& config,
                     const IndexList& prior_noisy) {
  config.validate();
  const PrototypeSet prototypes =
      class_prototypes(dataset.features(), dataset.raw_labels(), dataset.classes(), prior_noisy);
  for (std::size_t k = 0; k < prototypes.empty.size(); ++k) {
    if (prototypes.empty[k]) log::info("class " + std::to_string(k) + " has no clean instances; prototype is zero");
  }
  const Matrix similarity = similarity_matrix(prototypes, config.normalize_similarity);
  ClassGroups groups = group_classes(similarity, config.group_size);

  // Classes without any instance cannot form pieces.
  std::vector<std::size_t> counts(static_cast<std::size_t>(dataset.classes()), 0);
  for (int label : dataset.raw_labels()) ++counts[static_cast<std::size_t>(label)];
  for (auto& g : groups) {
    std::erase_if(g, [&](int k) { return counts[static_cast<std::size_t>(k)] == 0; });
  }
  std::erase_if(groups, [](const auto& g) { return g.empty(); });
  return make_pieces(groups, dataset.raw_labels(), config.per_class, config.seed);
}

NoiseReport detect(const Dataset& dataset, const DetectorConfig& config, const IndexList& prior_noisy) {
  const SplitPlan plan = plan_split(dataset, config, prior_noisy);
  log::info("split into " + std::to_string(plan.pieces.size()) + " pieces over " +
            std::to_string(plan.class_groups.size()) + " class groups");
  if (plan.pieces.empty()) throw DomainError("detection failed: split produced no pieces");
  const auto results = solve_pieces_parallel(dataset, plan.pieces, config, config.workers);
  return merge_pieces(dataset, plan.pieces, results, config);
}

NoiseReport detect_whole(const Dataset& dataset, const DetectorConfig& config) {
  config.validate();
  IndexList all(dataset.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const std::vector<IndexList> pieces{all};
  const std::vector<PieceResult> results{solve_piece(dataset, all, config)};
  return merge_pieces(dataset, pieces, results, config);
}

EpochState epoch_update(const EpochState& state, FeatureMatrix new_features,
                        const DetectorConfig& config) {
  if (!state.dataset) throw DomainError("epoch state has no dataset");
  auto dataset = std::make_shared<const Dataset>(state.dataset->with_features(std::move(new_features)));
  for (std::size_t idx : state.noisy_set) {
    if (idx >= dataset->size()) throw DomainError("noisy index out of range");
  }
  const NoiseReport report = detect(*dataset, config, state.noisy_set);
  return EpochState{report.noisy_set, state.epoch + 1, std::move(dataset)};
}

}  // namespace shiftsel
