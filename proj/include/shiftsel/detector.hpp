#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shiftsel/data_model.hpp"
#include "shiftsel/linalg.hpp"
#include "shiftsel/splitter.hpp"

namespace shiftsel {

/// How piece-level selecting times are combined into one global ranking.
enum class MergeMode {
  kNormalizedScore,  ///< C_i / lambda_max(piece), max over an instance's occurrences
  kUnion,            ///< per-piece top-k selections ranked first, then normalized score
};

std::string_view to_string(MergeMode mode);
MergeMode parse_merge_mode(std::string_view text);

struct DetectorConfig {
  double select_ratio = 0.5;
  std::size_t per_class = 10;
  std::size_t group_size = 10;
  /// Overrides the default PCA width min(p, floor(piece_n / 4)).
  std::optional<std::size_t> pca_dim;
  PenaltyMode penalty = PenaltyMode::kRowGroup;
  std::size_t grid_knots = 100;
  double grid_min_ratio = 1e-3;
  double tol = 1e-6;
  std::size_t max_sweeps = 1000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  MergeMode merge = MergeMode::kNormalizedScore;
  bool normalize_similarity = true;
  /// Adds a constant column to each piece's design before projecting.
  bool fit_intercept = true;

  void validate() const;
};

/// PCA width used on a piece of `piece_n` rows with `p` features.
std::size_t pca_dim_for(std::size_t p, std::size_t piece_n, const DetectorConfig& config);

/// Projected regression for one piece: PCA-reduced features (plus an
/// intercept column) define the projector, one-hot labels the targets.
struct PieceProblem {
  Projector projector;
  Matrix y_tilde;
};

PieceProblem build_piece_problem(const Dataset& dataset, const IndexList& instances,
                                 const DetectorConfig& config);

/// Outcome of one penalized-regression solve on a piece. Vectors are indexed
/// by slot (position in the piece's instance list).
struct PieceResult {
  bool ok = false;
  std::string diagnostic;
  double lambda_max = 0.0;
  std::vector<double> selecting_times;  ///< raw C_i
  std::vector<double> scores;           ///< C_i / lambda_max
  std::vector<double> residual_norms;   ///< |Y~_i|_2
};

PieceResult solve_piece(const Dataset& dataset, const IndexList& instances,
                        const DetectorConfig& config);

/// Solves every piece on a pool of `workers` threads. Results are stored by
/// piece index, so output does not depend on scheduling.
std::vector<PieceResult> solve_pieces_parallel(const Dataset& dataset,
                                               const std::vector<IndexList>& pieces,
                                               const DetectorConfig& config, std::size_t workers);

/// Prototypes (excluding prior_noisy) -> class groups -> pieces -> parallel
/// piece solves -> global ranking and selection.
NoiseReport detect(const Dataset& dataset, const DetectorConfig& config,
                   const IndexList& prior_noisy = {});

/// One solve over the whole dataset without splitting.
NoiseReport detect_whole(const Dataset& dataset, const DetectorConfig& config);

/// Split plan exactly as detect() builds it.
SplitPlan plan_split(const Dataset& dataset, const DetectorConfig& config,
                     const IndexList& prior_noisy = {});

/// Training-loop integration point: one call per epoch with fresh features.
struct EpochState {
  IndexList noisy_set;
  std::size_t epoch = 0;
  std::shared_ptr<const Dataset> dataset;
};

EpochState epoch_update(const EpochState& state, FeatureMatrix new_features,
                        const DetectorConfig& config);

}  // namespace shiftsel
