#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <json.hpp>

#include "shiftsel/data_model.hpp"

namespace shiftsel {

/// Per-class mean feature over instances not currently flagged noisy.
struct PrototypeSet {
  Matrix prototypes;                ///< c x p, one row per class
  std::vector<std::size_t> counts;  ///< instances averaged per class
  std::vector<bool> empty;          ///< class had no clean instance; prototype is zero
};

PrototypeSet class_prototypes(const FeatureMatrix& features, std::span<const int> raw_labels,
                              int classes, const IndexList& noisy_set);

/// s(i, j) = p_i . p_j, optionally after l2-normalizing each prototype.
Matrix similarity_matrix(const PrototypeSet& prototypes, bool normalize);

using ClassGroups = std::vector<std::vector<int>>;

/// Largest similarity between two classes sharing a group (-inf when no
/// group holds two classes).
double max_intra_group_similarity(const Matrix& similarity, const ClassGroups& groups);

/// Partitions classes into ceil(c / group_size) groups (all full but the
/// last) so that similar classes land in different groups.
///
/// Starts from the greedy construction: seed each group with the unassigned
/// class whose largest similarity to another unassigned class is highest,
/// then repeatedly add the unassigned class whose worst similarity to the
/// current members is lowest. The result is improved by pairwise swaps
/// between groups and, for at most kExactGroupingClasses classes, replaced by
/// an exhaustive min-max search. Ties go to smaller class indices.
ClassGroups group_classes(const Matrix& similarity, std::size_t group_size);

/// The plain greedy construction, without refinement.
ClassGroups greedy_group_classes(const Matrix& similarity, std::size_t group_size);

inline constexpr int kExactGroupingClasses = 12;

struct SplitPlan {
  ClassGroups class_groups;
  std::vector<IndexList> pieces;           ///< instance indices per piece, grouped by class
  std::vector<std::size_t> piece_group;    ///< group index of each piece
  std::size_t per_class = 0;
  std::map<std::size_t, std::size_t> oversample_log;  ///< instance index -> occurrences (> 1 only)
};

/// Cuts each group into class-balanced pieces of per_class instances per
/// class. Class lists are shuffled, dealt round-robin over
/// ceil(max class count / per_class) pieces, and short classes are topped up
/// by uniform re-sampling (preferring instances not already in that piece).
SplitPlan make_pieces(const ClassGroups& groups, std::span<const int> raw_labels,
                      std::size_t per_class, std::uint64_t seed);

/// `instance_ids` (optional) relabels the oversample log keys.
nlohmann::json split_plan_to_json(const SplitPlan& plan,
                                  std::span<const std::uint64_t> instance_ids = {});

}  // namespace shiftsel
