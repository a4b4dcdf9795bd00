#include "shiftsel/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "shiftsel/errors.hpp"
#include "shiftsel/seeding.hpp"

namespace shiftsel {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void canonicalize(ClassGroups& groups) {
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

double group_max(const Matrix& s, const std::vector<int>& group) {
  double best = kNegInf;
  for (std::size_t a = 0; a < group.size(); ++a) {
    for (std::size_t b = a + 1; b < group.size(); ++b) best = std::max(best, s(group[a], group[b]));
  }
  return best;
}

double group_sum(const Matrix& s, const std::vector<int>& group) {
  double total = 0.0;
  for (std::size_t a = 0; a < group.size(); ++a) {
    for (std::size_t b = a + 1; b < group.size(); ++b) total += s(group[a], group[b]);
  }
  return total;
}

// Lexicographic (max intra similarity, total intra similarity).
struct Score {
  double max;
  double sum;
  bool better_than(const Score& o) const {
    constexpr double eps = 1e-12;
    if (max < o.max - eps) return true;
    if (max > o.max + eps) return false;
    return sum < o.sum - eps;
  }
};

Score score_of(const Matrix& s, const ClassGroups& groups) {
  Score out{kNegInf, 0.0};
  for (const auto& g : groups) {
    out.max = std::max(out.max, group_max(s, g));
    out.sum += group_sum(s, g);
  }
  return out;
}

void refine_by_swaps(const Matrix& s, ClassGroups& groups) {
  Score current = score_of(s, groups);
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t gi = 0; gi < groups.size() && !improved; ++gi) {
      for (std::size_t gj = gi + 1; gj < groups.size() && !improved; ++gj) {
        for (std::size_t a = 0; a < groups[gi].size() && !improved; ++a) {
          for (std::size_t b = 0; b < groups[gj].size() && !improved; ++b) {
            std::swap(groups[gi][a], groups[gj][b]);
            const Score candidate = score_of(s, groups);
            if (candidate.better_than(current)) {
              current = candidate;
              improved = true;
            } else {
              std::swap(groups[gi][a], groups[gj][b]);
            }
          }
        }
      }
    }
  }
}

// Exhaustive branch and bound over partitions with the same group sizes,
// minimizing the maximum intra-group similarity.
class ExactGrouping {
 public:
  ExactGrouping(const Matrix& s, std::size_t group_size)
      : s_(s), c_(static_cast<int>(s.rows())), g_(static_cast<int>(group_size)) {
    const int groups = (c_ + g_ - 1) / g_;
    remainder_ = c_ - (groups - 1) * g_;
  }

  bool improve(ClassGroups& best) {
    best_max_ = max_intra_group_similarity(s_, best);
    found_ = false;
    std::vector<bool> used(static_cast<std::size_t>(c_), false);
    ClassGroups partial;
    recurse(used, partial, /*remainder_open=*/remainder_ < g_, kNegInf);
    if (found_) best = best_groups_;
    return found_;
  }

 private:
  void recurse(std::vector<bool>& used, ClassGroups& partial, bool remainder_open, double current) {
    int first = -1;
    for (int k = 0; k < c_; ++k) {
      if (!used[static_cast<std::size_t>(k)]) {
        first = k;
        break;
      }
    }
    if (first < 0) {
      if (current < best_max_ - 1e-12) {
        best_max_ = current;
        best_groups_ = partial;
        found_ = true;
      }
      return;
    }
    int free_count = 0;
    for (bool u : used) free_count += u ? 0 : 1;
    std::vector<std::pair<int, bool>> options;
    if (free_count - g_ >= (remainder_open ? remainder_ : 0)) options.emplace_back(g_, false);
    if (remainder_open) options.emplace_back(remainder_, true);
    for (auto [size, is_remainder] : options) {
      std::vector<int> group{first};
      used[static_cast<std::size_t>(first)] = true;
      choose(used, partial, group, first + 1, size, remainder_open && !is_remainder, current);
      used[static_cast<std::size_t>(first)] = false;
    }
  }

  void choose(std::vector<bool>& used, ClassGroups& partial, std::vector<int>& group, int start,
              int size, bool remainder_open, double current) {
    if (static_cast<int>(group.size()) == size) {
      partial.push_back(group);
      recurse(used, partial, remainder_open, current);
      partial.pop_back();
      return;
    }
    for (int k = start; k < c_; ++k) {
      if (used[static_cast<std::size_t>(k)]) continue;
      double worst = current;
      for (int m : group) worst = std::max(worst, s_(m, k));
      if (worst >= best_max_ - 1e-12) continue;
      used[static_cast<std::size_t>(k)] = true;
      group.push_back(k);
      choose(used, partial, group, k + 1, size, remainder_open, worst);
      group.pop_back();
      used[static_cast<std::size_t>(k)] = false;
    }
  }

  const Matrix& s_;
  int c_;
  int g_;
  int remainder_ = 0;
  double best_max_ = 0.0;
  bool found_ = false;
  ClassGroups best_groups_;
};

}  // namespace

PrototypeSet class_prototypes(const FeatureMatrix& features, std::span<const int> raw_labels,
                              int classes, const IndexList& noisy_set) {
  const std::size_t n = features.rows();
  if (raw_labels.size() != n) throw DomainError("label count differs from feature rows");
  std::vector<bool> excluded(n, false);
  for (std::size_t idx : noisy_set) {
    if (idx >= n) throw DomainError("noisy index " + std::to_string(idx) + " out of range");
    excluded[idx] = true;
  }
  PrototypeSet out{Matrix::Zero(classes, features.data().cols()),
                   std::vector<std::size_t>(static_cast<std::size_t>(classes), 0),
                   std::vector<bool>(static_cast<std::size_t>(classes), false)};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = raw_labels[i];
    if (label < 0 || label >= classes) throw DomainError("label " + std::to_string(label) + " out of range");
    if (excluded[i]) continue;
    out.prototypes.row(label) += features.data().row(static_cast<Eigen::Index>(i));
    ++out.counts[static_cast<std::size_t>(label)];
  }
  for (int k = 0; k < classes; ++k) {
    const std::size_t count = out.counts[static_cast<std::size_t>(k)];
    if (count == 0) {
      out.empty[static_cast<std::size_t>(k)] = true;
    } else {
      out.prototypes.row(k) /= static_cast<double>(count);
    }
  }
  return out;
}

Matrix similarity_matrix(const PrototypeSet& prototypes, bool normalize) {
  Matrix p = prototypes.prototypes;
  if (normalize) {
    for (Eigen::Index k = 0; k < p.rows(); ++k) {
      const double norm = p.row(k).norm();
      if (norm > 0.0) p.row(k) /= norm;
    }
  }
  Matrix s = p * p.transpose();
  return 0.5 * (s + s.transpose());
}

double max_intra_group_similarity(const Matrix& similarity, const ClassGroups& groups) {
  double best = kNegInf;
  for (const auto& g : groups) best = std::max(best, group_max(similarity, g));
  return best;
}

ClassGroups greedy_group_classes(const Matrix& similarity, std::size_t group_size) {
  if (group_size < 1) throw DomainError("group_size must be at least 1");
  if (similarity.rows() != similarity.cols()) throw DomainError("similarity matrix must be square");
  const int c = static_cast<int>(similarity.rows());
  std::vector<int> unassigned(static_cast<std::size_t>(c));
  for (int k = 0; k < c; ++k) unassigned[static_cast<std::size_t>(k)] = k;

  ClassGroups groups;
  while (!unassigned.empty()) {
    int seed = -1;
    double seed_score = 0.0;
    for (int k : unassigned) {
      double score = kNegInf;
      for (int j : unassigned) {
        if (j != k) score = std::max(score, similarity(k, j));
      }
      if (seed < 0 || score > seed_score) {
        seed = k;
        seed_score = score;
      }
    }
    std::vector<int> group{seed};
    std::erase(unassigned, seed);
    while (group.size() < group_size && !unassigned.empty()) {
      int pick = -1;
      double pick_score = 0.0;
      for (int k : unassigned) {
        double worst = kNegInf;
        for (int m : group) worst = std::max(worst, similarity(k, m));
        if (pick < 0 || worst < pick_score) {
          pick = k;
          pick_score = worst;
        }
      }
      group.push_back(pick);
      std::erase(unassigned, pick);
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

ClassGroups group_classes(const Matrix& similarity, std::size_t group_size) {
  ClassGroups groups = greedy_group_classes(similarity, group_size);
  if (groups.size() > 1) {
    refine_by_swaps(similarity, groups);
    if (similarity.rows() <= kExactGroupingClasses && group_size > 1) {
      ExactGrouping(similarity, group_size).improve(groups);
    }
  }
  canonicalize(groups);
  return groups;
}

SplitPlan make_pieces(const ClassGroups& groups, std::span<const int> raw_labels,
                      std::size_t per_class, std::uint64_t seed) {
  if (per_class < 1) throw DomainError("per_class must be at least 1");
  int classes = 0;
  for (const auto& g : groups) {
    for (int k : g) classes = std::max(classes, k + 1);
  }
  std::vector<IndexList> members(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    const int label = raw_labels[i];
    if (label < 0) throw DomainError("negative label at index " + std::to_string(i));
    if (label < classes) members[static_cast<std::size_t>(label)].push_back(i);
  }

  SplitPlan plan;
  plan.class_groups = groups;
  plan.per_class = per_class;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& group = groups[gi];
    std::mt19937_64 rng(derive_seed(seed, "split-pieces", gi));
    std::size_t largest = 0;
    for (int k : group) {
      if (members[static_cast<std::size_t>(k)].empty()) {
        throw DomainError("class " + std::to_string(k) + " has no instances");
      }
      largest = std::max(largest, members[static_cast<std::size_t>(k)].size());
    }
    const std::size_t piece_count = (largest + per_class - 1) / per_class;
    std::vector<IndexList> group_pieces(piece_count);
    for (int k : group) {
      IndexList shuffled = members[static_cast<std::size_t>(k)];
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      std::vector<IndexList> slots(piece_count);
      for (std::size_t t = 0; t < shuffled.size(); ++t) slots[t % piece_count].push_back(shuffled[t]);
      for (std::size_t piece = 0; piece < piece_count; ++piece) {
        IndexList& slot = slots[piece];
        while (slot.size() < per_class) {
          IndexList fresh;
          for (std::size_t idx : shuffled) {
            if (std::find(slot.begin(), slot.end(), idx) == slot.end()) fresh.push_back(idx);
          }
          const IndexList& pool = fresh.empty() ? shuffled : fresh;
          std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
          slot.push_back(pool[pick(rng)]);
        }
        group_pieces[piece].insert(group_pieces[piece].end(), slot.begin(), slot.end());
      }
    }
    for (auto& piece : group_pieces) {
      plan.pieces.push_back(std::move(piece));
      plan.piece_group.push_back(gi);
    }
  }

  std::map<std::size_t, std::size_t> occurrences;
  for (const auto& piece : plan.pieces) {
    for (std::size_t idx : piece) ++occurrences[idx];
  }
  for (const auto& [idx, count] : occurrences) {
    if (count > 1) plan.oversample_log[idx] = count;
  }
  return plan;
}

nlohmann::json split_plan_to_json(const SplitPlan& plan, std::span<const std::uint64_t> instance_ids) {
  using nlohmann::json;
  json doc;
  doc["per_class"] = plan.per_class;
  doc["class_groups"] = plan.class_groups;
  json pieces = json::array();
  for (std::size_t k = 0; k < plan.pieces.size(); ++k) {
    pieces.push_back({{"group", plan.piece_group[k]}, {"instances", plan.pieces[k]}});
  }
  doc["pieces"] = std::move(pieces);
  json log = json::array();
  for (const auto& [idx, count] : plan.oversample_log) {
    const std::uint64_t id = instance_ids.empty() ? idx : instance_ids[idx];
    log.push_back({{"instance", id}, {"count", count}});
  }
  doc["oversample_log"] = std::move(log);
  return doc;
}

}  // namespace shiftsel
