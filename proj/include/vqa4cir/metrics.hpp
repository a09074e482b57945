#pragma once

// Retrieval metrics. Values are fractions in [0, 1] internally; percentages
// with two decimals appear only in the formatted table.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqa4cir/types.hpp"

namespace vqa4cir {

struct RunRecord {
  RankedList final_ranking;
  GroundTruth truth;

  const std::string& query_id() const noexcept { return final_ranking.query_id; }
  /// 1-based rank of the target; nullopt when it is absent from the list.
  std::optional<std::size_t> target_rank() const;
  /// Target's rank after restricting the list to the subset; requires a subset.
  std::optional<std::size_t> target_subset_rank() const;
};

struct EvalReport {
  std::map<std::size_t, double> recall_at;
  std::optional<std::map<std::size_t, double>> recall_subset_at;
  std::optional<double> composite_average;
  std::size_t n_queries = 0;
  /// Per-category recalls (Fashion-IQ style); empty otherwise.
  std::map<std::string, std::map<std::size_t, double>> categories;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

double recall_at_k(std::span<const RunRecord> runs, std::size_t k);
double recall_subset_at_k(std::span<const RunRecord> runs, std::size_t k);

/// (R@5 + Rsub@1) / 2, in whatever unit the operands use.
double cirr_composite_average(double recall_at_5, double recall_subset_at_1);

/// R@{1,5,10,50}, Rsub@{1,2,3} and the composite average.
EvalReport cirr_summary(std::span<const RunRecord> runs);

/// R@{1,5,10,50} only; no subset needed.
EvalReport recall_summary(std::span<const RunRecord> runs);

struct CategoryRecall {
  std::string category;
  double recall_at_10 = 0.0;
  double recall_at_50 = 0.0;
};

/// Cross-category means of R@10 and R@50 plus the mean of all cells.
EvalReport fashioniq_summary_from_recalls(std::span<const CategoryRecall> cells);

EvalReport fashioniq_summary(const std::map<std::string, std::vector<RunRecord>>& per_category);

nlohmann::ordered_json to_json(const EvalReport& report);
/// Aligned plain-text table, percentages with two decimals.
std::string format_table(const EvalReport& report);

}  // namespace vqa4cir
