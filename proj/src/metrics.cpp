#include "vqa4cir/metrics.hpp"

#include <algorithm>
#include <unordered_set>

#include <fmt/format.h>

#include "vqa4cir/error.hpp"

namespace vqa4cir {

std::optional<std::size_t> RunRecord::target_rank() const {
  const auto& c = final_ranking.candidates;
  auto it = std::find(c.begin(), c.end(), truth.target);
  if (it == c.end()) return std::nullopt;
  return static_cast<std::size_t>(it - c.begin()) + 1;
}

std::optional<std::size_t> RunRecord::target_subset_rank() const {
  if (!truth.subset) {
    throw Error(ErrorKind::validation,
                fmt::format("subset required for query '{}'", truth.query_id));
  }
  std::unordered_set<std::string> members;
  for (const auto& m : *truth.subset) members.insert(m.id);
  std::size_t rank = 0;
  for (const auto& image : final_ranking.candidates) {
    if (!members.contains(image.id)) continue;
    ++rank;
    if (image == truth.target) return rank;
  }
  return std::nullopt;
}

namespace {

void require_runs(std::span<const RunRecord> runs, std::size_t k) {
  if (k < 1) throw Error(ErrorKind::invalid_argument, "k must be at least 1");
  if (runs.empty()) throw Error(ErrorKind::invalid_argument, "no runs to evaluate");
}

}  // namespace

double recall_at_k(std::span<const RunRecord> runs, std::size_t k) {
  require_runs(runs, k);
  std::size_t hits = 0;
  for (const auto& run : runs) {
    const auto rank = run.target_rank();
    if (rank && *rank <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(runs.size());
}

double recall_subset_at_k(std::span<const RunRecord> runs, std::size_t k) {
  require_runs(runs, k);
  std::size_t hits = 0;
  for (const auto& run : runs) {
    const auto rank = run.target_subset_rank();
    if (rank && *rank <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(runs.size());
}

double cirr_composite_average(double recall_at_5, double recall_subset_at_1) {
  return (recall_at_5 + recall_subset_at_1) / 2.0;
}

EvalReport recall_summary(std::span<const RunRecord> runs) {
  EvalReport report;
  report.n_queries = runs.size();
  for (std::size_t k : {1, 5, 10, 50}) report.recall_at[k] = recall_at_k(runs, k);
  return report;
}

EvalReport cirr_summary(std::span<const RunRecord> runs) {
  EvalReport report = recall_summary(runs);
  std::map<std::size_t, double> subset;
  for (std::size_t k : {1, 2, 3}) subset[k] = recall_subset_at_k(runs, k);
  report.composite_average = cirr_composite_average(report.recall_at.at(5), subset.at(1));
  report.recall_subset_at = std::move(subset);
  return report;
}

EvalReport fashioniq_summary_from_recalls(std::span<const CategoryRecall> cells) {
  if (cells.empty()) throw Error(ErrorKind::invalid_argument, "no categories");
  EvalReport report;
  double sum10 = 0.0;
  double sum50 = 0.0;
  for (const auto& c : cells) {
    sum10 += c.recall_at_10;
    sum50 += c.recall_at_50;
    report.categories[c.category] = {{10, c.recall_at_10}, {50, c.recall_at_50}};
  }
  const double n = static_cast<double>(cells.size());
  report.recall_at[10] = sum10 / n;
  report.recall_at[50] = sum50 / n;
  report.composite_average = (sum10 + sum50) / (2.0 * n);
  return report;
}

EvalReport fashioniq_summary(const std::map<std::string, std::vector<RunRecord>>& per_category) {
  if (per_category.empty()) throw Error(ErrorKind::invalid_argument, "no categories");
  std::vector<CategoryRecall> cells;
  std::size_t total = 0;
  for (const auto& [name, runs] : per_category) {
    if (runs.empty()) {
      throw Error(ErrorKind::invalid_argument, fmt::format("empty category '{}'", name));
    }
    cells.push_back({name, recall_at_k(runs, 10), recall_at_k(runs, 50)});
    total += runs.size();
  }
  EvalReport report = fashioniq_summary_from_recalls(cells);
  report.n_queries = total;
  return report;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["n_queries"] = report.n_queries;
  auto recall_map = [](const std::map<std::size_t, double>& m) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m) out[std::to_string(k)] = v;
    return out;
  };
  j["recall_at"] = recall_map(report.recall_at);
  if (report.recall_subset_at) j["recall_subset_at"] = recall_map(*report.recall_subset_at);
  if (report.composite_average) j["composite_average"] = *report.composite_average;
  if (!report.categories.empty()) {
    nlohmann::ordered_json cats = nlohmann::ordered_json::object();
    for (const auto& [name, m] : report.categories) cats[name] = recall_map(m);
    j["categories"] = std::move(cats);
  }
  return j;
}

std::string format_table(const EvalReport& report) {
  std::vector<std::pair<std::string, double>> columns;
  for (const auto& [name, m] : report.categories) {
    for (const auto& [k, v] : m) columns.emplace_back(fmt::format("{}:R@{}", name, k), v);
  }
  for (const auto& [k, v] : report.recall_at) columns.emplace_back(fmt::format("R@{}", k), v);
  if (report.recall_subset_at) {
    for (const auto& [k, v] : *report.recall_subset_at) {
      columns.emplace_back(fmt::format("Rsub@{}", k), v);
    }
  }
  if (report.composite_average) columns.emplace_back("Avg", *report.composite_average);

  std::string header;
  std::string values;
  for (const auto& [name, v] : columns) {
    const std::string cell = fmt::format("{:.2f}", v * 100.0);
    const std::size_t width = std::max(name.size(), cell.size()) + 2;
    header += fmt::format("{:>{}}", name, width);
    values += fmt::format("{:>{}}", cell, width);
  }
  return fmt::format("{}\n{}\n(n = {})\n", header, values, report.n_queries);
}

}  // namespace vqa4cir
