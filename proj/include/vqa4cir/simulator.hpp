#pragma once

// Seeded synthetic experiments for studying when reranking helps.
//
// A scenario stands in for a base retriever: each query gets a ranked list of
// corpus_size candidates with the target placed at a rank drawn from
// base_target_rank_dist, a QA set of K questions, a subset of images for the
// subset protocol, and a full answer matrix drawn from the simulated oracle.
// Everything is a pure function of the config.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vqa4cir/metrics.hpp"
#include "vqa4cir/oracle.hpp"
#include "vqa4cir/seeding.hpp"
#include "vqa4cir/types.hpp"

namespace vqa4cir {

/// Stream tag mixed into the scenario seed to obtain the oracle seed.
inline constexpr std::uint64_t kOracleSeedStream = 0x6f7261636c65ULL;

/// Categorical law over ranks 1..size(); weights[r - 1] is P(rank = r).
struct RankDistribution {
  std::vector<double> weights;

  static RankDistribution point(std::size_t rank);
  static RankDistribution uniform(std::size_t max_rank);
  /// P(r) proportional to (1 - p)^(r - 1) on 1..max_rank.
  static RankDistribution geometric(double p, std::size_t max_rank);

  std::size_t max_rank() const noexcept { return weights.size(); }
};

struct ScenarioConfig {
  std::size_t n_queries = 1000;
  std::size_t corpus_size = 200;
  RankDistribution base_target_rank_dist = RankDistribution::geometric(0.35, 200);
  /// P(K = 1), P(K = 2), P(K = 3).
  std::array<double, 3> k_questions_dist = {0.2, 0.5, 0.3};
  SimulatedOracleParams oracle{ProbabilityModel::beta_law(5.0, 1.0),
                               ProbabilityModel::beta_law(2.0, 2.0),
                               derive_seed(2024, kOracleSeedStream)};
  std::size_t subset_size = 5;
  std::uint64_t seed = 2024;

  /// Sets seed and derives the oracle seed from it.
  void set_seed(std::uint64_t new_seed);
  void validate() const;
};

struct ScenarioQuery {
  RankedList ranking;
  GroundTruth truth;
  QASet qa;
  AnswerMatrix matrix;

  friend bool operator==(const ScenarioQuery&, const ScenarioQuery&) = default;
};

struct Scenario {
  std::vector<ScenarioQuery> queries;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

Scenario generate_scenario(const ScenarioConfig& cfg);

struct ExperimentResult {
  EvalReport baseline;
  EvalReport reranked;
};

ExperimentResult run_experiment(const Scenario& scenario, const RerankParams& params);

struct SweepGrid {
  std::vector<double> alphas;
  std::vector<double> betas;
  /// 0 means "no reranking" (the baseline row of a top-C ablation).
  std::vector<std::size_t> top_cs;

  void validate() const;
};

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t top_c = 0;
  ExperimentResult result;
};

/// One experiment per grid cell on the same scenario, rows ordered by
/// (alpha, beta, top_c). Cells run on up to `threads` threads (0 = hardware).
std::vector<SweepRow> sweep(const Scenario& scenario, const SweepGrid& grid,
                            RerankMode mode = RerankMode::caption_wise, std::size_t threads = 0);

inline constexpr std::string_view kSweepCsvHeader =
    "alpha,beta,top_c,recall_at_1,recall_at_5,recall_at_10,recall_at_50,recall_subset_1,"
    "composite_average,baseline_recall_at_1";

std::string sweep_csv(std::span<const SweepRow> rows);

inline constexpr std::size_t kHistogramBins = 50;

struct Histogram {
  std::array<std::size_t, kHistogramBins> counts{};
  std::size_t total = 0;
  double sum = 0.0;

  void add(double value);
  double mean() const noexcept { return total ? sum / static_cast<double>(total) : 0.0; }
};

struct DistributionReport {
  Histogram target;
  Histogram nontarget;
};

/// p^A histograms of targets vs non-targets over every matrix row.
DistributionReport distribution_report(const Scenario& scenario);
std::string distribution_csv(const DistributionReport& report);

// --- JSON configuration ------------------------------------------------------
//
// {
//   "n_queries": 1000, "corpus_size": 200, "subset_size": 5, "seed": 2024,
//   "target_rank": {"geometric": {"p": 0.35}} | {"uniform": 20} | {"point": 1}
//                  | {"weights": [...]},
//   "k_questions": [0.2, 0.5, 0.3],
//   "oracle": {"target": {"beta": [5, 1]} | {"constant": 1.0}, "nontarget": ...},
//   "rerank": {"alpha": 20, "beta": 10, "top_c": 15, "mode": "caption"}
// }
// Missing fields fall back to the ScenarioConfig defaults. The oracle seed is
// derived from "seed".

ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
RerankParams rerank_params_from_json(const nlohmann::json& j);
/// {"alphas": [...], "betas": [...], "top_cs": [...]}
SweepGrid sweep_grid_from_json(const nlohmann::json& j);

}  // namespace vqa4cir
