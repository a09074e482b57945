#include "vqa4cir/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>
#include <tuple>

#include <boost/random/discrete_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

#include "vqa4cir/error.hpp"
#include "vqa4cir/rerank.hpp"
#include "vqa4cir/seeding.hpp"

namespace vqa4cir {

namespace {

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(jobs, 1));
}

// Runs fn(i) for i in [0, n) over `threads` workers with static striding.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = worker_count(threads, n);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
}

}  // namespace

// --- Rank distributions ----------------------------------------------------------

RankDistribution RankDistribution::point(std::size_t rank) {
  if (rank < 1) throw Error(ErrorKind::config, "point rank must be at least 1");
  RankDistribution d;
  d.weights.assign(rank, 0.0);
  d.weights.back() = 1.0;
  return d;
}

RankDistribution RankDistribution::uniform(std::size_t max_rank) {
  if (max_rank < 1) throw Error(ErrorKind::config, "uniform max rank must be at least 1");
  RankDistribution d;
  d.weights.assign(max_rank, 1.0 / static_cast<double>(max_rank));
  return d;
}

RankDistribution RankDistribution::geometric(double p, std::size_t max_rank) {
  if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorKind::config, "geometric p must lie in (0, 1]");
  if (max_rank < 1) throw Error(ErrorKind::config, "geometric max rank must be at least 1");
  RankDistribution d;
  d.weights.resize(max_rank);
  double w = 1.0;
  for (auto& x : d.weights) {
    x = w;
    w *= 1.0 - p;
  }
  const double total = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
  for (auto& x : d.weights) x /= total;
  return d;
}

// --- Scenario ----------------------------------------------------------------------

void ScenarioConfig::set_seed(std::uint64_t new_seed) {
  seed = new_seed;
  oracle.seed = derive_seed(new_seed, kOracleSeedStream);
}

void ScenarioConfig::validate() const {
  if (n_queries < 1) throw Error(ErrorKind::config, "n_queries must be at least 1");
  if (corpus_size < 1) throw Error(ErrorKind::config, "corpus_size must be at least 1");
  const auto& w = base_target_rank_dist.weights;
  if (w.empty()) throw Error(ErrorKind::config, "target rank distribution is empty");
  if (std::any_of(w.begin(), w.end(), [](double x) { return !(x >= 0.0); })) {
    throw Error(ErrorKind::config, "target rank weights must be non-negative");
  }
  if (std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) > 1e-9) {
    throw Error(ErrorKind::config, "target rank distribution must sum to 1");
  }
  if (corpus_size < base_target_rank_dist.max_rank()) {
    throw Error(ErrorKind::config,
                fmt::format("corpus_size {} is below the largest supported target rank {}",
                            corpus_size, base_target_rank_dist.max_rank()));
  }
  if (std::any_of(k_questions_dist.begin(), k_questions_dist.end(),
                  [](double x) { return !(x >= 0.0); }) ||
      std::abs(k_questions_dist[0] + k_questions_dist[1] + k_questions_dist[2] - 1.0) > 1e-9) {
    throw Error(ErrorKind::config, "question-count distribution must be non-negative and sum to 1");
  }
  if (subset_size < 2 || subset_size > corpus_size) {
    throw Error(ErrorKind::config, "subset_size must lie in [2, corpus_size]");
  }
  oracle.validate();
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Scenario scenario;
  scenario.queries.resize(cfg.n_queries);

  parallel_for(cfg.n_queries, 0, [&](std::size_t q) {
    std::mt19937_64 engine(derive_seed(cfg.seed, q));
    boost::random::discrete_distribution<std::size_t> rank_draw(
        cfg.base_target_rank_dist.weights.begin(), cfg.base_target_rank_dist.weights.end());
    boost::random::discrete_distribution<std::size_t> k_draw(cfg.k_questions_dist.begin(),
                                                             cfg.k_questions_dist.end());
    const std::size_t target_rank = rank_draw(engine) + 1;
    const std::size_t k_count = k_draw(engine) + 1;

    ScenarioQuery& out = scenario.queries[q];
    const std::string qid = fmt::format("q{:06}", q + 1);
    out.ranking.query_id = qid;
    out.ranking.candidates.reserve(cfg.corpus_size);
    for (std::size_t j = 1; j <= cfg.corpus_size; ++j) {
      out.ranking.candidates.push_back({fmt::format("{}/img{:05}", qid, j)});
    }
    out.truth.query_id = qid;
    out.truth.target = out.ranking.candidates[target_rank - 1];

    // Subset: the target plus distinct distractors, partial Fisher-Yates.
    std::vector<std::size_t> others;
    others.reserve(cfg.corpus_size - 1);
    for (std::size_t j = 0; j < cfg.corpus_size; ++j) {
      if (j != target_rank - 1) others.push_back(j);
    }
    std::vector<ImageRef> subset{out.truth.target};
    for (std::size_t i = 0; i + 1 < cfg.subset_size; ++i) {
      boost::random::uniform_int_distribution<std::size_t> pick(i, others.size() - 1);
      std::swap(others[i], others[pick(engine)]);
      subset.push_back(out.ranking.candidates[others[i]]);
    }
    std::sort(subset.begin(), subset.end());
    out.truth.subset = std::move(subset);

    out.qa.query_id = qid;
    for (std::size_t k = 1; k <= k_count; ++k) {
      out.qa.pairs.push_back({fmt::format("Does the image satisfy condition {}?", k), "yes"});
    }

    std::vector<std::string> ids;
    ids.reserve(cfg.corpus_size);
    for (const auto& c : out.ranking.candidates) ids.push_back(c.id);
    out.matrix = AnswerMatrix(qid, std::move(ids), k_count);
    for (std::size_t r = 0; r < cfg.corpus_size; ++r) {
      const bool is_target = r == target_rank - 1;
      for (std::size_t k = 0; k < k_count; ++k) {
        out.matrix.at(r, k) =
            simulated_oracle_sample(cfg.oracle, is_target, out.ranking.candidates[r], k + 1);
      }
    }
  });
  return scenario;
}

// --- Experiments -------------------------------------------------------------------------

namespace {

ExperimentResult evaluate(const Scenario& scenario, const RerankParams* params) {
  std::vector<RunRecord> baseline;
  baseline.reserve(scenario.queries.size());
  for (const auto& q : scenario.queries) baseline.push_back({q.ranking, q.truth});
  ExperimentResult result;
  result.baseline = cirr_summary(baseline);
  if (!params) {
    result.reranked = result.baseline;
    return result;
  }
  std::vector<RunRecord> reranked;
  reranked.reserve(scenario.queries.size());
  for (const auto& q : scenario.queries) {
    reranked.push_back({rerank(q.ranking, q.matrix, *params).ranking, q.truth});
  }
  result.reranked = cirr_summary(reranked);
  return result;
}

}  // namespace

ExperimentResult run_experiment(const Scenario& scenario, const RerankParams& params) {
  params.validate();
  if (scenario.queries.empty()) throw Error(ErrorKind::invalid_argument, "empty scenario");
  return evaluate(scenario, &params);
}

void SweepGrid::validate() const {
  if (alphas.empty() || betas.empty() || top_cs.empty()) {
    throw Error(ErrorKind::config, "sweep grid axes must be non-empty");
  }
  for (double a : alphas) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw Error(ErrorKind::config, "alpha must be non-negative");
  }
  for (double b : betas) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw Error(ErrorKind::config, "beta must be non-negative");
  }
}

std::vector<SweepRow> sweep(const Scenario& scenario, const SweepGrid& grid, RerankMode mode,
                            std::size_t threads) {
  grid.validate();
  if (scenario.queries.empty()) throw Error(ErrorKind::invalid_argument, "empty scenario");
  std::vector<SweepRow> rows;
  for (double a : grid.alphas) {
    for (double b : grid.betas) {
      for (std::size_t c : grid.top_cs) rows.push_back({a, b, c, {}});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& x, const SweepRow& y) {
    return std::tie(x.alpha, x.beta, x.top_c) < std::tie(y.alpha, y.beta, y.top_c);
  });
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    SweepRow& row = rows[i];
    if (row.top_c == 0) {
      row.result = evaluate(scenario, nullptr);
    } else {
      const RerankParams params{row.alpha, row.beta, row.top_c, mode};
      row.result = run_experiment(scenario, params);
    }
  });
  return rows;
}

namespace {

// RFC 4180: quote fields holding separators, quotes or line breaks.
std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out(kSweepCsvHeader);
  out += '\n';
  for (const auto& row : rows) {
    const EvalReport& r = row.result.reranked;
    const std::vector<std::string> fields = {
        fmt::format("{}", row.alpha),
        fmt::format("{}", row.beta),
        fmt::format("{}", row.top_c),
        fmt::format("{:.6f}", r.recall_at.at(1)),
        fmt::format("{:.6f}", r.recall_at.at(5)),
        fmt::format("{:.6f}", r.recall_at.at(10)),
        fmt::format("{:.6f}", r.recall_at.at(50)),
        fmt::format("{:.6f}", r.recall_subset_at.value().at(1)),
        fmt::format("{:.6f}", r.composite_average.value()),
        fmt::format("{:.6f}", row.result.baseline.recall_at.at(1)),
    };
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += csv_field(fields[i]);
    }
    out += '\n';
  }
  return out;
}

// --- Distribution report ------------------------------------------------------------------

void Histogram::add(double value) {
  const auto bin = std::min<std::size_t>(
      static_cast<std::size_t>(std::clamp(value, 0.0, 1.0) * static_cast<double>(kHistogramBins)),
      kHistogramBins - 1);
  ++counts[bin];
  ++total;
  sum += value;
}

DistributionReport distribution_report(const Scenario& scenario) {
  if (scenario.queries.empty()) throw Error(ErrorKind::invalid_argument, "empty scenario");
  DistributionReport report;
  for (const auto& q : scenario.queries) {
    for (std::size_t r = 0; r < q.matrix.rows(); ++r) {
      const double p_a = consistency_score(q.matrix.row(r));
      if (q.matrix.candidate_ids[r] == q.truth.target.id) {
        report.target.add(p_a);
      } else {
        report.nontarget.add(p_a);
      }
    }
  }
  return report;
}

std::string distribution_csv(const DistributionReport& report) {
  std::string out = "bin_lo,bin_hi,target_count,nontarget_count\n";
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    const double lo = static_cast<double>(b) / kHistogramBins;
    const double hi = static_cast<double>(b + 1) / kHistogramBins;
    out += fmt::format("{:.2f},{:.2f},{},{}\n", lo, hi, report.target.counts[b],
                       report.nontarget.counts[b]);
  }
  return out;
}

// --- JSON configuration ----------------------------------------------------------------------

namespace {

template <typename T>
T get_field(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::config, fmt::format("config field '{}' has the wrong type", key));
  }
}

ProbabilityModel model_from_json(const nlohmann::json& j, const char* which) {
  if (j.is_array() && j.size() == 2) {
    return ProbabilityModel::beta_law(j[0].get<double>(), j[1].get<double>());
  }
  if (j.is_object() && j.contains("beta") && j["beta"].is_array() && j["beta"].size() == 2) {
    return ProbabilityModel::beta_law(j["beta"][0].get<double>(), j["beta"][1].get<double>());
  }
  if (j.is_object() && j.contains("constant") && j["constant"].is_number()) {
    return ProbabilityModel::constant(j["constant"].get<double>());
  }
  throw Error(ErrorKind::config,
              fmt::format("oracle '{}' must be [a, b], {{\"beta\": [a, b]}} or {{\"constant\": p}}",
                          which));
}

RankDistribution rank_dist_from_json(const nlohmann::json& j, std::size_t corpus_size) {
  if (!j.is_object() || j.size() != 1) {
    throw Error(ErrorKind::config, "target_rank must have exactly one of point/uniform/geometric/weights");
  }
  if (j.contains("point")) return RankDistribution::point(j["point"].get<std::size_t>());
  if (j.contains("uniform")) return RankDistribution::uniform(j["uniform"].get<std::size_t>());
  if (j.contains("geometric")) {
    const auto& g = j["geometric"];
    return RankDistribution::geometric(g.at("p").get<double>(),
                                       get_field<std::size_t>(g, "max_rank", corpus_size));
  }
  if (j.contains("weights")) {
    return RankDistribution{j["weights"].get<std::vector<double>>()};
  }
  throw Error(ErrorKind::config, "unknown target_rank distribution");
}

}  // namespace

ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::config, "scenario config must be an object");
  ScenarioConfig cfg;
  try {
    cfg.n_queries = get_field<std::size_t>(j, "n_queries", cfg.n_queries);
    cfg.corpus_size = get_field<std::size_t>(j, "corpus_size", cfg.corpus_size);
    cfg.subset_size = get_field<std::size_t>(j, "subset_size", cfg.subset_size);
    cfg.base_target_rank_dist = j.contains("target_rank")
                                    ? rank_dist_from_json(j["target_rank"], cfg.corpus_size)
                                    : RankDistribution::geometric(0.35, cfg.corpus_size);
    if (j.contains("k_questions")) {
      const auto k = j["k_questions"].get<std::vector<double>>();
      if (k.size() != 3) throw Error(ErrorKind::config, "k_questions needs three probabilities");
      cfg.k_questions_dist = {k[0], k[1], k[2]};
    }
    if (j.contains("oracle")) {
      const auto& o = j["oracle"];
      if (o.contains("target")) cfg.oracle.target = model_from_json(o["target"], "target");
      if (o.contains("nontarget")) {
        cfg.oracle.nontarget = model_from_json(o["nontarget"], "nontarget");
      }
    }
    cfg.set_seed(get_field<std::uint64_t>(j, "seed", cfg.seed));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, fmt::format("scenario config: {}", e.what()));
  }
  cfg.validate();
  return cfg;
}

RerankParams rerank_params_from_json(const nlohmann::json& j) {
  RerankParams params;
  if (!j.is_object()) throw Error(ErrorKind::config, "rerank parameters must be an object");
  params.alpha = get_field<double>(j, "alpha", params.alpha);
  params.beta = get_field<double>(j, "beta", params.beta);
  params.top_c = get_field<std::size_t>(j, "top_c", params.top_c);
  if (j.contains("mode")) {
    const auto mode = parse_rerank_mode(get_field<std::string>(j, "mode", "caption"));
    if (!mode) throw Error(ErrorKind::config, "mode must be caption or question");
    params.mode = *mode;
  }
  params.validate();
  return params;
}

SweepGrid sweep_grid_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::config, "sweep grid must be an object");
  SweepGrid grid;
  try {
    grid.alphas = j.at("alphas").get<std::vector<double>>();
    grid.betas = j.at("betas").get<std::vector<double>>();
    grid.top_cs = j.at("top_cs").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, fmt::format("sweep grid: {}", e.what()));
  }
  grid.validate();
  return grid;
}

}  // namespace vqa4cir
