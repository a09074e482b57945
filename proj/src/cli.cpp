#include "vqa4cir/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "vqa4cir/dataset_io.hpp"
#include "vqa4cir/error.hpp"
#include "vqa4cir/metrics.hpp"
#include "vqa4cir/oracle.hpp"
#include "vqa4cir/rerank.hpp"
#include "vqa4cir/simulator.hpp"

namespace vqa4cir::cli {

namespace {

constexpr const char* kSeedEnv = "VQA4CIR_SEED";

struct RerankOptions {
  std::string candidates;
  std::string qa;
  std::string probs;
  std::string oracle_url;
  double alpha = 20.0;
  double beta = 10.0;
  std::size_t top_c = 70;
  std::string mode = "caption";
  std::string output;
  long timeout_ms = 30000;
  std::size_t max_in_flight = 8;
};

struct EvalOptions {
  std::string run;
  std::string truth;
  bool subset = false;
  std::string format = "table";
};

struct LintOptions {
  std::string qa;
  std::string captions;
  bool stats = false;
};

struct SimulateOptions {
  std::string config;
  std::string grid;
  std::string output;
  std::string histogram;
  std::size_t threads = 0;
};

std::optional<std::uint64_t> seed_override() {
  const char* env = std::getenv(kSeedEnv);
  if (!env || !*env) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used, 10);
    if (used != std::string_view(env).size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::config, fmt::format("{} must be an unsigned integer", kSeedEnv));
  }
}

nlohmann::json load_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config,
                fmt::format("{}: malformed JSON at byte {}: {}", path, e.byte, e.what()));
  }
}

RerankParams make_params(const RerankOptions& o) {
  const auto mode = parse_rerank_mode(o.mode);
  if (!mode) throw Error(ErrorKind::config, "mode must be caption or question");
  RerankParams params{o.alpha, o.beta, o.top_c, *mode};
  params.validate();
  return params;
}

void header(std::ostream& err, std::string_view command, const std::string& details) {
  err << fmt::format("# vqa4cir {} {} {}\n", kVersion, command, details);
}

ExitStatus run_rerank(const RerankOptions& o, std::ostream& err) {
  const RerankParams params = make_params(o);
  std::unique_ptr<AnswerOracle> oracle;
  std::string source;
  if (!o.probs.empty()) {
    oracle = std::make_unique<FileOracle>(FileOracle::from_file(o.probs));
    source = "probs=" + o.probs;
  } else {
    oracle = std::make_unique<HttpOracle>(o.oracle_url, std::chrono::milliseconds(o.timeout_ms),
                                          o.max_in_flight);
    source = "oracle_url=" + o.oracle_url;
  }
  header(err, "rerank",
         fmt::format("seed=none alpha={} beta={} top_c={} mode={} {}", params.alpha, params.beta,
                     params.top_c, to_string(params.mode), source));

  const auto lists = load_candidates(o.candidates);
  const auto qa_sets = load_qa_instructions(o.qa);
  std::unordered_map<std::string, const QASet*> qa_by_query;
  for (const auto& qa : qa_sets) qa_by_query.emplace(qa.query_id, &qa);

  std::vector<RerankedList> out;
  out.reserve(lists.size());
  for (const auto& list : lists) {
    auto it = qa_by_query.find(list.query_id);
    if (it == qa_by_query.end()) {
      throw Error(ErrorKind::validation, fmt::format("no QA set for query '{}'", list.query_id));
    }
    const AnswerMatrix matrix =
        build_answer_matrix(*oracle, list, *it->second, params.top_c, o.max_in_flight);
    out.push_back(rerank(list, matrix, params));
  }
  write_reranked(o.output, out);
  err << fmt::format("reranked {} queries -> {}\n", out.size(), o.output);
  return ExitStatus::success;
}

ExitStatus run_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  if (o.format != "json" && o.format != "table") {
    throw Error(ErrorKind::config, "format must be json or table");
  }
  header(err, "eval", fmt::format("seed=none run={} truth={} subset={}", o.run, o.truth, o.subset));
  const auto lists = load_candidates(o.run);
  const auto truths = load_ground_truth(o.truth);
  std::unordered_map<std::string, const RankedList*> by_query;
  for (const auto& l : lists) by_query.emplace(l.query_id, &l);

  std::vector<RunRecord> runs;
  runs.reserve(truths.size());
  for (const auto& t : truths) {
    auto it = by_query.find(t.query_id);
    if (it == by_query.end()) {
      throw Error(ErrorKind::validation, fmt::format("no ranking for query '{}'", t.query_id));
    }
    runs.push_back({*it->second, t});
  }
  if (runs.empty()) throw Error(ErrorKind::validation, "ground truth file is empty");
  const EvalReport report = o.subset ? cirr_summary(runs) : recall_summary(runs);
  if (o.format == "json") {
    out << to_json(report).dump(2) << '\n';
  } else {
    out << format_table(report);
  }
  return ExitStatus::success;
}

ExitStatus run_lint(const LintOptions& o, std::ostream& out, std::ostream& err) {
  header(err, "lint", fmt::format("seed=none qa={} captions={}", o.qa,
                                  o.captions.empty() ? "none" : o.captions));
  const auto sets = load_qa_instructions(o.qa);
  std::map<std::string, std::string> captions;
  if (!o.captions.empty()) captions = load_captions(o.captions);

  std::size_t count = 0;
  for (const auto& qa : sets) {
    std::optional<std::string_view> caption;
    if (!o.captions.empty()) {
      auto it = captions.find(qa.query_id);
      if (it != captions.end()) caption = it->second;
    }
    for (const auto& d : lint_qa_set(qa, caption)) {
      out << fmt::format("{}\tk={}\t{}\t{}\t{}\n", d.query_id, d.question_index,
                         to_string(d.severity), d.code, d.message);
      ++count;
    }
  }
  if (o.stats) {
    const QaStats s = qa_stats(sets);
    err << fmt::format("sets={} pairs={} binary_answers={}\n", s.sets, s.pairs, s.binary_answers);
    for (const auto& [k, n] : s.sets_by_question_count) err << fmt::format("  K={}: {}\n", k, n);
  }
  err << fmt::format("{} diagnostics over {} QA sets\n", count, sets.size());
  return ExitStatus::success;
}

ScenarioConfig load_scenario(const nlohmann::json& j) {
  ScenarioConfig cfg = scenario_config_from_json(j);
  if (auto seed = seed_override()) cfg.set_seed(*seed);
  return cfg;
}

RerankParams scenario_params(const nlohmann::json& j) {
  return j.contains("rerank") ? rerank_params_from_json(j["rerank"]) : RerankParams{};
}

ExitStatus run_simulate(const SimulateOptions& o, std::ostream& err) {
  const nlohmann::json j = load_json_file(o.config);
  const ScenarioConfig cfg = load_scenario(j);
  const RerankParams params = scenario_params(j);
  header(err, "simulate",
         fmt::format("seed={} n_queries={} corpus_size={} alpha={} beta={} top_c={} mode={}",
                     cfg.seed, cfg.n_queries, cfg.corpus_size, params.alpha, params.beta,
                     params.top_c, to_string(params.mode)));
  const Scenario scenario = generate_scenario(cfg);
  const SweepGrid grid{{params.alpha}, {params.beta}, {params.top_c}};
  const auto rows = sweep(scenario, grid, params.mode, o.threads);
  write_text_file(o.output, sweep_csv(rows));
  if (!o.histogram.empty()) {
    write_text_file(o.histogram, distribution_csv(distribution_report(scenario)));
  }
  return ExitStatus::success;
}

ExitStatus run_sweep(const SimulateOptions& o, std::ostream& err) {
  const nlohmann::json j = load_json_file(o.config);
  const ScenarioConfig cfg = load_scenario(j);
  const RerankMode mode = scenario_params(j).mode;
  const SweepGrid grid = sweep_grid_from_json(load_json_file(o.grid));
  header(err, "sweep",
         fmt::format("seed={} n_queries={} corpus_size={} cells={} mode={}", cfg.seed,
                     cfg.n_queries, cfg.corpus_size,
                     grid.alphas.size() * grid.betas.size() * grid.top_cs.size(),
                     to_string(mode)));
  const Scenario scenario = generate_scenario(cfg);
  const auto rows = sweep(scenario, grid, mode, o.threads);
  write_text_file(o.output, sweep_csv(rows));
  return ExitStatus::success;
}

ExitStatus status_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::invalid_argument:
    case ErrorKind::config:
      return ExitStatus::usage_error;
    case ErrorKind::validation:
    case ErrorKind::parse:
      return ExitStatus::data_invalid;
    case ErrorKind::io:
      return ExitStatus::runtime_failure;
    case ErrorKind::oracle: {
      const auto* oe = dynamic_cast<const OracleError*>(&e);
      if (oe && oe->failure() == OracleFailure::missing_entry) return ExitStatus::data_invalid;
      return ExitStatus::runtime_failure;
    }
  }
  return ExitStatus::runtime_failure;
}

}  // namespace

ExitStatus dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Answer-consistency reranking and evaluation for composed image retrieval", "vqa4cir"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  RerankOptions rr;
  auto* rerank_cmd = app.add_subcommand("rerank", "Rerank candidate lists with answer probabilities");
  rerank_cmd->add_option("--candidates", rr.candidates, "Candidates JSON Lines")->required();
  rerank_cmd->add_option("--qa", rr.qa, "QA instruction JSON")->required();
  auto* probs = rerank_cmd->add_option("--probs", rr.probs, "Precomputed probabilities JSON Lines");
  auto* url = rerank_cmd->add_option("--oracle-url", rr.oracle_url, "HTTP answer oracle endpoint");
  probs->excludes(url);
  url->excludes(probs);
  rerank_cmd->add_option("--alpha", rr.alpha, "Rank descent step size")->capture_default_str();
  rerank_cmd->add_option("--beta", rr.beta, "Penalty decline rate")->capture_default_str();
  rerank_cmd->add_option("--top-c", rr.top_c, "Head candidates to rerank")->capture_default_str();
  rerank_cmd->add_option("--mode", rr.mode, "caption or question")->capture_default_str();
  rerank_cmd->add_option("--timeout-ms", rr.timeout_ms, "HTTP oracle timeout")->capture_default_str();
  rerank_cmd->add_option("--max-in-flight", rr.max_in_flight, "Concurrent oracle calls")
      ->capture_default_str();
  rerank_cmd->add_option("-o,--output", rr.output, "Reranked JSON Lines output")->required();

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate rankings against ground truth");
  eval_cmd->add_option("--run", ev.run, "Ranked or reranked JSON Lines")->required();
  eval_cmd->add_option("--truth", ev.truth, "Ground truth JSON Lines")->required();
  eval_cmd->add_flag("--subset", ev.subset, "Also report subset recalls and the composite average");
  eval_cmd->add_option("--format", ev.format, "json or table")->capture_default_str();

  LintOptions li;
  auto* lint_cmd = app.add_subcommand("lint", "Lint QA instruction data");
  lint_cmd->add_option("--qa", li.qa, "QA instruction JSON")->required();
  lint_cmd->add_option("--captions", li.captions, "Captions JSON keyed by query_id");
  lint_cmd->add_flag("--stats", li.stats, "Print dataset counts");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run one seeded synthetic experiment");
  sim_cmd->add_option("--config", sim.config, "Scenario JSON")->required();
  sim_cmd->add_option("-o,--output", sim.output, "CSV output")->required();
  sim_cmd->add_option("--histogram", sim.histogram, "Optional p^A histogram CSV");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");

  SimulateOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep alpha, beta and top-C on one scenario");
  sweep_cmd->add_option("--config", sw.config, "Scenario JSON")->required();
  sweep_cmd->add_option("--grid", sw.grid, "Grid JSON")->required();
  sweep_cmd->add_option("-o,--output", sw.output, "CSV output")->required();
  sweep_cmd->add_option("--threads", sw.threads, "Worker threads (0 = all cores)");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return ExitStatus::success;
    }
    err << "error: " << e.what() << '\n';
    return ExitStatus::usage_error;
  }

  try {
    if (*rerank_cmd) {
      if (rr.probs.empty() == rr.oracle_url.empty()) {
        throw Error(ErrorKind::config, "exactly one of --probs or --oracle-url is required");
      }
      return run_rerank(rr, err);
    }
    if (*eval_cmd) return run_eval(ev, out, err);
    if (*lint_cmd) return run_lint(li, out, err);
    if (*sim_cmd) return run_simulate(sim, err);
    if (*sweep_cmd) return run_sweep(sw, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return status_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return ExitStatus::runtime_failure;
  }
  return ExitStatus::usage_error;
}

}  // namespace vqa4cir::cli
