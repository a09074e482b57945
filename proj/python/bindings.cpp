#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "vqa4cir/dataset_io.hpp"
#include "vqa4cir/error.hpp"
#include "vqa4cir/metrics.hpp"
#include "vqa4cir/objective.hpp"
#include "vqa4cir/rerank.hpp"
#include "vqa4cir/simulator.hpp"

namespace py = pybind11;
using namespace vqa4cir;

namespace {

RerankParams make_params(double alpha, double beta, std::size_t top_c, const std::string& mode) {
  const auto m = parse_rerank_mode(mode);
  if (!m) throw Error(ErrorKind::config, "unknown rerank mode '" + mode + "'");
  RerankParams p{alpha, beta, top_c, *m};
  p.validate();
  return p;
}

// candidates: ids in base order; probabilities: one row per top-C candidate.
py::tuple rerank_ids(const std::vector<std::string>& candidates,
                     const std::vector<std::vector<double>>& probabilities, double alpha,
                     double beta, std::size_t top_c, const std::string& mode) {
  const RerankParams params = make_params(alpha, beta, top_c, mode);
  RankedList list{"query", {}, std::nullopt};
  for (const auto& id : candidates) list.candidates.push_back({id});
  const std::size_t head = std::min(top_c, candidates.size());
  if (probabilities.size() != head) {
    throw Error(ErrorKind::invalid_argument, "expected one probability row per top-C candidate");
  }
  const std::size_t k = head ? probabilities.front().size() : 0;
  AnswerMatrix matrix("query", {candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(head)}, k);
  for (std::size_t r = 0; r < head; ++r) {
    if (probabilities[r].size() != k) {
      throw Error(ErrorKind::invalid_argument, "probability rows differ in length");
    }
    for (std::size_t j = 0; j < k; ++j) matrix.at(r, j) = probabilities[r][j];
  }
  const RerankedList out = rerank(list, matrix, params);
  std::vector<std::string> ids;
  for (const auto& img : out.ranking.candidates) ids.push_back(img.id);
  return py::make_tuple(ids, out.keys);
}

std::string evaluate(const std::string& run_path, const std::string& truth_path, bool subset) {
  const auto lists = load_candidates(run_path);
  const auto truths = load_ground_truth(truth_path);
  std::map<std::string, GroundTruth> by_id;
  for (const auto& t : truths) by_id[t.query_id] = t;
  std::vector<RunRecord> runs;
  for (const auto& l : lists) {
    auto it = by_id.find(l.query_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::validation, "no ground truth for query '" + l.query_id + "'");
    }
    runs.push_back({l, it->second});
  }
  return to_json(subset ? cirr_summary(runs) : recall_summary(runs)).dump();
}

std::vector<py::dict> lint(const std::string& qa_text, const std::map<std::string, std::string>& captions) {
  std::vector<py::dict> out;
  for (const auto& set : parse_qa_instructions(qa_text)) {
    const auto it = captions.find(set.query_id);
    std::optional<std::string_view> caption;
    if (it != captions.end()) caption = it->second;
    for (const auto& d : lint_qa_set(set, caption)) {
      py::dict row;
      row["query_id"] = d.query_id;
      row["question_index"] = d.question_index;
      row["severity"] = std::string(to_string(d.severity));
      row["code"] = d.code;
      row["message"] = d.message;
      out.push_back(row);
    }
  }
  return out;
}

std::string sweep_from_json(const std::string& config, const std::optional<std::string>& grid) {
  const auto j = nlohmann::json::parse(config);
  const Scenario scenario = generate_scenario(scenario_config_from_json(j));
  const RerankParams params = j.contains("rerank") ? rerank_params_from_json(j["rerank"]) : RerankParams{};
  const SweepGrid g = grid ? sweep_grid_from_json(nlohmann::json::parse(*grid))
                           : SweepGrid{{params.alpha}, {params.beta}, {params.top_c}};
  return sweep_csv(sweep(scenario, g, params.mode));
}

}  // namespace

PYBIND11_MODULE(_vqa4cir, m) {
  m.doc() = "Answer-consistency reranking for composed image retrieval";
  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  m.def("consistency_score",
        [](const std::vector<double>& p) { return consistency_score(p); }, py::arg("probs"));
  m.def(
      "rank_penalty",
      [](double p_a, double alpha, double beta) {
        return rank_penalty(p_a, RerankParams{alpha, beta, 1, RerankMode::caption_wise});
      },
      py::arg("p_a"), py::arg("alpha") = 20.0, py::arg("beta") = 10.0);
  m.def("rerank", &rerank_ids, py::arg("candidates"), py::arg("probabilities"),
        py::arg("alpha") = 20.0, py::arg("beta") = 10.0, py::arg("top_c") = 70,
        py::arg("mode") = "caption",
        "Returns (reranked ids, sort keys).");

  m.def(
      "caption_wise_loss",
      [](int label, const std::vector<double>& p) { return caption_wise_loss(label, p); },
      py::arg("label"), py::arg("probs"));
  m.def(
      "caption_wise_loss_gradient",
      [](int label, const std::vector<double>& p) { return caption_wise_loss_gradient(label, p); },
      py::arg("label"), py::arg("probs"));
  m.def(
      "question_wise_loss",
      [](int label, const std::vector<double>& p) { return question_wise_loss(label, p); },
      py::arg("label"), py::arg("probs"));

  m.def("cirr_composite_average", &cirr_composite_average, py::arg("recall_at_5"),
        py::arg("recall_subset_at_1"));
  m.def("evaluate_json", &evaluate, py::arg("run_path"), py::arg("truth_path"),
        py::arg("subset") = false);

  m.def(
      "parse_qa",
      [](const std::string& text) {
        std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> out;
        for (const auto& set : parse_qa_instructions(text)) {
          std::vector<std::pair<std::string, std::string>> pairs;
          for (const auto& p : set.pairs) pairs.emplace_back(p.question, p.answer);
          out.emplace_back(set.query_id, pairs);
        }
        return out;
      },
      py::arg("text"));
  m.def("lint", &lint, py::arg("qa_text"),
        py::arg("captions") = std::map<std::string, std::string>{});

  m.def("sweep_csv", &sweep_from_json, py::arg("config_json"), py::arg("grid_json") = std::nullopt,
        py::call_guard<py::gil_scoped_release>());
}
