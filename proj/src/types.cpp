#include "vqa4cir/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "vqa4cir/error.hpp"

namespace vqa4cir {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_trailing_punct(char c) {
  return c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':';
}

}  // namespace

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string normalize_answer(std::string_view answer) {
  std::string out = trim(answer);
  while (!out.empty() && (is_trailing_punct(out.back()) || is_space(out.back()))) {
    out.pop_back();
  }
  std::transform(out.begin(), out.end(), out.begin(), [](char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  });
  return out;
}

std::string QAPair::normalized_answer() const { return normalize_answer(answer); }

bool QAPair::answer_is_binary() const {
  const std::string a = normalized_answer();
  return a == "yes" || a == "no";
}

AnswerMatrix::AnswerMatrix(std::string query_id_, std::vector<std::string> ids,
                           std::size_t k)
    : query_id(std::move(query_id_)),
      candidate_ids(std::move(ids)),
      questions(k),
      probabilities(candidate_ids.size() * k, 0.0) {}

std::string_view to_string(RerankMode mode) {
  switch (mode) {
    case RerankMode::caption_wise:
      return "caption";
    case RerankMode::question_wise:
      return "question";
  }
  return "caption";
}

std::optional<RerankMode> parse_rerank_mode(std::string_view text) {
  if (text == "caption" || text == "caption_wise") return RerankMode::caption_wise;
  if (text == "question" || text == "question_wise") return RerankMode::question_wise;
  return std::nullopt;
}

void RerankParams::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::config, "alpha must be non-negative");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorKind::config, "beta must be non-negative");
  }
  if (top_c < 1) {
    throw Error(ErrorKind::config, "top_c must be at least 1");
  }
}

ValidationResult validate_query(const Query& query) {
  ValidationResult result;
  if (query.query_id.empty()) result.violations.emplace_back("empty query_id");
  if (query.reference.id.empty()) result.violations.emplace_back("empty reference image id");
  if (trim(query.relative_caption).empty()) {
    result.violations.emplace_back("empty relative caption");
  }
  return result;
}

ValidationResult validate_ranked_list(const RankedList& list) {
  ValidationResult result;
  if (list.query_id.empty()) result.violations.emplace_back("empty query_id");

  // id -> every 1-based rank it occupies, in first-seen order
  std::map<std::string, std::vector<std::size_t>> seen;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < list.candidates.size(); ++i) {
    const std::string& id = list.candidates[i].id;
    if (id.empty()) {
      result.violations.push_back(fmt::format("empty id at rank {}", i + 1));
      continue;
    }
    auto& ranks = seen[id];
    if (ranks.empty()) order.push_back(id);
    ranks.push_back(i + 1);
  }
  for (const auto& id : order) {
    const auto& ranks = seen[id];
    if (ranks.size() > 1) {
      result.violations.push_back(
          fmt::format("duplicate id at ranks {}: {}", fmt::join(ranks, ","), id));
    }
  }

  if (list.scores) {
    const auto& scores = *list.scores;
    if (scores.size() != list.candidates.size()) {
      result.violations.push_back(fmt::format(
          "scores length {} does not match {} candidates", scores.size(),
          list.candidates.size()));
    } else {
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) {
          result.violations.push_back(fmt::format("non-finite score at index {}", i));
        } else if (i > 0 && scores[i] > scores[i - 1]) {
          result.violations.push_back(
              fmt::format("scores not non-increasing at index {}", i));
        }
      }
    }
  }
  return result;
}

ValidationResult validate_qa_set(const QASet& qa) {
  ValidationResult result;
  if (qa.pairs.empty()) {
    result.violations.emplace_back("empty QASet");
    return result;
  }
  for (std::size_t i = 0; i < qa.pairs.size(); ++i) {
    const QAPair& pair = qa.pairs[i];
    const std::size_t k = i + 1;
    if (trim(pair.question).empty()) {
      result.violations.push_back(fmt::format("empty question at k={}", k));
    }
    if (pair.normalized_answer().empty()) {
      result.violations.push_back(fmt::format("empty answer at k={}", k));
    } else if (!pair.answer_is_binary()) {
      result.advisories.push_back(fmt::format("non-binary answer at k={}", k));
    }
  }
  return result;
}

ValidationResult validate_ground_truth(const GroundTruth& truth) {
  ValidationResult result;
  if (truth.query_id.empty()) result.violations.emplace_back("empty query_id");
  if (truth.target.id.empty()) result.violations.emplace_back("empty target id");
  if (truth.subset) {
    const auto& subset = *truth.subset;
    if (subset.size() < 2) {
      result.violations.push_back(
          fmt::format("subset has {} members; at least 2 required", subset.size()));
    }
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < subset.size(); ++i) {
      if (!ids.insert(subset[i].id).second) {
        result.violations.push_back(
            fmt::format("duplicate subset member at index {}: {}", i, subset[i].id));
      }
    }
    if (!ids.contains(truth.target.id)) {
      result.violations.emplace_back("target not in subset");
    }
  }
  return result;
}

ValidationResult validate_answer_matrix(const AnswerMatrix& matrix) {
  ValidationResult result;
  if (matrix.probabilities.size() != matrix.rows() * matrix.questions) {
    result.violations.push_back(fmt::format(
        "grid holds {} values; expected {}x{}", matrix.probabilities.size(),
        matrix.rows(), matrix.questions));
    return result;
  }
  std::unordered_set<std::string> ids;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    if (!ids.insert(matrix.candidate_ids[r]).second) {
      result.violations.push_back(
          fmt::format("duplicate candidate row {}: {}", r + 1, matrix.candidate_ids[r]));
    }
    for (std::size_t k = 0; k < matrix.questions; ++k) {
      const double p = matrix.at(r, k);
      if (!(p >= 0.0 && p <= 1.0)) {
        result.violations.push_back(fmt::format(
            "probability out of range at (row {}, k={}): {}", r + 1, k + 1, p));
      }
    }
  }
  return result;
}

ValidationResult validate_training_example(const TrainingExample& example) {
  ValidationResult result;
  if (example.label != 1 && example.label != -1) {
    result.violations.push_back(fmt::format("label {} not in {{+1, -1}}", example.label));
  }
  if (example.probabilities.size() != example.qa.size()) {
    result.violations.push_back(fmt::format(
        "{} probabilities for {} questions", example.probabilities.size(),
        example.qa.size()));
  }
  for (double p : example.probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) {
      result.violations.emplace_back("probability out of range");
      break;
    }
  }
  return result;
}

}  // namespace vqa4cir
