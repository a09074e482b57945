#include "vqa4cir/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "vqa4cir/error.hpp"

namespace vqa4cir {

double consistency_score(std::span<const double> probs) {
  if (probs.empty()) throw Error(ErrorKind::invalid_argument, "no questions");
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::invalid_argument, "probability out of range");
    }
  }
  if (probs.size() <= kLogSpaceThreshold) {
    double product = 1.0;
    for (double p : probs) product *= p;
    return product;
  }
  double log_sum = 0.0;
  for (double p : probs) {
    if (p == 0.0) return 0.0;
    log_sum += std::log(p);
  }
  return std::exp(log_sum);
}

double rank_penalty(double p_a, const RerankParams& params) {
  if (!(p_a >= 0.0 && p_a <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "probability out of range");
  }
  params.validate();
  return params.alpha * std::exp(-params.beta * p_a);
}

namespace {

// Matrix row index for each of the first min(top_c, n) candidates.
std::vector<std::size_t> head_rows(const RankedList& list, const AnswerMatrix& matrix,
                                   const RerankParams& params) {
  if (list.query_id != matrix.query_id) {
    throw Error(ErrorKind::validation,
                fmt::format("query_id mismatch: list '{}' vs matrix '{}'", list.query_id,
                            matrix.query_id));
  }
  if (matrix.questions == 0) throw Error(ErrorKind::validation, "no questions");
  if (matrix.probabilities.size() != matrix.rows() * matrix.questions) {
    throw Error(ErrorKind::validation, "answer matrix grid has the wrong size");
  }
  const std::size_t head = std::min(params.top_c, list.size());
  std::unordered_map<std::string_view, std::size_t> row_of;
  row_of.reserve(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) row_of.emplace(matrix.candidate_ids[r], r);

  std::vector<std::size_t> rows(head);
  for (std::size_t i = 0; i < head; ++i) {
    auto it = row_of.find(list.candidates[i].id);
    if (it == row_of.end()) {
      throw Error(ErrorKind::validation,
                  fmt::format("uncovered candidate '{}' at rank {}", list.candidates[i].id,
                              i + 1));
    }
    rows[i] = it->second;
  }
  return rows;
}

void sort_by_key(std::vector<RankKey>& entries, const std::vector<std::size_t>& tiebreak) {
  // tiebreak[original_rank - 1] orders equal keys
  std::sort(entries.begin(), entries.end(), [&](const RankKey& a, const RankKey& b) {
    if (a.key != b.key) return a.key < b.key;
    return tiebreak[a.original_rank - 1] < tiebreak[b.original_rank - 1];
  });
}

std::vector<RankKey> caption_wise_keys(const RankedList& list, const AnswerMatrix& matrix,
                                       const RerankParams& params) {
  params.validate();
  const auto rows = head_rows(list, matrix, params);
  std::vector<RankKey> entries(list.size());
  std::vector<std::size_t> tiebreak(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    RankKey& e = entries[i];
    e.image = list.candidates[i];
    e.original_rank = i + 1;
    if (i < rows.size()) {
      e.penalty = rank_penalty(consistency_score(matrix.row(rows[i])), params);
    }
    e.key = static_cast<double>(e.original_rank) + e.penalty;
    tiebreak[i] = i;
  }
  sort_by_key(entries, tiebreak);
  return entries;
}

// Questions are applied one at a time. Each step adds R(p_k) to the current
// integer rank of every original top-C member, re-sorts, and re-assigns
// integer ranks before the next question.
std::vector<RankKey> question_wise_keys(const RankedList& list, const AnswerMatrix& matrix,
                                        const RerankParams& params) {
  params.validate();
  const auto rows = head_rows(list, matrix, params);
  std::vector<RankKey> entries(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    entries[i].image = list.candidates[i];
    entries[i].original_rank = i + 1;
    entries[i].key = static_cast<double>(i + 1);
  }
  std::vector<std::size_t> previous_position(list.size());
  for (std::size_t k = 0; k < matrix.questions; ++k) {
    for (std::size_t pos = 0; pos < entries.size(); ++pos) {
      RankKey& e = entries[pos];
      previous_position[e.original_rank - 1] = pos;
      const std::size_t idx = e.original_rank - 1;
      e.penalty = 0.0;
      if (idx < rows.size()) {
        const double p = matrix.at(rows[idx], k);
        if (!(p >= 0.0 && p <= 1.0)) {
          throw Error(ErrorKind::invalid_argument, "probability out of range");
        }
        e.penalty = rank_penalty(p, params);
      }
      e.key = static_cast<double>(pos + 1) + e.penalty;
    }
    sort_by_key(entries, previous_position);
  }
  return entries;
}

RankedList to_ranked_list(const std::string& query_id, const std::vector<RankKey>& entries) {
  RankedList out;
  out.query_id = query_id;
  out.candidates.reserve(entries.size());
  for (const auto& e : entries) out.candidates.push_back(e.image);
  return out;
}

}  // namespace

std::vector<RankKey> compute_rank_keys(const RankedList& list, const AnswerMatrix& matrix,
                                       const RerankParams& params) {
  return params.mode == RerankMode::caption_wise ? caption_wise_keys(list, matrix, params)
                                                 : question_wise_keys(list, matrix, params);
}

RankedList rerank_caption_wise(const RankedList& list, const AnswerMatrix& matrix,
                               const RerankParams& params) {
  return to_ranked_list(list.query_id, caption_wise_keys(list, matrix, params));
}

RankedList rerank_question_wise(const RankedList& list, const AnswerMatrix& matrix,
                                const RerankParams& params) {
  return to_ranked_list(list.query_id, question_wise_keys(list, matrix, params));
}

RerankedList rerank(const RankedList& list, const AnswerMatrix& matrix,
                    const RerankParams& params) {
  const auto entries = compute_rank_keys(list, matrix, params);
  RerankedList out;
  out.ranking = to_ranked_list(list.query_id, entries);
  out.keys.reserve(entries.size());
  for (const auto& e : entries) out.keys.push_back(e.key);
  return out;
}

}  // namespace vqa4cir
