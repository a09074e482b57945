#pragma once

// Consistency scoring and soft rank penalties.
//
// A candidate at original rank c inside the top-C block with consistency
// p^A = prod_k p_k is moved to the fractional rank c + alpha * exp(-beta * p^A).
// Candidates past the block keep key c. The whole list is then sorted by key,
// ties resolved by ascending original rank.

#include <cstddef>
#include <span>
#include <vector>

#include "vqa4cir/types.hpp"

namespace vqa4cir {

/// Lists with more questions than this are scored in log space.
inline constexpr std::size_t kLogSpaceThreshold = 30;

struct RankKey {
  ImageRef image;
  std::size_t original_rank = 0;  ///< 1-based rank in the input list
  double penalty = 0.0;           ///< R added at the final step
  double key = 0.0;
};

/// p^A = product of per-question probabilities.
/// Throws Error(invalid_argument) on an empty input or a value outside [0, 1].
double consistency_score(std::span<const double> probs);

/// R(p^A) = alpha * exp(-beta * p^A).
double rank_penalty(double p_a, const RerankParams& params);

/// Full rerank in the mode selected by params; entries are in final order.
std::vector<RankKey> compute_rank_keys(const RankedList& list, const AnswerMatrix& matrix,
                                       const RerankParams& params);

RankedList rerank_caption_wise(const RankedList& list, const AnswerMatrix& matrix,
                               const RerankParams& params);
RankedList rerank_question_wise(const RankedList& list, const AnswerMatrix& matrix,
                                const RerankParams& params);

/// Dispatches on params.mode and keeps the keys for auditing.
RerankedList rerank(const RankedList& list, const AnswerMatrix& matrix,
                    const RerankParams& params);

}  // namespace vqa4cir
