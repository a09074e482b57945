#pragma once

// Domain value types shared by every module, plus structural validation.
//
// Ranks are 1-based at every API boundary: candidates[0] has rank 1.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vqa4cir {

/// Opaque image identifier (filename or dataset key).
struct ImageRef {
  std::string id;

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
  friend auto operator<=>(const ImageRef&, const ImageRef&) = default;
};

struct Query {
  std::string query_id;
  ImageRef reference;
  std::string relative_caption;
};

struct RankedList {
  std::string query_id;
  std::vector<ImageRef> candidates;
  std::optional<std::vector<double>> scores;

  std::size_t size() const noexcept { return candidates.size(); }

  friend bool operator==(const RankedList&, const RankedList&) = default;
};

struct QAPair {
  std::string question;
  std::string answer;

  /// Answer after lowercase/trim/trailing-punctuation normalization.
  std::string normalized_answer() const;
  bool answer_is_binary() const;

  friend bool operator==(const QAPair&, const QAPair&) = default;
};

struct QASet {
  std::string query_id;
  std::vector<QAPair> pairs;

  std::size_t size() const noexcept { return pairs.size(); }

  friend bool operator==(const QASet&, const QASet&) = default;
};

/// Row-major C'xK grid of answer-match probabilities.
struct AnswerMatrix {
  std::string query_id;
  std::vector<std::string> candidate_ids;
  std::size_t questions = 0;
  std::vector<double> probabilities;

  AnswerMatrix() = default;
  AnswerMatrix(std::string query_id, std::vector<std::string> candidate_ids,
               std::size_t questions);

  std::size_t rows() const noexcept { return candidate_ids.size(); }
  double& at(std::size_t row, std::size_t k) {
    return probabilities[row * questions + k];
  }
  double at(std::size_t row, std::size_t k) const {
    return probabilities[row * questions + k];
  }
  std::span<const double> row(std::size_t r) const {
    return {probabilities.data() + r * questions, questions};
  }

  friend bool operator==(const AnswerMatrix&, const AnswerMatrix&) = default;
};

enum class RerankMode { caption_wise, question_wise };

std::string_view to_string(RerankMode mode);
/// Accepts "caption", "caption_wise", "question", "question_wise".
std::optional<RerankMode> parse_rerank_mode(std::string_view text);

struct RerankParams {
  double alpha = 20.0;  ///< step size of the rank descent
  double beta = 10.0;   ///< decline rate of the penalty in p^A
  std::size_t top_c = 70;
  RerankMode mode = RerankMode::caption_wise;

  /// Throws Error(config) naming the offending field.
  void validate() const;
};

struct GroundTruth {
  std::string query_id;
  ImageRef target;
  std::optional<std::vector<ImageRef>> subset;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct TrainingExample {
  ImageRef candidate;
  int label = -1;  ///< +1 for the target image, -1 otherwise
  QASet qa;
  std::vector<double> probabilities;
};

/// A reranked list together with the sort keys (c + R) that produced it.
struct RerankedList {
  RankedList ranking;
  std::vector<double> keys;

  friend bool operator==(const RerankedList&, const RerankedList&) = default;
};

struct ValidationResult {
  std::vector<std::string> violations;
  std::vector<std::string> advisories;

  bool ok() const noexcept { return violations.empty(); }
  friend bool operator==(const ValidationResult&, const ValidationResult&) = default;
};

/// Lowercase, trim, strip trailing punctuation.
std::string normalize_answer(std::string_view answer);
std::string trim(std::string_view text);

ValidationResult validate_query(const Query& query);
ValidationResult validate_ranked_list(const RankedList& list);
ValidationResult validate_qa_set(const QASet& qa);
ValidationResult validate_ground_truth(const GroundTruth& truth);
ValidationResult validate_answer_matrix(const AnswerMatrix& matrix);
ValidationResult validate_training_example(const TrainingExample& example);

}  // namespace vqa4cir
