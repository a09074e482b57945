#pragma once

// File formats and QA-set linting.
//
// QA instruction file (one JSON document, queries in file order):
//   { "<query_id>": { "QA Pairs": [ {"Q": "...", "A": "..."}, ... ] }, ... }
// Candidates (JSON Lines):   {"query_id", "candidates": [..], "scores": [..]?}
// Ground truth (JSON Lines): {"query_id", "target", "subset": [..]?}
// Reranked (JSON Lines):     {"query_id", "candidates": [..], "keys": [..]}
//
// Writers emit keys in the fixed order above, one record per line, each line
// newline-terminated, so identical data always serializes to identical bytes.

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqa4cir/types.hpp"

namespace vqa4cir {

// --- QA instruction data ----------------------------------------------------

std::vector<QASet> parse_qa_instructions(std::string_view text);
std::vector<QASet> load_qa_instructions(const std::string& path);
std::string serialize_qa_instructions(std::span<const QASet> sets);

/// Captions file: {"<query_id>": "<relative caption>", ...}
std::map<std::string, std::string> parse_captions(std::string_view text);
std::map<std::string, std::string> load_captions(const std::string& path);

struct QaStats {
  std::size_t sets = 0;
  std::size_t pairs = 0;
  std::size_t binary_answers = 0;
  std::map<std::size_t, std::size_t> sets_by_question_count;
};

QaStats qa_stats(std::span<const QASet> sets);

// --- Lint ---------------------------------------------------------------------

enum class Severity { error, warning };

std::string_view to_string(Severity severity);

/// Closed set of lint codes.
namespace lint_code {
inline constexpr std::string_view non_binary_answer = "non_binary_answer";
inline constexpr std::string_view count_out_of_range = "count_out_of_range";
inline constexpr std::string_view negative_uninformative = "negative_uninformative";
inline constexpr std::string_view caption_term_missing = "caption_term_missing";
}  // namespace lint_code

struct LintDiagnostic {
  Severity severity = Severity::warning;
  std::string code;
  std::string message;
  std::string query_id;
  std::size_t question_index = 0;  ///< 1-based; 0 for set-level findings

  friend bool operator==(const LintDiagnostic&, const LintDiagnostic&) = default;
};

/// Rules:
///  - non_binary_answer: normalized answer is not yes/no.
///  - count_out_of_range: K outside [1, 3].
///  - negative_uninformative: answer "no" to a copular attribute question
///    ("Are the birds yellow?"), which cannot tell what the caption asks for.
///    Existence questions ("Is there ...", "Are there ...") and questions that
///    mention negation or removal are exempt.
///  - caption_term_missing: none of the question's content words (stopwords
///    removed, case-folded exact match) occurs in the caption. Skipped when no
///    caption is given.
/// Output is ordered by (query_id, question index, code).
std::vector<LintDiagnostic> lint_qa_set(const QASet& qa,
                                        std::optional<std::string_view> caption = std::nullopt);

/// Lowercased alphanumeric words of a text, in order.
std::vector<std::string> tokenize_words(std::string_view text);
/// Words left after removing the fixed stopword list.
std::vector<std::string> content_words(std::string_view text);

// --- Rankings, ground truth, reranked output ------------------------------------

std::vector<RankedList> parse_candidates(std::istream& in, std::string_view source_name);
std::vector<RankedList> load_candidates(const std::string& path);
std::string serialize_candidates(std::span<const RankedList> lists);
void write_candidates(const std::string& path, std::span<const RankedList> lists);

std::vector<GroundTruth> parse_ground_truth(std::istream& in, std::string_view source_name);
std::vector<GroundTruth> load_ground_truth(const std::string& path);
std::string serialize_ground_truth(std::span<const GroundTruth> truths);
void write_ground_truth(const std::string& path, std::span<const GroundTruth> truths);

/// Reads files written by write_reranked; keys are required.
std::vector<RerankedList> parse_reranked(std::istream& in, std::string_view source_name);
std::vector<RerankedList> load_reranked(const std::string& path);
std::string serialize_reranked(std::span<const RerankedList> lists);
void write_reranked(const std::string& path, std::span<const RerankedList> lists);

/// Writes text to path, replacing any existing file.
void write_text_file(const std::string& path, std::string_view text);
std::string read_text_file(const std::string& path);

}  // namespace vqa4cir
