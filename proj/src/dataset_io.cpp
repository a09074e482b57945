#include "vqa4cir/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "vqa4cir/error.hpp"

namespace vqa4cir {

using ojson = nlohmann::ordered_json;

namespace {

ojson parse_document(std::string_view text, std::string_view what) {
  try {
    return ojson::parse(text.begin(), text.end());
  } catch (const ojson::parse_error& e) {
    throw Error(ErrorKind::parse,
                fmt::format("{}: malformed JSON at byte {}: {}", what, e.byte, e.what()));
  }
}

std::string require_string(const ojson& record, const char* key, const std::string& where) {
  if (!record.contains(key)) {
    throw Error(ErrorKind::validation, fmt::format("{}: missing key '{}'", where, key));
  }
  if (!record[key].is_string()) {
    throw Error(ErrorKind::validation, fmt::format("{}: '{}' must be a string", where, key));
  }
  return record[key].get<std::string>();
}

std::vector<ImageRef> require_id_array(const ojson& value, const char* key,
                                       const std::string& where) {
  if (!value.is_array()) {
    throw Error(ErrorKind::validation, fmt::format("{}: '{}' must be an array", where, key));
  }
  std::vector<ImageRef> out;
  out.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_string()) {
      throw Error(ErrorKind::validation,
                  fmt::format("{}: '{}' must contain strings", where, key));
    }
    out.push_back({v.get<std::string>()});
  }
  return out;
}

std::vector<double> require_number_array(const ojson& value, const char* key,
                                         const std::string& where) {
  if (!value.is_array()) {
    throw Error(ErrorKind::validation, fmt::format("{}: '{}' must be an array", where, key));
  }
  std::vector<double> out;
  out.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_number()) {
      throw Error(ErrorKind::validation,
                  fmt::format("{}: '{}' must contain numbers", where, key));
    }
    out.push_back(v.get<double>());
  }
  return out;
}

void throw_if_invalid(const ValidationResult& result, const std::string& where) {
  if (!result.ok()) {
    throw Error(ErrorKind::validation, fmt::format("{}: {}", where, result.violations.front()));
  }
}

// Calls fn(record, "source:line") for each non-blank JSON Lines record.
template <typename Fn>
void for_each_record(std::istream& in, std::string_view source_name, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = fmt::format("{}:{}", source_name, line_no);
    ojson record;
    try {
      record = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
      throw Error(ErrorKind::parse,
                  fmt::format("{}: malformed JSON at byte {}: {}", where, e.byte, e.what()));
    }
    if (!record.is_object()) {
      throw Error(ErrorKind::validation, fmt::format("{}: record is not an object", where));
    }
    fn(record, where);
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path));
  return in;
}

ojson id_array(const std::vector<ImageRef>& ids) {
  ojson out = ojson::array();
  for (const auto& id : ids) out.push_back(id.id);
  return out;
}

}  // namespace

// --- File helpers ----------------------------------------------------------------

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", path));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::io, fmt::format("write to '{}' failed", path));
}

std::string read_text_file(const std::string& path) {
  auto in = open_input(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// --- QA instruction data -------------------------------------------------------------

std::vector<QASet> parse_qa_instructions(std::string_view text) {
  const ojson doc = parse_document(text, "QA instructions");
  if (!doc.is_object()) {
    throw Error(ErrorKind::parse, "QA instructions: top level must be an object keyed by query_id");
  }
  std::vector<QASet> sets;
  sets.reserve(doc.size());
  for (const auto& [query_id, record] : doc.items()) {
    const std::string where = fmt::format("record '{}'", query_id);
    if (!record.is_object()) {
      throw Error(ErrorKind::parse, fmt::format("{}: not an object", where));
    }
    if (!record.contains("QA Pairs")) {
      throw Error(ErrorKind::parse, fmt::format("{}: missing key 'QA Pairs'", where));
    }
    const ojson& pairs = record["QA Pairs"];
    if (!pairs.is_array()) {
      throw Error(ErrorKind::parse, fmt::format("{}: 'QA Pairs' is not an array", where));
    }
    QASet qa;
    qa.query_id = query_id;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const ojson& p = pairs[i];
      const std::string pair_where = fmt::format("{} pair {}", where, i + 1);
      if (!p.is_object()) {
        throw Error(ErrorKind::parse, fmt::format("{}: not an object", pair_where));
      }
      qa.pairs.push_back({require_string(p, "Q", pair_where), require_string(p, "A", pair_where)});
    }
    throw_if_invalid(validate_qa_set(qa), where);
    sets.push_back(std::move(qa));
  }
  return sets;
}

std::vector<QASet> load_qa_instructions(const std::string& path) {
  try {
    return parse_qa_instructions(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    throw Error(e.kind(), fmt::format("{}: {}", path, e.what()));
  }
}

std::string serialize_qa_instructions(std::span<const QASet> sets) {
  ojson doc = ojson::object();
  for (const auto& qa : sets) {
    ojson pairs = ojson::array();
    for (const auto& p : qa.pairs) pairs.push_back(ojson{{"Q", p.question}, {"A", p.answer}});
    doc[qa.query_id] = ojson{{"QA Pairs", std::move(pairs)}};
  }
  return doc.dump(2) + "\n";
}

std::map<std::string, std::string> parse_captions(std::string_view text) {
  const ojson doc = parse_document(text, "captions");
  if (!doc.is_object()) throw Error(ErrorKind::parse, "captions: top level must be an object");
  std::map<std::string, std::string> out;
  for (const auto& [id, caption] : doc.items()) {
    if (!caption.is_string()) {
      throw Error(ErrorKind::validation, fmt::format("captions: '{}' is not a string", id));
    }
    out.emplace(id, caption.get<std::string>());
  }
  return out;
}

std::map<std::string, std::string> load_captions(const std::string& path) {
  return parse_captions(read_text_file(path));
}

QaStats qa_stats(std::span<const QASet> sets) {
  QaStats stats;
  for (const auto& qa : sets) {
    ++stats.sets;
    stats.pairs += qa.size();
    ++stats.sets_by_question_count[qa.size()];
    for (const auto& p : qa.pairs) stats.binary_answers += p.answer_is_binary() ? 1 : 0;
  }
  return stats;
}

// --- Lint ------------------------------------------------------------------------------

std::string_view to_string(Severity severity) {
  return severity == Severity::error ? "error" : "warning";
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

namespace {

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",     "an",    "the",   "is",    "are",   "was",   "were",  "be",    "been",
      "do",    "does",  "did",   "has",   "have",  "had",   "can",   "could", "will",
      "would", "should", "of",   "in",    "on",    "at",    "to",    "for",   "with",
      "by",    "from",  "as",    "and",   "or",    "it",    "its",   "this",  "that",
      "these", "those", "there", "any",   "some",  "image", "picture", "photo", "shown",
      "what",  "which", "who",   "how",   "into",  "onto",  "than",  "their", "they",
      "them",  "he",    "she",   "his",   "her",   "one",   "more",  "most",  "very"};
  return words;
}

const std::set<std::string, std::less<>>& copulas() {
  static const std::set<std::string, std::less<>> words = {"is", "are", "was", "were"};
  return words;
}

const std::set<std::string, std::less<>>& negation_words() {
  static const std::set<std::string, std::less<>> words = {
      "no", "not", "without", "none", "any", "remove", "removed", "absent", "missing"};
  return words;
}

bool is_attribute_assertion(const std::vector<std::string>& words) {
  if (words.size() < 2 || !copulas().contains(words[0])) return false;
  if (words[1] == "there") return false;
  return std::none_of(words.begin(), words.end(),
                      [](const std::string& w) { return negation_words().contains(w); });
}

}  // namespace

std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& w : tokenize_words(text)) {
    if (!stopwords().contains(w)) out.push_back(std::move(w));
  }
  return out;
}

std::vector<LintDiagnostic> lint_qa_set(const QASet& qa, std::optional<std::string_view> caption) {
  std::vector<LintDiagnostic> out;
  auto emit = [&](std::string_view code, std::size_t k, std::string message) {
    out.push_back({Severity::warning, std::string(code), std::move(message), qa.query_id, k});
  };

  if (qa.size() < 1 || qa.size() > 3) {
    emit(lint_code::count_out_of_range, 0,
         fmt::format("{} questions; guideline is 1 to 3", qa.size()));
  }

  std::unordered_set<std::string> caption_words;
  if (caption) {
    for (auto& w : tokenize_words(*caption)) caption_words.insert(std::move(w));
  }

  for (std::size_t i = 0; i < qa.pairs.size(); ++i) {
    const QAPair& pair = qa.pairs[i];
    const std::size_t k = i + 1;
    const std::string answer = pair.normalized_answer();
    if (answer != "yes" && answer != "no") {
      emit(lint_code::non_binary_answer, k, fmt::format("answer '{}' is not yes/no", pair.answer));
    }
    const auto words = tokenize_words(pair.question);
    if (answer == "no" && is_attribute_assertion(words)) {
      emit(lint_code::negative_uninformative, k,
           "a 'no' to an attribute question does not say what the caption asks for");
    }
    if (caption) {
      const auto terms = content_words(pair.question);
      const bool found = std::any_of(terms.begin(), terms.end(), [&](const std::string& w) {
        return caption_words.contains(w);
      });
      if (!found) {
        emit(lint_code::caption_term_missing, k,
             "no content word of the question appears in the caption");
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const LintDiagnostic& a, const LintDiagnostic& b) {
    return std::tie(a.query_id, a.question_index, a.code) <
           std::tie(b.query_id, b.question_index, b.code);
  });
  return out;
}

// --- Candidates ---------------------------------------------------------------------------

std::vector<RankedList> parse_candidates(std::istream& in, std::string_view source_name) {
  std::vector<RankedList> lists;
  std::unordered_set<std::string> seen;
  for_each_record(in, source_name, [&](const ojson& record, const std::string& where) {
    RankedList list;
    list.query_id = require_string(record, "query_id", where);
    if (!record.contains("candidates")) {
      throw Error(ErrorKind::validation, fmt::format("{}: missing key 'candidates'", where));
    }
    list.candidates = require_id_array(record["candidates"], "candidates", where);
    if (record.contains("scores")) {
      list.scores = require_number_array(record["scores"], "scores", where);
    }
    if (record.contains("keys")) {
      const auto keys = require_number_array(record["keys"], "keys", where);
      if (keys.size() != list.candidates.size()) {
        throw Error(ErrorKind::validation, fmt::format("{}: keys length mismatch", where));
      }
    }
    throw_if_invalid(validate_ranked_list(list), where);
    if (!seen.insert(list.query_id).second) {
      throw Error(ErrorKind::validation,
                  fmt::format("{}: duplicate query_id '{}'", where, list.query_id));
    }
    lists.push_back(std::move(list));
  });
  return lists;
}

std::vector<RankedList> load_candidates(const std::string& path) {
  auto in = open_input(path);
  return parse_candidates(in, path);
}

std::string serialize_candidates(std::span<const RankedList> lists) {
  std::string out;
  for (const auto& list : lists) {
    ojson record;
    record["query_id"] = list.query_id;
    record["candidates"] = id_array(list.candidates);
    if (list.scores) record["scores"] = *list.scores;
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_candidates(const std::string& path, std::span<const RankedList> lists) {
  write_text_file(path, serialize_candidates(lists));
}

// --- Ground truth ----------------------------------------------------------------------------

std::vector<GroundTruth> parse_ground_truth(std::istream& in, std::string_view source_name) {
  std::vector<GroundTruth> truths;
  std::unordered_set<std::string> seen;
  for_each_record(in, source_name, [&](const ojson& record, const std::string& where) {
    GroundTruth truth;
    truth.query_id = require_string(record, "query_id", where);
    truth.target.id = require_string(record, "target", where);
    if (record.contains("subset")) {
      truth.subset = require_id_array(record["subset"], "subset", where);
    }
    throw_if_invalid(validate_ground_truth(truth), where);
    if (!seen.insert(truth.query_id).second) {
      throw Error(ErrorKind::validation,
                  fmt::format("{}: duplicate query_id '{}'", where, truth.query_id));
    }
    truths.push_back(std::move(truth));
  });
  return truths;
}

std::vector<GroundTruth> load_ground_truth(const std::string& path) {
  auto in = open_input(path);
  return parse_ground_truth(in, path);
}

std::string serialize_ground_truth(std::span<const GroundTruth> truths) {
  std::string out;
  for (const auto& t : truths) {
    ojson record;
    record["query_id"] = t.query_id;
    record["target"] = t.target.id;
    if (t.subset) record["subset"] = id_array(*t.subset);
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_ground_truth(const std::string& path, std::span<const GroundTruth> truths) {
  write_text_file(path, serialize_ground_truth(truths));
}

// --- Reranked output ------------------------------------------------------------------------

std::vector<RerankedList> parse_reranked(std::istream& in, std::string_view source_name) {
  std::vector<RerankedList> lists;
  std::unordered_set<std::string> seen;
  for_each_record(in, source_name, [&](const ojson& record, const std::string& where) {
    RerankedList out;
    out.ranking.query_id = require_string(record, "query_id", where);
    if (!record.contains("candidates") || !record.contains("keys")) {
      throw Error(ErrorKind::validation,
                  fmt::format("{}: reranked records need 'candidates' and 'keys'", where));
    }
    out.ranking.candidates = require_id_array(record["candidates"], "candidates", where);
    if (record.contains("scores")) {
      out.ranking.scores = require_number_array(record["scores"], "scores", where);
    }
    out.keys = require_number_array(record["keys"], "keys", where);
    if (out.keys.size() != out.ranking.size()) {
      throw Error(ErrorKind::validation, fmt::format("{}: keys length mismatch", where));
    }
    throw_if_invalid(validate_ranked_list(out.ranking), where);
    if (!seen.insert(out.ranking.query_id).second) {
      throw Error(ErrorKind::validation,
                  fmt::format("{}: duplicate query_id '{}'", where, out.ranking.query_id));
    }
    lists.push_back(std::move(out));
  });
  return lists;
}

std::vector<RerankedList> load_reranked(const std::string& path) {
  auto in = open_input(path);
  return parse_reranked(in, path);
}

std::string serialize_reranked(std::span<const RerankedList> lists) {
  std::string out;
  for (const auto& l : lists) {
    if (l.keys.size() != l.ranking.size()) {
      throw Error(ErrorKind::invalid_argument,
                  fmt::format("reranked list '{}' has mismatched keys", l.ranking.query_id));
    }
    ojson record;
    record["query_id"] = l.ranking.query_id;
    record["candidates"] = id_array(l.ranking.candidates);
    if (l.ranking.scores) record["scores"] = *l.ranking.scores;
    record["keys"] = l.keys;
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_reranked(const std::string& path, std::span<const RerankedList> lists) {
  write_text_file(path, serialize_reranked(lists));
}

}  // namespace vqa4cir
