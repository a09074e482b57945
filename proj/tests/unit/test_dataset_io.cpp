#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "vqa4cir/dataset_io.hpp"
#include "vqa4cir/error.hpp"

using namespace vqa4cir;
namespace fs = std::filesystem;

namespace {

const std::string kData = VQA4CIR_TEST_DATA;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "vqa4cir_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::string> codes(const std::vector<LintDiagnostic>& ds) {
  std::vector<std::string> out;
  for (const auto& d : ds) out.push_back(d.code);
  return out;
}

}  // namespace

TEST_CASE("QA instruction parsing") {
  const auto sets = parse_qa_instructions(R"({
    "m": {"QA Pairs": [{"Q": "Is the monkey holding onto a branch?", "A": "yes"},
                       {"Q": "Is the setting of the image a forest?", "A": "yes"}]},
    "b": {"QA Pairs": [{"Q": "Are the birds blue?", "A": "Yes"}]}
  })");
  REQUIRE(sets.size() == 2);
  CHECK(sets[0].query_id == "m");
  CHECK(sets[0].size() == 2);
  CHECK(sets[0].pairs[0].question == "Is the monkey holding onto a branch?");
  CHECK(sets[1].query_id == "b");
  CHECK(sets[1].pairs[0].answer == "Yes");

  CHECK_THROWS_WITH(parse_qa_instructions(R"({"x": {"pairs": []}})"),
                    doctest::Contains("missing key 'QA Pairs'"));
  CHECK_THROWS_WITH(parse_qa_instructions(R"({"x": {"QA Pairs": {}}})"),
                    doctest::Contains("'QA Pairs' is not an array"));
  CHECK_THROWS_WITH(parse_qa_instructions(R"({"x": {"QA Pairs": []}})"),
                    doctest::Contains("empty QASet"));
  CHECK_THROWS_WITH(parse_qa_instructions(R"({"x": {"QA Pairs": [)"),
                    doctest::Contains("malformed JSON at byte"));
  CHECK_THROWS_WITH(parse_qa_instructions(R"({"x": {"QA Pairs": [{"Q": "Is it?"}]}})"),
                    doctest::Contains("missing key 'A'"));
}

TEST_CASE("QA instructions round trip byte-stably") {
  const auto sets = load_qa_instructions(kData + "/monkey_qa.json");
  const std::string once = serialize_qa_instructions(sets);
  const auto again = parse_qa_instructions(once);
  CHECK(again == sets);
  CHECK(serialize_qa_instructions(again) == once);
  CHECK(validate_qa_set(again[0]) == validate_qa_set(sets[0]));
}

TEST_CASE("QA stats") {
  const auto sets = parse_qa_instructions(R"({
    "a": {"QA Pairs": [{"Q": "Q?", "A": "yes"}]},
    "b": {"QA Pairs": [{"Q": "Q?", "A": "red"}, {"Q": "R?", "A": "no"}]}
  })");
  const auto s = qa_stats(sets);
  CHECK(s.sets == 2);
  CHECK(s.pairs == 3);
  CHECK(s.binary_answers == 2);
  CHECK(s.sets_by_question_count.at(1) == 1);
  CHECK(s.sets_by_question_count.at(2) == 1);
}

TEST_CASE("lint rules") {
  QASet birds{"b", {{"Are the birds yellow?", "no"}}};
  CHECK(codes(lint_qa_set(birds)) == std::vector<std::string>{"negative_uninformative"});

  QASet exists{"e", {{"Is there a ball?", "no"}, {"Are there any people?", "no"}}};
  CHECK(lint_qa_set(exists).empty());
  QASet negated{"n", {{"Is the dog without a collar?", "no"}, {"Is the hat removed?", "no"}}};
  CHECK(lint_qa_set(negated).empty());

  QASet four{"f", {{"Q1?", "yes"}, {"Q2?", "yes"}, {"Q3?", "yes"}, {"Q4?", "yes"}}};
  const auto d = lint_qa_set(four);
  REQUIRE(d.size() == 1);
  CHECK(d[0].code == "count_out_of_range");
  CHECK(d[0].question_index == 0);
  CHECK(d[0].severity == Severity::warning);

  QASet colour{"c", {{"What colour is the car?", "Blue."}}};
  CHECK(codes(lint_qa_set(colour)) == std::vector<std::string>{"non_binary_answer"});

  QASet ref_only{"r", {{"Is the cat sleeping?", "yes"}, {"Is the dog running?", "yes"}}};
  const auto missing = lint_qa_set(ref_only, std::string_view("a dog running on the beach"));
  REQUIRE(missing.size() == 1);
  CHECK(missing[0].code == "caption_term_missing");
  CHECK(missing[0].question_index == 1);
  CHECK(lint_qa_set(ref_only).empty());
}

TEST_CASE("lint passes the monkey set and orders its output") {
  const auto sets = load_qa_instructions(kData + "/monkey_qa.json");
  const auto captions = load_captions(kData + "/monkey_captions.json");
  CHECK(lint_qa_set(sets.at(0), captions.at("cirr-monkey")).empty());

  QASet messy{"z", {{"Are the birds yellow?", "no"},
                    {"What colour?", "red"},
                    {"Is the cat asleep?", "no"},
                    {"Q4?", "yes"}}};
  const auto d = lint_qa_set(messy, std::string_view("blue birds"));
  for (std::size_t i = 1; i < d.size(); ++i) {
    CHECK(std::tie(d[i - 1].question_index, d[i - 1].code) <=
          std::tie(d[i].question_index, d[i].code));
  }
  CHECK(lint_qa_set(messy, std::string_view("blue birds")) == d);
}

TEST_CASE("word helpers") {
  CHECK(tokenize_words("Is the Dog's ball RED?") ==
        std::vector<std::string>{"is", "the", "dog", "s", "ball", "red"});
  CHECK(content_words("Is the monkey holding onto a branch?") ==
        std::vector<std::string>{"monkey", "holding", "branch"});
}

TEST_CASE("candidate files") {
  std::istringstream in(
      R"({"query_id":"q1","candidates":["a","b","c"],"scores":[3,2,1]})"
      "\n"
      R"({"query_id":"q2","candidates":["d"]})"
      "\n");
  const auto lists = parse_candidates(in, "c.jsonl");
  REQUIRE(lists.size() == 2);
  CHECK(lists[0].scores.has_value());
  CHECK_FALSE(lists[1].scores.has_value());
  const std::string text = serialize_candidates(lists);
  CHECK(text ==
        "{\"query_id\":\"q1\",\"candidates\":[\"a\",\"b\",\"c\"],\"scores\":[3.0,2.0,1.0]}\n"
        "{\"query_id\":\"q2\",\"candidates\":[\"d\"]}\n");
  std::istringstream back(text);
  CHECK(parse_candidates(back, "c.jsonl") == lists);

  std::istringstream dup("\n" R"({"query_id":"q","candidates":["a","b","a"]})");
  CHECK_THROWS_WITH(parse_candidates(dup, "c.jsonl"),
                    doctest::Contains("c.jsonl:2: duplicate id at ranks 1,3"));
  std::istringstream dupq(R"({"query_id":"q","candidates":["a"]})"
                          "\n"
                          R"({"query_id":"q","candidates":["b"]})");
  CHECK_THROWS_WITH(parse_candidates(dupq, "c.jsonl"), doctest::Contains("duplicate query_id"));
  std::istringstream bad("{oops}");
  CHECK_THROWS_WITH(parse_candidates(bad, "c.jsonl"), doctest::Contains("c.jsonl:1"));
  CHECK_THROWS_AS(load_candidates("/nonexistent/file.jsonl"), Error);
}

TEST_CASE("ground truth files") {
  std::istringstream in(R"({"query_id":"q","target":"t","subset":["a","t"]})"
                        "\n"
                        R"({"query_id":"r","target":"u"})");
  const auto truths = parse_ground_truth(in, "gt.jsonl");
  REQUIRE(truths.size() == 2);
  std::istringstream back(serialize_ground_truth(truths));
  CHECK(parse_ground_truth(back, "gt.jsonl") == truths);

  std::istringstream outside(R"({"query_id":"q","target":"t","subset":["a","b"]})");
  CHECK_THROWS_WITH(parse_ground_truth(outside, "gt.jsonl"),
                    doctest::Contains("target not in subset"));
}

TEST_CASE("reranked files round trip through disk") {
  std::vector<RerankedList> lists;
  for (int q = 0; q < 3; ++q) {
    RerankedList r;
    r.ranking.query_id = "q" + std::to_string(q);
    r.ranking.candidates = {{"x"}, {"y"}, {"z"}};
    r.keys = {1.0000001, 2.5 + q, 1.0 / 3.0};
    lists.push_back(r);
  }
  const auto path = scratch("reranked.jsonl").string();
  write_reranked(path, lists);
  const auto first = read_text_file(path);
  const auto loaded = load_reranked(path);
  CHECK(loaded == lists);
  write_reranked(path, loaded);
  CHECK(read_text_file(path) == first);

  const auto as_candidates = load_candidates(path);
  REQUIRE(as_candidates.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(as_candidates[i].candidates == lists[i].ranking.candidates);
  }

  std::istringstream no_keys(R"({"query_id":"q","candidates":["a"]})");
  CHECK_THROWS_AS(parse_reranked(no_keys, "r.jsonl"), Error);
}

TEST_CASE("captions parsing") {
  const auto c = parse_captions(R"({"q1": "is blue", "q2": "has two dogs"})");
  CHECK(c.at("q2") == "has two dogs");
  CHECK_THROWS_AS(parse_captions(R"({"q1": 3})"), Error);
  CHECK_THROWS_AS(parse_captions(R"([1])"), Error);
}
