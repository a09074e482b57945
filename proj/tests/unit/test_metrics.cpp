#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "vqa4cir/error.hpp"
#include "vqa4cir/metrics.hpp"

using namespace vqa4cir;

namespace {

// A ranking of `n` images with the target "t" at `rank`.
RunRecord run_with_target_at(std::size_t rank, std::size_t n = 60) {
  RunRecord r;
  r.final_ranking.query_id = "q" + std::to_string(rank);
  for (std::size_t i = 1; i <= n; ++i) {
    r.final_ranking.candidates.push_back({i == rank ? "t" : "x" + std::to_string(i)});
  }
  r.truth = {r.final_ranking.query_id, {"t"}, std::nullopt};
  return r;
}

RunRecord with_subset(std::vector<std::string> ranking, std::vector<std::string> subset) {
  RunRecord r;
  r.final_ranking.query_id = "q";
  for (auto& id : ranking) r.final_ranking.candidates.push_back({id});
  std::vector<ImageRef> s;
  for (auto& id : subset) s.push_back({id});
  r.truth = {"q", {"t"}, s};
  return r;
}

}  // namespace

TEST_CASE("recall at k") {
  std::vector<RunRecord> one{run_with_target_at(3)};
  CHECK(recall_at_k(one, 1) == 0.0);
  CHECK(recall_at_k(one, 5) == 1.0);
  std::vector<RunRecord> two{run_with_target_at(1), run_with_target_at(7)};
  CHECK(recall_at_k(two, 5) == 0.5);
  CHECK_THROWS_AS(recall_at_k(two, 0), Error);
  CHECK_THROWS_AS(recall_at_k(std::vector<RunRecord>{}, 1), Error);
}

TEST_CASE("recall at k matches a brute-force count") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> rank(1, 10);
  std::vector<RunRecord> runs;
  std::size_t within5 = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t r = rank(rng);
    if (r <= 5) ++within5;
    runs.push_back(run_with_target_at(r, 10));
  }
  CHECK(recall_at_k(runs, 5) == static_cast<double>(within5) / 100.0);
  double prev = 0.0;
  for (std::size_t k = 1; k <= 12; ++k) {
    const double v = recall_at_k(runs, k);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(prev == 1.0);
}

TEST_CASE("absent target is a miss") {
  RunRecord r = run_with_target_at(3, 5);
  r.truth.target = {"missing"};
  CHECK_FALSE(r.target_rank().has_value());
  std::vector<RunRecord> runs{r};
  CHECK(recall_at_k(runs, 50) == 0.0);
}

TEST_CASE("recall within the subset") {
  // subset members at global ranks 4, 9, 2, 30, 17; target at global rank 2
  std::vector<std::string> ranking;
  for (int i = 1; i <= 30; ++i) ranking.push_back("x" + std::to_string(i));
  ranking[1] = "t";
  std::vector<RunRecord> runs{with_subset(ranking, {"x4", "x9", "t", "x30", "x17"})};
  CHECK(recall_subset_at_k(runs, 1) == 1.0);

  std::vector<RunRecord> second{with_subset({"a", "b", "t", "c"}, {"t", "b", "c"})};
  CHECK(recall_subset_at_k(second, 1) == 0.0);
  CHECK(recall_subset_at_k(second, 2) == 1.0);

  std::vector<RunRecord> none{run_with_target_at(1)};
  CHECK_THROWS_WITH(recall_subset_at_k(none, 1), doctest::Contains("subset required"));
}

TEST_CASE("subset recall over all orderings of five members") {
  std::vector<std::string> members{"t", "a", "b", "c", "d"};
  std::sort(members.begin(), members.end());
  std::size_t perms = 0;
  do {
    // interleave distractors so global ranks differ from subset ranks
    std::vector<std::string> ranking;
    for (std::size_t i = 0; i < members.size(); ++i) {
      ranking.push_back("noise" + std::to_string(i));
      ranking.push_back(members[i]);
    }
    const auto pos = std::find(members.begin(), members.end(), "t") - members.begin();
    std::vector<RunRecord> runs{with_subset(ranking, {"a", "b", "c", "d", "t"})};
    for (std::size_t k = 1; k <= 5; ++k) {
      CHECK(recall_subset_at_k(runs, k) == (static_cast<std::size_t>(pos) < k ? 1.0 : 0.0));
    }
    ++perms;
  } while (std::next_permutation(members.begin(), members.end()));
  CHECK(perms == 120);
}

TEST_CASE("subset recall ignores non-subset images") {
  auto base = with_subset({"a", "t", "b"}, {"a", "t", "b"});
  auto noisy = with_subset({"z1", "a", "z2", "z3", "t", "z4", "b"}, {"a", "t", "b"});
  std::vector<RunRecord> r1{base}, r2{noisy};
  for (std::size_t k = 1; k <= 3; ++k) CHECK(recall_subset_at_k(r1, k) == recall_subset_at_k(r2, k));
}

TEST_CASE("composite averages from published cells") {
  CHECK(cirr_composite_average(0.8212, 0.8065) == doctest::Approx(0.81385));
  CHECK(std::abs(cirr_composite_average(0.8423, 0.8207) * 100 - 83.15) <= 0.01);

  const std::vector<CategoryRecall> sprc{
      {"dress", 0.4780, 0.7270}, {"shirt", 0.5584, 0.7437}, {"toptee", 0.5889, 0.7899}};
  const auto report = fashioniq_summary_from_recalls(sprc);
  CHECK(std::abs(report.recall_at.at(10) * 100 - 54.17) <= 0.01);
  CHECK(std::abs(*report.composite_average * 100 - 64.76) <= 0.01);
  CHECK(report.categories.at("shirt").at(50) == 0.7437);

  const std::vector<CategoryRecall> flat{{"a", 0.3, 0.3}, {"b", 0.3, 0.3}};
  const auto f = fashioniq_summary_from_recalls(flat);
  CHECK(f.recall_at.at(10) == doctest::Approx(0.3));
  CHECK(f.recall_at.at(50) == doctest::Approx(0.3));
  CHECK(*f.composite_average == doctest::Approx(0.3));
  CHECK_THROWS_AS(fashioniq_summary_from_recalls(std::vector<CategoryRecall>{}), Error);
}

TEST_CASE("perfect CIRR run") {
  std::vector<RunRecord> runs;
  for (int i = 0; i < 4; ++i) runs.push_back(with_subset({"t", "a", "b"}, {"t", "a", "b"}));
  const auto r = cirr_summary(runs);
  CHECK(r.n_queries == 4);
  for (const auto& [k, v] : r.recall_at) CHECK(v == 1.0);
  for (const auto& [k, v] : *r.recall_subset_at) CHECK(v == 1.0);
  CHECK(*r.composite_average == 1.0);
  const std::string table = format_table(r);
  CHECK(table.find("R@1") != std::string::npos);
  CHECK(table.find("100.00") != std::string::npos);
  CHECK(table.find("(n = 4)") != std::string::npos);
  const auto j = to_json(r);
  CHECK(j["composite_average"] == 1.0);
  CHECK(j["recall_subset_at"]["1"] == 1.0);
}

TEST_CASE("fashion-iq summary from runs") {
  std::map<std::string, std::vector<RunRecord>> cats;
  cats["dress"] = {run_with_target_at(3), run_with_target_at(20)};
  cats["shirt"] = {run_with_target_at(55), run_with_target_at(60)};
  const auto r = fashioniq_summary(cats);
  CHECK(r.categories.at("dress").at(10) == 0.5);
  CHECK(r.categories.at("dress").at(50) == 1.0);
  CHECK(r.categories.at("shirt").at(10) == 0.0);
  CHECK(r.categories.at("shirt").at(50) == 0.0);
  CHECK(r.recall_at.at(10) == 0.25);
  CHECK(r.recall_at.at(50) == 0.5);
  CHECK(*r.composite_average == 0.375);
  CHECK(r.n_queries == 4);
  cats["empty"] = {};
  CHECK_THROWS_AS(fashioniq_summary(cats), Error);
}
