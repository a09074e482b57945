#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "naive_rerank.hpp"
#include "vqa4cir/error.hpp"
#include "vqa4cir/rerank.hpp"

using namespace vqa4cir;
using fixtures::ids;
using fixtures::make_list;
using fixtures::make_matrix;

namespace {

RerankParams params(double alpha, double beta, std::size_t top_c,
                    RerankMode mode = RerankMode::caption_wise) {
  return {alpha, beta, top_c, mode};
}

std::vector<std::string> names(std::initializer_list<int> ranks) {
  std::vector<std::string> out;
  for (int r : ranks) out.push_back("orig-" + std::to_string(r));
  return out;
}

}  // namespace

TEST_CASE("consistency score") {
  const std::vector<double> ones{1, 1, 1};
  CHECK(consistency_score(ones) == 1.0);
  const std::vector<double> mixed{0.9, 0.8, 0.5};
  CHECK(consistency_score(mixed) == doctest::Approx(0.36).epsilon(1e-15));
  const std::vector<double> zero{0.7, 0.0, 0.9};
  CHECK(consistency_score(zero) == 0.0);

  CHECK_THROWS_WITH(consistency_score(std::vector<double>{}), "no questions");
  CHECK_THROWS_WITH(consistency_score(std::vector<double>{0.5, 1.2}), "probability out of range");
  CHECK_THROWS_WITH(consistency_score(std::vector<double>{-0.1}), "probability out of range");
}

TEST_CASE("consistency score uses log space for long sequences") {
  std::vector<double> probs(40, 0.5);
  CHECK(consistency_score(probs) == doctest::Approx(std::ldexp(1.0, -40)).epsilon(1e-12));
  probs[7] = 0.0;
  CHECK(consistency_score(probs) == 0.0);
  std::vector<double> tiny(200, 0.01);
  CHECK(consistency_score(tiny) >= 0.0);
  std::vector<double> small(60, 0.9);
  CHECK(consistency_score(small) <= 0.9);
}

TEST_CASE("rank penalty") {
  CHECK(rank_penalty(0.0, params(20, 10, 1)) == 20.0);
  CHECK(rank_penalty(1.0, params(20, 10, 1)) ==
        doctest::Approx(20.0 * std::exp(-10.0)).epsilon(1e-14));
  CHECK(rank_penalty(1.0, params(20, 10, 1)) == doctest::Approx(9.0800e-4).epsilon(1e-4));
  CHECK(rank_penalty(0.3, params(0, 10, 1)) == 0.0);
  CHECK_THROWS(rank_penalty(1.5, params(20, 10, 1)));

  double prev = rank_penalty(0.0, params(20, 10, 1));
  for (int i = 1; i <= 100; ++i) {
    const double cur = rank_penalty(i / 100.0, params(20, 10, 1));
    CHECK(cur < prev);
    prev = cur;
  }
  for (int i = 0; i <= 10; ++i) CHECK(rank_penalty(i / 10.0, params(5, 0, 1)) == 5.0);
}

TEST_CASE("caption-wise rerank lifts the fully consistent candidate") {
  const auto list = make_list("dog", 4);
  const auto m = make_matrix(list, {{0.0}, {0.0}, {0.0}, {1.0}});
  const auto keys = compute_rank_keys(list, m, params(20, 10, 4));
  REQUIRE(keys.size() == 4);
  CHECK(keys[0].image.id == "orig-4");
  CHECK(keys[0].key == doctest::Approx(4.000908).epsilon(1e-6));
  CHECK(keys[1].key == 21.0);
  CHECK(keys[2].key == 22.0);
  CHECK(keys[3].key == 23.0);
  CHECK(ids(rerank_caption_wise(list, m, params(20, 10, 4))) == names({4, 1, 2, 3}));

  const auto out = rerank(list, m, params(20, 10, 4));
  CHECK(ids(out.ranking) == names({4, 1, 2, 3}));
  CHECK(out.keys.size() == 4);
  CHECK(out.ranking.query_id == "dog");
}

TEST_CASE("caption-wise identities") {
  const auto list = make_list("q", 6);
  const auto m = make_matrix(list, {{0.3, 0.9}, {0.8, 0.1}, {1, 1}, {0, 0}, {0.5, 0.5}, {1, 0}});
  CHECK(ids(rerank_caption_wise(list, m, params(0, 10, 6))) == ids(list));

  const auto uniform = make_matrix(list, {{0.5}, {0.5}, {0.5}, {0.5}, {0.5}, {0.5}});
  CHECK(ids(rerank_caption_wise(list, uniform, params(20, 10, 6))) == ids(list));
}

TEST_CASE("tail candidates keep their rank as key") {
  const auto list = make_list("q", 5);
  const auto m = make_matrix(list, {{0.0}, {1.0}});
  const auto keys = compute_rank_keys(list, m, params(2.5, 10, 2));
  // orig-1 key 3.5 falls behind the tail candidate orig-3 (key 3)
  CHECK(ids(rerank_caption_wise(list, m, params(2.5, 10, 2))) == names({2, 3, 1, 4, 5}));
  for (const auto& k : keys) {
    if (k.original_rank > 2) {
      CHECK(k.penalty == 0.0);
      CHECK(k.key == static_cast<double>(k.original_rank));
    }
  }
}

TEST_CASE("question-wise rerank follows per-question re-sorting") {
  const auto list = make_list("q", 3);
  const auto m = make_matrix(list, {{1, 0}, {0, 1}, {1, 1}});
  CHECK(ids(rerank_question_wise(list, m, params(20, 10, 3, RerankMode::question_wise))) ==
        names({3, 2, 1}));
}

TEST_CASE("single question makes both modes agree") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto list = make_list("q", 10);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 7; ++i) rows.push_back({u(rng)});
    const auto m = make_matrix(list, rows);
    const auto p = params(5 + trial % 20, 10, 7);
    auto q = p;
    q.mode = RerankMode::question_wise;
    CHECK(ids(rerank_caption_wise(list, m, p)) == ids(rerank_question_wise(list, m, q)));
  }
}

TEST_CASE("consistent questions with a steep penalty leave the order unchanged") {
  const auto list = make_list("q", 5);
  const auto m = make_matrix(list, {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
  auto p = params(20, 50, 5, RerankMode::question_wise);
  CHECK(ids(rerank_question_wise(list, m, p)) == ids(list));
}

TEST_CASE("rerank errors") {
  const auto list = make_list("q", 4);
  const auto short_m = make_matrix(list, {{0.5}, {0.5}});
  CHECK_THROWS_WITH(rerank_caption_wise(list, short_m, params(20, 10, 3)),
                    doctest::Contains("uncovered candidate 'orig-3' at rank 3"));
  CHECK_NOTHROW(rerank_caption_wise(list, short_m, params(20, 10, 2)));

  auto other = short_m;
  other.query_id = "other";
  CHECK_THROWS_AS(rerank_caption_wise(list, other, params(20, 10, 2)), Error);
  CHECK_THROWS_WITH(rerank_caption_wise(list, short_m, params(-1, 10, 2)),
                    "alpha must be non-negative");
}

TEST_CASE("rerank matches the naive key sort on small lists") {
  std::mt19937_64 rng(2024);
  const std::vector<double> levels{0.0, 0.25, 0.5, 1.0};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    const std::size_t kq = 1 + rng() % 4;
    const std::size_t c = 1 + rng() % 8;
    const double alpha = std::vector<double>{0, 1.5, 5, 20}[rng() % 4];
    const double beta = std::vector<double>{0, 2, 10}[rng() % 3];
    std::vector<std::vector<double>> rows(std::min(c, n), std::vector<double>(kq));
    for (auto& r : rows) {
      for (auto& v : r) {
        v = (rng() % 2) ? levels[rng() % levels.size()]
                        : std::uniform_real_distribution<double>(0, 1)(rng);
      }
    }
    const auto list = make_list("q", n);
    const auto m = make_matrix(list, rows);
    const naive::Params np{alpha, beta, c};

    std::vector<std::string> expected;
    for (auto i : naive::caption_wise(rows, n, np)) expected.push_back(list.candidates[i].id);
    CHECK(ids(rerank_caption_wise(list, m, params(alpha, beta, c))) == expected);

    expected.clear();
    for (auto i : naive::question_wise(rows, n, kq, np)) expected.push_back(list.candidates[i].id);
    CHECK(ids(rerank_question_wise(list, m, params(alpha, beta, c, RerankMode::question_wise))) ==
          expected);
  }
}

TEST_CASE("rerank output is a permutation and is deterministic") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 30;
    const auto list = make_list("q", n);
    std::vector<std::vector<double>> rows(20, std::vector<double>(3));
    for (auto& r : rows) for (auto& v : r) v = u(rng);
    const auto m = make_matrix(list, rows);
    for (auto mode : {RerankMode::caption_wise, RerankMode::question_wise}) {
      const auto p = params(20, 10, 20, mode);
      const auto a = rerank(list, m, p);
      const auto b = rerank(list, m, p);
      CHECK(a == b);
      auto sorted = ids(a.ranking);
      std::sort(sorted.begin(), sorted.end());
      auto expected = ids(list);
      std::sort(expected.begin(), expected.end());
      CHECK(sorted == expected);
    }
  }
}

TEST_CASE("bounded displacement against the tail") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double alpha : {0.0, 3.5, 7.0, 20.0}) {
    const std::size_t n = 40, c = 15;
    const auto list = make_list("q", n);
    std::vector<std::vector<double>> rows(c, std::vector<double>(2));
    for (auto& r : rows) for (auto& v : r) v = u(rng) < 0.3 ? 0.0 : u(rng);
    const auto m = make_matrix(list, rows);
    const auto out = ids(rerank_caption_wise(list, m, params(alpha, 10, c)));
    std::vector<std::size_t> orig_of(n);
    for (std::size_t pos = 0; pos < n; ++pos) orig_of[pos] = std::stoul(out[pos].substr(5));
    std::size_t last_tail = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t o = orig_of[pos];
      if (o > c) {
        CHECK(o > last_tail);  // tail order preserved
        last_tail = o;
        continue;
      }
      std::size_t overtaking = 0;
      for (std::size_t before = 0; before < pos; ++before) {
        if (orig_of[before] > o && orig_of[before] > c) ++overtaking;
      }
      CHECK(overtaking <= static_cast<std::size_t>(std::ceil(alpha)));
    }
  }
}

TEST_CASE("dominance condition over every pair in the block") {
  const std::size_t c = 12;
  for (double alpha : {2.5, 7.3, 20.0}) {
    for (double beta : {0.7, 3.0, 10.0}) {
      const double reach = alpha * (1.0 - std::exp(-beta));
      for (std::size_t a = 1; a <= c; ++a) {
        for (std::size_t b = 1; b <= c; ++b) {
          if (a == b) continue;
          const auto list = make_list("q", c + 5);
          std::vector<std::vector<double>> rows(c, std::vector<double>{0.5});
          rows[a - 1][0] = 1.0;
          rows[b - 1][0] = 0.0;
          const auto out = ids(rerank_caption_wise(list, make_matrix(list, rows),
                                                   params(alpha, beta, c)));
          const auto pos_a = std::find(out.begin(), out.end(), list.candidates[a - 1].id);
          const auto pos_b = std::find(out.begin(), out.end(), list.candidates[b - 1].id);
          const bool expected = static_cast<double>(a) - static_cast<double>(b) < reach;
          CHECK_MESSAGE((pos_a < pos_b) == expected, "a=", a, " b=", b, " alpha=", alpha,
                        " beta=", beta);
        }
      }
    }
  }
}

TEST_CASE("hard rejection limit") {
  std::mt19937_64 rng(77);
  const std::size_t c = 15;
  const auto p = params(20, 10, c);
  REQUIRE(p.alpha * (1 - std::exp(-p.beta)) >= static_cast<double>(c));
  REQUIRE(1 + p.alpha > static_cast<double>(c));
  for (int trial = 0; trial < 100; ++trial) {
    const auto list = make_list("q", 30);
    std::vector<std::vector<double>> rows(c, std::vector<double>(1));
    std::vector<bool> consistent(c);
    for (std::size_t i = 0; i < c; ++i) {
      consistent[i] = rng() % 2;
      rows[i][0] = consistent[i] ? 1.0 : 0.0;
    }
    const auto out = ids(rerank_caption_wise(list, make_matrix(list, rows), p));
    std::size_t last_good = 0, first_bad = out.size();
    for (std::size_t pos = 0; pos < out.size(); ++pos) {
      const std::size_t o = std::stoul(out[pos].substr(5));
      if (o > c) continue;
      if (consistent[o - 1]) last_good = pos;
      else first_bad = std::min(first_bad, pos);
    }
    CHECK(last_good < first_bad);
  }
}
