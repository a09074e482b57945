#pragma once

// Reference rerankers for tests: materialize every key, then sort naively.

#include <cmath>
#include <cstddef>
#include <vector>

namespace naive {

struct Params {
  double alpha;
  double beta;
  std::size_t top_c;
};

// rows[i][k] is p_k of the candidate at original rank i + 1 (rows.size() >= head).
// Returns original 0-based indices in final order.
inline std::vector<std::size_t> caption_wise(const std::vector<std::vector<double>>& rows,
                                             std::size_t n, const Params& p) {
  std::vector<double> key(n);
  for (std::size_t i = 0; i < n; ++i) {
    key[i] = static_cast<double>(i + 1);
    if (i < p.top_c) {
      double prod = 1.0;
      for (double v : rows[i]) prod = prod * v;
      key[i] += p.alpha * std::exp(-p.beta * prod);
    }
  }
  std::vector<std::size_t> order;
  std::vector<bool> taken(n, false);
  // selection sort: smallest key, then smallest original index
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best == n || key[i] < key[best]) best = i;
    }
    taken[best] = true;
    order.push_back(best);
  }
  return order;
}

inline std::vector<std::size_t> question_wise(const std::vector<std::vector<double>>& rows,
                                              std::size_t n, std::size_t questions,
                                              const Params& p) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t k = 0; k < questions; ++k) {
    std::vector<double> key(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t i = order[pos];
      key[pos] = static_cast<double>(pos + 1);
      if (i < p.top_c) key[pos] += p.alpha * std::exp(-p.beta * rows[i][k]);
    }
    std::vector<std::size_t> next;
    std::vector<bool> taken(n, false);
    for (std::size_t step = 0; step < n; ++step) {
      std::size_t best = n;
      for (std::size_t pos = 0; pos < n; ++pos) {
        if (taken[pos]) continue;
        if (best == n || key[pos] < key[best]) best = pos;
      }
      taken[best] = true;
      next.push_back(order[best]);
    }
    order = next;
  }
  return order;
}

}  // namespace naive
