#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vqa4cir/types.hpp"

namespace fixtures {

inline vqa4cir::RankedList make_list(const std::string& query_id, std::size_t n) {
  vqa4cir::RankedList list;
  list.query_id = query_id;
  for (std::size_t i = 1; i <= n; ++i) list.candidates.push_back({"orig-" + std::to_string(i)});
  return list;
}

// rows[i] becomes the matrix row of the candidate at rank i + 1.
inline vqa4cir::AnswerMatrix make_matrix(const vqa4cir::RankedList& list,
                                         const std::vector<std::vector<double>>& rows) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < rows.size(); ++i) ids.push_back(list.candidates[i].id);
  vqa4cir::AnswerMatrix m(list.query_id, ids, rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < rows[r].size(); ++k) m.at(r, k) = rows[r][k];
  }
  return m;
}

inline std::vector<std::string> ids(const vqa4cir::RankedList& list) {
  std::vector<std::string> out;
  for (const auto& c : list.candidates) out.push_back(c.id);
  return out;
}

}  // namespace fixtures
