#pragma once

// Answer oracles: sources of p_k, the probability that an image's answer to
// question k matches the expected answer from the QA set.

#include <chrono>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>

#include "vqa4cir/types.hpp"

namespace vqa4cir {

struct OracleRequest {
  std::string query_id;
  ImageRef image;
  std::size_t question_index = 1;  ///< 1-based k
  std::string question;
  std::string expected_answer;
};

/// Implementations must be callable concurrently from several threads.
class AnswerOracle {
 public:
  virtual ~AnswerOracle() = default;
  virtual double probability(const OracleRequest& request) const = 0;
};

/// Validates the request, queries the oracle and checks the value is in [0, 1].
double answer_probability(const AnswerOracle& oracle, const OracleRequest& request);

/// Table of precomputed probabilities keyed by (query_id, image_id, k).
class FileOracle final : public AnswerOracle {
 public:
  /// Reads the JSON Lines format {"query_id", "image_id", "k", "p"}.
  static FileOracle from_stream(std::istream& in, std::string_view source_name);
  static FileOracle from_file(const std::string& path);

  void insert(std::string query_id, std::string image_id, std::size_t k, double p);
  std::size_t size() const noexcept { return table_.size(); }
  /// JSON Lines sorted by (query_id, image_id, k); readable by from_stream.
  std::string serialize() const;

  double probability(const OracleRequest& request) const override;

 private:
  std::map<std::tuple<std::string, std::string, std::size_t>, double> table_;
};

/// Either a Beta(a, b) law or an exact constant.
struct ProbabilityModel {
  enum class Kind { beta, constant };
  Kind kind = Kind::beta;
  double a = 1.0;
  double b = 1.0;
  double value = 0.5;

  static ProbabilityModel beta_law(double a, double b) { return {Kind::beta, a, b, 0.0}; }
  static ProbabilityModel constant(double v) { return {Kind::constant, 1.0, 1.0, v}; }

  double mean() const { return kind == Kind::beta ? a / (a + b) : value; }
  void validate() const;
};

struct SimulatedOracleParams {
  ProbabilityModel target = ProbabilityModel::beta_law(8.0, 1.0);
  ProbabilityModel nontarget = ProbabilityModel::beta_law(2.0, 5.0);
  std::uint64_t seed = 0;

  void validate() const;
};

/// Hash-derived draw: a pure function of (seed, image.id, question_index),
/// with the law picked by is_target. The underlying random stream does not
/// depend on is_target.
double simulated_oracle_sample(const SimulatedOracleParams& params, bool is_target,
                               const ImageRef& image, std::size_t question_index);

/// Oracle over simulated draws; the target of each query is looked up by query_id.
class SimulatedOracle final : public AnswerOracle {
 public:
  SimulatedOracle(SimulatedOracleParams params,
                  std::unordered_map<std::string, std::string> target_by_query);

  double probability(const OracleRequest& request) const override;

 private:
  SimulatedOracleParams params_;
  std::unordered_map<std::string, std::string> targets_;
};

/// Adapts a backend that only emits an answer string: a match maps to
/// 1 - epsilon, a mismatch to epsilon.
class BinaryVerdictOracle final : public AnswerOracle {
 public:
  using Answerer = std::function<std::string(const OracleRequest&)>;

  explicit BinaryVerdictOracle(Answerer answerer, double epsilon = 1e-3);

  double probability(const OracleRequest& request) const override;

 private:
  Answerer answerer_;
  double epsilon_;
};

/// POST <endpoint>/answer with {"query_id","image_id","question","expected_answer"},
/// expecting {"probability": number}. Failures raise OracleError.
double http_oracle_query(std::string_view endpoint, const OracleRequest& request,
                         std::chrono::milliseconds timeout);

class HttpOracle final : public AnswerOracle {
 public:
  static constexpr std::ptrdiff_t kMaxInFlightLimit = 256;

  HttpOracle(std::string endpoint, std::chrono::milliseconds timeout,
             std::size_t max_in_flight = 8);

  double probability(const OracleRequest& request) const override;
  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<std::counting_semaphore<kMaxInFlightLimit>> slots_;
};

/// min(top_c, |list|) x K matrix; row i is the candidate at rank i, column k
/// is question k. Calls fan out over up to max_in_flight threads. On failure
/// the error with the smallest (rank, k) is rethrown with that context.
AnswerMatrix build_answer_matrix(const AnswerOracle& oracle, const RankedList& list,
                                 const QASet& qa, std::size_t top_c,
                                 std::size_t max_in_flight = 8);

}  // namespace vqa4cir
