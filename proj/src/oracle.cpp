#include "vqa4cir/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include <boost/random/beta_distribution.hpp>
#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "vqa4cir/error.hpp"
#include "vqa4cir/seeding.hpp"

namespace vqa4cir {

using nlohmann::json;

double answer_probability(const AnswerOracle& oracle, const OracleRequest& request) {
  if (request.image.id.empty() || request.question.empty() ||
      request.expected_answer.empty()) {
    throw Error(ErrorKind::invalid_argument, "oracle request fields must be non-empty");
  }
  if (request.question_index < 1) {
    throw Error(ErrorKind::invalid_argument, "question index is 1-based");
  }
  const double p = oracle.probability(request);
  if (!(p >= 0.0 && p <= 1.0)) {
    throw OracleError(OracleFailure::protocol_violation,
                      fmt::format("protocol violation: probability {} outside [0, 1]", p));
  }
  return p;
}

// ---------------------------------------------------------------------------
// FileOracle

FileOracle FileOracle::from_stream(std::istream& in, std::string_view source_name) {
  FileOracle oracle;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& what) {
      return Error(ErrorKind::validation,
                   fmt::format("{}:{}: {}", source_name, line_no, what));
    };
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::parse, fmt::format("{}:{}: malformed JSON at byte {}: {}",
                                                source_name, line_no, e.byte, e.what()));
    }
    if (!record.is_object()) throw fail("record is not an object");
    for (const char* key : {"query_id", "image_id", "k", "p"}) {
      if (!record.contains(key)) throw fail(fmt::format("missing key '{}'", key));
    }
    if (!record["query_id"].is_string() || !record["image_id"].is_string()) {
      throw fail("query_id and image_id must be strings");
    }
    if (!record["k"].is_number_integer() || record["k"].get<long long>() < 1) {
      throw fail("k must be a positive integer");
    }
    if (!record["p"].is_number()) throw fail("p must be a number");
    const double p = record["p"].get<double>();
    if (!(p >= 0.0 && p <= 1.0)) throw fail("probability out of range");
    oracle.insert(record["query_id"].get<std::string>(), record["image_id"].get<std::string>(),
                  record["k"].get<std::size_t>(), p);
  }
  return oracle;
}

FileOracle FileOracle::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path));
  return from_stream(in, path);
}

std::string FileOracle::serialize() const {
  std::string out;
  for (const auto& [key, p] : table_) {
    nlohmann::ordered_json record;
    record["query_id"] = std::get<0>(key);
    record["image_id"] = std::get<1>(key);
    record["k"] = std::get<2>(key);
    record["p"] = p;
    out += record.dump();
    out += '\n';
  }
  return out;
}

void FileOracle::insert(std::string query_id, std::string image_id, std::size_t k, double p) {
  table_.insert_or_assign({std::move(query_id), std::move(image_id), k}, p);
}

double FileOracle::probability(const OracleRequest& request) const {
  auto it = table_.find({request.query_id, request.image.id, request.question_index});
  if (it == table_.end()) {
    throw OracleError(OracleFailure::missing_entry,
                      fmt::format("missing entry for ({}, {}, k={})", request.query_id,
                                  request.image.id, request.question_index));
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Simulated oracle

void ProbabilityModel::validate() const {
  if (kind == Kind::beta) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
      throw Error(ErrorKind::config, "beta shape parameters must be positive");
    }
  } else if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorKind::config, "constant probability must lie in [0, 1]");
  }
}

void SimulatedOracleParams::validate() const {
  target.validate();
  nontarget.validate();
}

double simulated_oracle_sample(const SimulatedOracleParams& params, bool is_target,
                               const ImageRef& image, std::size_t question_index) {
  const ProbabilityModel& model = is_target ? params.target : params.nontarget;
  if (model.kind == ProbabilityModel::Kind::constant) return model.value;
  std::mt19937_64 engine(derive_seed(params.seed, fnv1a(image.id), question_index));
  boost::random::beta_distribution<double> draw(model.a, model.b);
  return std::clamp(draw(engine), 0.0, 1.0);
}

SimulatedOracle::SimulatedOracle(SimulatedOracleParams params,
                                 std::unordered_map<std::string, std::string> target_by_query)
    : params_(params), targets_(std::move(target_by_query)) {
  params_.validate();
}

double SimulatedOracle::probability(const OracleRequest& request) const {
  auto it = targets_.find(request.query_id);
  const bool is_target = it != targets_.end() && it->second == request.image.id;
  return simulated_oracle_sample(params_, is_target, request.image, request.question_index);
}

// ---------------------------------------------------------------------------
// Binary verdict adapter

BinaryVerdictOracle::BinaryVerdictOracle(Answerer answerer, double epsilon)
    : answerer_(std::move(answerer)), epsilon_(epsilon) {
  if (!(epsilon_ > 0.0 && epsilon_ < 0.5)) {
    throw Error(ErrorKind::config, "epsilon must lie in (0, 0.5)");
  }
}

double BinaryVerdictOracle::probability(const OracleRequest& request) const {
  const bool match =
      normalize_answer(answerer_(request)) == normalize_answer(request.expected_answer);
  return match ? 1.0 - epsilon_ : epsilon_;
}

// ---------------------------------------------------------------------------
// HTTP oracle

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

Endpoint split_endpoint(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorKind::config, fmt::format("endpoint '{}' lacks a scheme", url));
  }
  if (url.substr(0, scheme_end) != "http") {
    throw Error(ErrorKind::config, fmt::format("unsupported scheme in '{}'", url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = std::string(url.substr(0, path_start));
  if (path_start != std::string_view::npos) ep.path = std::string(url.substr(path_start));
  while (!ep.path.empty() && ep.path.back() == '/') ep.path.pop_back();
  return ep;
}

}  // namespace

double http_oracle_query(std::string_view endpoint, const OracleRequest& request,
                         std::chrono::milliseconds timeout) {
  if (timeout.count() <= 0) throw Error(ErrorKind::config, "timeout must be positive");
  const Endpoint ep = split_endpoint(endpoint);

  httplib::Client client(ep.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  const json body = {{"query_id", request.query_id},
                     {"image_id", request.image.id},
                     {"question", request.question},
                     {"expected_answer", request.expected_answer}};
  auto res = client.Post(ep.path + "/answer", body.dump(), "application/json");
  if (!res) {
    throw OracleError(OracleFailure::backend_unavailable,
                      fmt::format("backend unavailable (retryable): {}",
                                  httplib::to_string(res.error())));
  }
  if (res->status < 200 || res->status > 299) {
    throw OracleError(OracleFailure::backend_rejected,
                      fmt::format("backend rejected (non-retryable): HTTP {}", res->status));
  }
  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::parse_error&) {
    throw OracleError(OracleFailure::protocol_violation, "protocol violation: malformed body");
  }
  if (!reply.is_object() || !reply.contains("probability") ||
      !reply["probability"].is_number()) {
    throw OracleError(OracleFailure::protocol_violation,
                      "protocol violation: missing numeric 'probability'");
  }
  const double p = reply["probability"].get<double>();
  if (!(p >= 0.0 && p <= 1.0)) {
    throw OracleError(OracleFailure::protocol_violation,
                      fmt::format("protocol violation: probability {} outside [0, 1]", p));
  }
  return p;
}

HttpOracle::HttpOracle(std::string endpoint, std::chrono::milliseconds timeout,
                       std::size_t max_in_flight)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
  if (max_in_flight < 1 || max_in_flight > static_cast<std::size_t>(kMaxInFlightLimit)) {
    throw Error(ErrorKind::config,
                fmt::format("max in-flight requests must be in [1, {}]", kMaxInFlightLimit));
  }
  if (timeout_.count() <= 0) throw Error(ErrorKind::config, "timeout must be positive");
  split_endpoint(endpoint_);
  slots_ = std::make_unique<std::counting_semaphore<kMaxInFlightLimit>>(
      static_cast<std::ptrdiff_t>(max_in_flight));
}

double HttpOracle::probability(const OracleRequest& request) const {
  slots_->acquire();
  struct Release {
    std::counting_semaphore<kMaxInFlightLimit>* s;
    ~Release() { s->release(); }
  } release{slots_.get()};
  return http_oracle_query(endpoint_, request, timeout_);
}

// ---------------------------------------------------------------------------
// Matrix assembly

AnswerMatrix build_answer_matrix(const AnswerOracle& oracle, const RankedList& list,
                                 const QASet& qa, std::size_t top_c,
                                 std::size_t max_in_flight) {
  if (list.query_id != qa.query_id) {
    throw Error(ErrorKind::validation,
                fmt::format("query_id mismatch: candidates '{}' vs QA set '{}'", list.query_id,
                            qa.query_id));
  }
  if (top_c < 1) throw Error(ErrorKind::config, "top_c must be at least 1");
  if (qa.pairs.empty()) throw Error(ErrorKind::validation, "empty QASet");

  const std::size_t rows = std::min(top_c, list.size());
  const std::size_t k_count = qa.size();
  std::vector<std::string> ids;
  ids.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) ids.push_back(list.candidates[i].id);
  AnswerMatrix matrix(list.query_id, std::move(ids), k_count);

  const std::size_t cells = rows * k_count;
  std::vector<std::exception_ptr> errors(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t cell = next++; cell < cells; cell = next++) {
      const std::size_t r = cell / k_count;
      const std::size_t k = cell % k_count;
      OracleRequest req{list.query_id, list.candidates[r], k + 1, qa.pairs[k].question,
                        qa.pairs[k].normalized_answer()};
      try {
        matrix.at(r, k) = answer_probability(oracle, req);
      } catch (...) {
        errors[cell] = std::current_exception();
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(max_in_flight, 1, std::max<std::size_t>(cells, 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t cell = 0; cell < cells; ++cell) {
    if (!errors[cell]) continue;
    const std::size_t rank = cell / k_count + 1;
    const std::size_t k = cell % k_count + 1;
    try {
      std::rethrow_exception(errors[cell]);
    } catch (const OracleError& e) {
      std::string what = e.what();
      if (e.failure() == OracleFailure::missing_entry) what = "missing entry";
      throw OracleError(e.failure(), fmt::format("{} at (rank {}, k={})", what, rank, k));
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("{} at (rank {}, k={})", e.what(), rank, k));
    } catch (const std::exception& e) {
      throw Error(ErrorKind::oracle, fmt::format("{} at (rank {}, k={})", e.what(), rank, k));
    }
  }
  return matrix;
}

}  // namespace vqa4cir
