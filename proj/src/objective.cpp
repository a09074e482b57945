#include "vqa4cir/objective.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "vqa4cir/error.hpp"

namespace vqa4cir {

namespace {

void check_inputs(int label, std::span<const double> probs) {
  if (label != 1 && label != -1) {
    throw Error(ErrorKind::invalid_argument, fmt::format("label {} not in {{+1, -1}}", label));
  }
  if (probs.empty()) throw Error(ErrorKind::invalid_argument, "no questions");
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::invalid_argument, "probability out of range");
    }
  }
}

double product(std::span<const double> probs) {
  double p = 1.0;
  for (double v : probs) p *= v;
  return p;
}

// -log of the label-selected likelihood for an already clamped probability.
double binary_nll(int label, double p) {
  return label == 1 ? -std::log(p) : -std::log1p(-p);
}

}  // namespace

void LossConfig::validate() const {
  if (!(clamp_epsilon > 0.0 && clamp_epsilon < 0.5)) {
    throw Error(ErrorKind::config, "clamp_epsilon must lie in (0, 0.5)");
  }
}

double caption_wise_loss(int label, std::span<const double> probs, const LossConfig& cfg) {
  cfg.validate();
  check_inputs(label, probs);
  const double eps = cfg.clamp_epsilon;
  return binary_nll(label, std::clamp(product(probs), eps, 1.0 - eps));
}

std::vector<double> caption_wise_loss_gradient(int label, std::span<const double> probs,
                                               const LossConfig& cfg) {
  cfg.validate();
  check_inputs(label, probs);
  const double eps = cfg.clamp_epsilon;
  const double P = product(probs);
  bool clamped = !(P > eps && P < 1.0 - eps);
  for (double p : probs) clamped = clamped || !(p > 0.0 && p < 1.0);
  if (clamped) throw Error(ErrorKind::invalid_argument, "non-differentiable region");

  std::vector<double> grad(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j) {
    grad[j] = label == 1 ? -1.0 / probs[j] : P / ((1.0 - P) * probs[j]);
  }
  return grad;
}

double question_wise_loss(int label, std::span<const double> probs, const LossConfig& cfg) {
  cfg.validate();
  check_inputs(label, probs);
  const double eps = cfg.clamp_epsilon;
  double sum = 0.0;
  for (double p : probs) sum += binary_nll(label, std::clamp(p, eps, 1.0 - eps));
  return sum / static_cast<double>(probs.size());
}

}  // namespace vqa4cir
