#pragma once

// Fine-tuning objective for the answer model, as a plain numeric function.
//
// Caption-wise: with P = prod_k p_k clamped to [eps, 1 - eps],
//   loss = -log((1 - y)/2 + y * P)
// i.e. -log P for the target (y = +1) and -log(1 - P) otherwise (y = -1).
//
// Question-wise: the same binary objective per question, averaged over K, with
// each p_k clamped individually. It equals the caption-wise loss when K = 1.

#include <span>
#include <vector>

namespace vqa4cir {

struct LossConfig {
  double clamp_epsilon = 1e-7;

  void validate() const;
};

double caption_wise_loss(int label, std::span<const double> probs, const LossConfig& cfg = {});

/// d loss / d p_j. Throws Error(invalid_argument, "non-differentiable region")
/// when P or any p_j sits on or beyond a clamp boundary.
std::vector<double> caption_wise_loss_gradient(int label, std::span<const double> probs,
                                               const LossConfig& cfg = {});

double question_wise_loss(int label, std::span<const double> probs, const LossConfig& cfg = {});

}  // namespace vqa4cir
