#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emorec/nn/matrix.hpp"

namespace emorec::text {

using nn::Vector;

/// Below this norm an embedding is treated as zero and its cosine with
/// anything is taken as 0.
inline constexpr double kZeroNormThreshold = 1e-12;

/// Cosine similarity, with the zero-norm fallback of 0.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// p = sigmoid(cos(a, b)), in [1/(1+e), 1/(1+e^-1)].
double pair_similarity(std::span<const double> a, std::span<const double> b);

/// Binary cross-entropy on pair_similarity with target 1 for same emotion.
double verification_loss(std::span<const double> a, std::span<const double> b, bool same_emotion);

/// One utterance's contribution to a mini-batch.
struct PairSample {
  Vector embedding;
  Vector logits;
  std::size_t label = 0;
};

struct BatchObjective {
  double total = 0.0;                // C, literal double sum over ordered pairs
  double normalized = 0.0;           // C / (M (M-1)), or C when M == 1
  double cross_entropy_sum = 0.0;    // sum_A H_A
  double verification_sum = 0.0;     // sum over ordered pairs of V(A, B)
  std::vector<Vector> embedding_grads;  // dC / d embedding_A
  std::vector<Vector> logits_grads;     // dC / d logits_A
};

/// C = sum_A sum_{B != A} [H_A + lambda V(A, B)] over ordered pairs, which
/// equals (M-1) sum_A H_A + lambda sum_A sum_{B != A} V(A, B). A batch of one
/// falls back to C = H_A.
BatchObjective batch_objective(std::span<const PairSample> batch, double lambda);

}  // namespace emorec::text
