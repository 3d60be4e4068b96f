#include "emorec/text/objective.hpp"

#include <cmath>
#include <string>

#include "emorec/error.hpp"
#include "emorec/nn/layers.hpp"

namespace emorec::text {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// d cos(a, b) / d a, zero under the zero-norm fallback.
void add_cosine_grad(std::span<const double> a, std::span<const double> b, double scale,
                     Vector& out) {
  const double na = nn::norm(a);
  const double nb = nn::norm(b);
  if (na < kZeroNormThreshold || nb < kZeroNormThreshold) return;
  const double cos = nn::dot(a, b) / (na * nb);
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] += scale * (b[i] / (na * nb) - cos * a[i] / (na * na));
  }
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine of vectors with different lengths");
  const double na = nn::norm(a);
  const double nb = nn::norm(b);
  if (na < kZeroNormThreshold || nb < kZeroNormThreshold) return 0.0;
  return nn::dot(a, b) / (na * nb);
}

double pair_similarity(std::span<const double> a, std::span<const double> b) {
  return sigmoid(cosine_similarity(a, b));
}

double verification_loss(std::span<const double> a, std::span<const double> b,
                         bool same_emotion) {
  const double p = pair_similarity(a, b);
  return same_emotion ? -std::log(p) : -std::log(1.0 - p);
}

BatchObjective batch_objective(std::span<const PairSample> batch, double lambda) {
  if (batch.empty()) throw PreconditionError("batch objective over an empty batch");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  const std::size_t m = batch.size();
  const std::size_t dim = batch.front().embedding.size();
  for (const auto& s : batch) {
    if (s.embedding.size() != dim) throw ShapeError("batch embeddings differ in dimension");
  }

  BatchObjective out;
  out.embedding_grads.assign(m, Vector(dim, 0.0));
  out.logits_grads.resize(m);

  // Each H_A appears once per partner B, i.e. M-1 times (once when M == 1).
  const double ce_weight = m == 1 ? 1.0 : static_cast<double>(m - 1);
  for (std::size_t a = 0; a < m; ++a) {
    const auto ce = nn::softmax_cross_entropy(batch[a].logits, batch[a].label);
    out.cross_entropy_sum += ce.loss;
    out.logits_grads[a] = ce.grad;
    for (double& g : out.logits_grads[a]) g *= ce_weight;
  }

  // V is symmetric, so each unordered pair contributes twice.
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      const auto& ea = batch[a].embedding;
      const auto& eb = batch[b].embedding;
      const bool same = batch[a].label == batch[b].label;
      const double p = pair_similarity(ea, eb);
      const double v = same ? -std::log(p) : -std::log(1.0 - p);
      out.verification_sum += 2.0 * v;
      if (lambda == 0.0) continue;
      // dV/dcos = p - t, doubled for the two ordered pairs.
      const double scale = 2.0 * lambda * (p - (same ? 1.0 : 0.0));
      add_cosine_grad(ea, eb, scale, out.embedding_grads[a]);
      add_cosine_grad(eb, ea, scale, out.embedding_grads[b]);
    }
  }

  out.total = ce_weight * out.cross_entropy_sum + lambda * out.verification_sum;
  out.normalized = m == 1 ? out.total : out.total / static_cast<double>(m * (m - 1));
  if (!std::isfinite(out.total)) {
    throw NumericError("non-finite batch objective (cross-entropy sum " +
                       std::to_string(out.cross_entropy_sum) + ", verification sum " +
                       std::to_string(out.verification_sum) + ")");
  }
  return out;
}

}  // namespace emorec::text
