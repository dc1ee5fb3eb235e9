#pragma once

#include <vector>

#include "restc/config.hpp"
#include "restc/model.hpp"
#include "restc/ops.hpp"
#include "restc/rng.hpp"

namespace restc {

// Candidate pool plus per-anchor selection flags: anchor i's negatives are
// the pool rows j with mask[i*K + j] set.
struct NegativeSet {
  Tensor pool;                // [K, D]
  std::vector<uint8_t> mask;  // C*K
  int pool_size = 0;
  int anchors = 0;

  int count(int anchor) const;
};

// Mixed-noise pool: a feature-shuffled copy of every sequence view plus the
// originals (2C rows); each anchor samples C of the 2C-1 admissible rows
// (its own unshuffled view excluded) without replacement.
NegativeSet mixed_noise_negatives(Graph* g, const Tensor& t_batch, Rng& rng);

// The alternative negative-candidate strategies (batch views only).
NegativeSet build_negatives(Graph* g, NegStrategy strategy, const Tensor& g_batch,
                            const Tensor& t_batch, Rng& rng);

// Temperature-scaled alignment loss between graph views (anchors) and
// sequence views (positives), summed over the batch. Similarity is cosine.
// By default the denominator ranges over the negative set only; the
// include_positive flag switches to the standard form where the positive pair
// joins the denominator. Zero-norm rows raise NumericError.
Tensor contrastive_loss(Graph* g, const Tensor& g_batch, const Tensor& t_batch,
                        const NegativeSet& negs, double tau, bool include_positive,
                        NormCollector* collect = nullptr);

// Prediction loss over probability rows. PerItem: every item contributes
// y*log(p) + (1-y)*log(1-p); Categorical: -log p(target). Probabilities are
// clamped to [1e-12, 1-1e-12] before logs; mean over the batch.
Tensor prediction_loss(Graph* g, const Tensor& probs, const std::vector<int>& targets,
                       MainLossKind kind);

struct LossBreakdown {
  Scalar main = 0, contrastive = 0, l2 = 0, total = 0;
  double eta1 = 0, eta2 = 0;
};

// total = main + eta1*contrastive + eta2*l2 (exact arithmetic identity).
LossBreakdown total_loss(Scalar main, Scalar contrastive, Scalar l2, double eta1, double eta2);

}  // namespace restc
