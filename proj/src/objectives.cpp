#include "restc/objectives.hpp"

#include <cmath>
#include <string>

namespace restc {

int NegativeSet::count(int anchor) const {
  int n = 0;
  for (int j = 0; j < pool_size; ++j)
    if (mask[static_cast<size_t>(anchor) * pool_size + j]) ++n;
  return n;
}

NegativeSet mixed_noise_negatives(Graph* g, const Tensor& t_batch, Rng& rng) {
  const int c = t_batch.rows(), d = t_batch.cols();
  if (c < 2) throw UsageError("mixed_noise_negatives: need a batch of at least 2");
  // Feature-shuffled copy of each view (rows 0..C-1), then the originals
  // (rows C..2C-1).
  std::vector<std::vector<int>> perms;
  perms.reserve(c);
  for (int i = 0; i < c; ++i) perms.push_back(rng.permutation(d));
  Tensor shuffled = permute_cols_rowwise(g, t_batch, perms);
  NegativeSet ns;
  ns.pool = concat_rows(g, {shuffled, t_batch});
  ns.pool_size = 2 * c;
  ns.anchors = c;
  ns.mask.assign(static_cast<size_t>(c) * ns.pool_size, 0);
  // Anchor i samples C rows of the 2C-1 admissible (its own positive, pool
  // row C+i, excluded) without replacement.
  std::vector<int> admissible;
  for (int i = 0; i < c; ++i) {
    admissible.clear();
    for (int j = 0; j < ns.pool_size; ++j)
      if (j != c + i) admissible.push_back(j);
    // Partial Fisher-Yates: first C entries are the sample.
    for (int k = 0; k < c; ++k) {
      const int pick = k + rng.uniform_int(static_cast<int>(admissible.size()) - k);
      std::swap(admissible[k], admissible[pick]);
      ns.mask[static_cast<size_t>(i) * ns.pool_size + admissible[k]] = 1;
    }
  }
  return ns;
}

NegativeSet build_negatives(Graph* g, NegStrategy strategy, const Tensor& g_batch,
                            const Tensor& t_batch, Rng& rng) {
  const int c = t_batch.rows();
  if (c < 2) throw UsageError("build_negatives: need a batch of at least 2");
  check_same_shape(g_batch, t_batch, "build_negatives");
  NegativeSet ns;
  ns.anchors = c;
  switch (strategy) {
    case NegStrategy::MixedNoise:
      return mixed_noise_negatives(g, t_batch, rng);
    case NegStrategy::SpatialOnly:
      // Other sessions' graph views.
      ns.pool = g_batch;
      ns.pool_size = c;
      ns.mask.assign(static_cast<size_t>(c) * c, 1);
      for (int i = 0; i < c; ++i) ns.mask[static_cast<size_t>(i) * c + i] = 0;
      return ns;
    case NegStrategy::MultiAlign:
      // Other sessions' sequence views.
      ns.pool = t_batch;
      ns.pool_size = c;
      ns.mask.assign(static_cast<size_t>(c) * c, 1);
      for (int i = 0; i < c; ++i) ns.mask[static_cast<size_t>(i) * c + i] = 0;
      return ns;
    case NegStrategy::SingleAlign: {
      // One random other sequence view per anchor.
      ns.pool = t_batch;
      ns.pool_size = c;
      ns.mask.assign(static_cast<size_t>(c) * c, 0);
      for (int i = 0; i < c; ++i) {
        int j = rng.uniform_int(c - 1);
        if (j >= i) ++j;
        ns.mask[static_cast<size_t>(i) * c + j] = 1;
      }
      return ns;
    }
    case NegStrategy::SelfMultiAlign:
      // Both views of every other session.
      ns.pool = concat_rows(g, {g_batch, t_batch});
      ns.pool_size = 2 * c;
      ns.mask.assign(static_cast<size_t>(c) * 2 * c, 1);
      for (int i = 0; i < c; ++i) {
        ns.mask[static_cast<size_t>(i) * 2 * c + i] = 0;          // own graph view
        ns.mask[static_cast<size_t>(i) * 2 * c + c + i] = 0;      // own sequence view
      }
      return ns;
  }
  throw UsageError("build_negatives: unknown strategy");
}

Tensor contrastive_loss(Graph* g, const Tensor& g_batch, const Tensor& t_batch,
                        const NegativeSet& negs, double tau, bool include_positive,
                        NormCollector* collect) {
  if (tau <= 0) throw UsageError("contrastive_loss: temperature must be positive");
  const int c = g_batch.rows();
  check_same_shape(g_batch, t_batch, "contrastive_loss");
  if (negs.anchors != c || !negs.pool.defined())
    throw UsageError("contrastive_loss: negative set does not match the batch");
  for (int i = 0; i < c; ++i)
    if (negs.count(i) < 1) throw UsageError("contrastive_loss: anchor without negatives");
  auto check_rows = [](const Tensor& t, const char* who) {
    for (int i = 0; i < t.rows(); ++i) {
      Scalar sq = 0;
      for (int j = 0; j < t.cols(); ++j) sq += t.at(i, j) * t.at(i, j);
      if (sq < 1e-24)
        throw NumericError(std::string("contrastive_loss: zero-norm ") + who + " row " +
                           std::to_string(i));
    }
  };
  check_rows(g_batch, "anchor");
  check_rows(t_batch, "positive");
  check_rows(negs.pool, "candidate");

  const Scalar inv_tau = 1.0 / tau;
  Tensor ga = l2_normalize_rows(g, g_batch);
  Tensor tb = l2_normalize_rows(g, t_batch);
  Tensor pool = l2_normalize_rows(g, negs.pool);
  Tensor pos = scale(g, rowwise_dot(g, ga, tb), inv_tau);  // [C,1]
  Tensor logits = scale(g, matmul(g, ga, transpose(g, pool)), inv_tau);  // [C,K]
  // The positive column rides along; masked off unless include_positive.
  Tensor all = concat_cols(g, {logits, pos});  // [C,K+1]
  std::vector<uint8_t> mask(static_cast<size_t>(c) * (negs.pool_size + 1), 0);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < negs.pool_size; ++j)
      mask[static_cast<size_t>(i) * (negs.pool_size + 1) + j] =
          negs.mask[static_cast<size_t>(i) * negs.pool_size + j];
    if (include_positive) mask[static_cast<size_t>(i) * (negs.pool_size + 1) + negs.pool_size] = 1;
  }
  Tensor lse = logsumexp_rows(g, all, &mask);  // [C,1]
  if (collect) {
    // Implied per-anchor weighting over the denominator candidates.
    for (int i = 0; i < c; ++i) {
      std::vector<Scalar> w;
      for (int j = 0; j <= negs.pool_size; ++j)
        if (mask[static_cast<size_t>(i) * (negs.pool_size + 1) + j])
          w.push_back(std::exp(all.at(i, j) - lse.at(i, 0)));
      collect->add("contrastive_denominator", w.data(), w.size());
    }
  }
  return sum_all(g, sub(g, lse, pos));  // sum_i log(denom_i) - pos_i/tau
}

Tensor prediction_loss(Graph* g, const Tensor& probs, const std::vector<int>& targets,
                       MainLossKind kind) {
  const int c = probs.rows(), n = probs.cols();
  if (static_cast<int>(targets.size()) != c)
    throw ShapeError("prediction_loss: target count does not match batch rows");
  for (int t : targets)
    if (t < 1 || t > n)
      throw DataError("prediction_loss: target " + std::to_string(t) + " outside 1.." +
                      std::to_string(n));
  constexpr Scalar kClamp = 1e-12;
  Tensor out = Tensor::zeros({1});
  Scalar loss = 0;
  // Forward + analytic backward in one fused op; the softmax upstream handles
  // the rest of the chain.
  std::vector<Scalar> dprobs;
  const bool need_grad = g && probs.tracked();
  if (need_grad) dprobs.assign(probs.size(), 0.0);
  for (int i = 0; i < c; ++i) {
    const int t = targets[i] - 1;
    for (int j = 0; j < n; ++j) {
      const Scalar raw = probs.at(i, j);
      const Scalar p = std::min(std::max(raw, kClamp), 1.0 - kClamp);
      const bool inside = raw > kClamp && raw < 1.0 - kClamp;  // clamp is flat outside
      if (kind == MainLossKind::Categorical) {
        if (j == t) {
          loss -= std::log(p);
          if (need_grad && inside) dprobs[static_cast<size_t>(i) * n + j] = -1.0 / p;
        }
        continue;
      }
      if (j == t) {
        loss -= std::log(p);
        if (need_grad && inside) dprobs[static_cast<size_t>(i) * n + j] = -1.0 / p;
      } else {
        loss -= std::log(1.0 - p);
        if (need_grad && inside) dprobs[static_cast<size_t>(i) * n + j] = 1.0 / (1.0 - p);
      }
    }
  }
  loss /= c;
  out.values()[0] = loss;
  if (need_grad) {
    Tensor tp = probs, to = out;
    g->record("prediction_loss", {probs}, out, [tp, to, dprobs = std::move(dprobs), c]() mutable {
      if (!tp.tracked()) return;
      const Scalar d = to.grad()[0] / c;
      for (size_t i = 0; i < dprobs.size(); ++i) tp.grad()[i] += d * dprobs[i];
    });
  }
  return out;
}

LossBreakdown total_loss(Scalar main, Scalar contrastive, Scalar l2, double eta1, double eta2) {
  if (eta1 < 0 || eta1 > 0.1)
    throw UsageError("total_loss: contrastive weight must lie in [0, 0.1]");
  if (eta2 < 0) throw UsageError("total_loss: L2 weight must be non-negative");
  LossBreakdown b;
  b.main = main;
  b.contrastive = contrastive;
  b.l2 = l2;
  b.eta1 = eta1;
  b.eta2 = eta2;
  b.total = main + eta1 * contrastive + eta2 * l2;
  return b;
}

}  // namespace restc
