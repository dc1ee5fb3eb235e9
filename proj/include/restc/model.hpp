#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "restc/config.hpp"
#include "restc/data.hpp"
#include "restc/graphs.hpp"
#include "restc/ops.hpp"
#include "restc/params.hpp"

namespace restc {

// Sink for probability rows produced inside forwards (attention weights,
// gate distributions, prediction rows); used by normalization checks.
struct NormCollector {
  std::vector<std::pair<std::string, std::vector<Scalar>>> rows;
  void add(const char* tag, const Scalar* p, size_t n) {
    rows.emplace_back(tag, std::vector<Scalar>(p, p + n));
  }
};

struct ForwardCtx {
  Graph* tape = nullptr;  // nullptr = inference, nothing recorded
  Rng* rng = nullptr;     // consumed by dropout only
  bool training = false;
  NormCollector* collect = nullptr;
};

// Graph-side view of one session.
struct SpatialOut {
  Msg msg;
  Tensor node_embeds;  // [U,D] relational-attention output, pre position encoding
  Tensor expanded;     // [M,D] node rows repeated back into session order
  Tensor g;            // [1,D] session representation
};

struct BatchOut {
  Tensor temporal;  // [C,D]; undefined when the sequence encoder is ablated
  Tensor spatial;   // [C,D]
  Tensor fused;     // [C,D]
  Tensor probs;     // [C,N] next-item distribution rows
};

// The assembled recommender: a sequence-side encoder and a graph-side encoder
// over the same session, a propagated global co-occurrence embedding, gated
// fusion and a softmax head. Dual-use of the ablation flags lives in
// TrainConfig; zero substitution keeps shapes stable.
class Model {
 public:
  Model(const ModelDims& dims, const TrainConfig& cfg, Rng& init_rng);
  Model(const ModelDims& dims, const TrainConfig& cfg, ModelParams params);

  const ModelDims& dims() const { return dims_; }
  const TrainConfig& config() const { return cfg_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  void set_propagation(std::shared_ptr<const SparseMatrix> p) { prop_ = std::move(p); }
  const std::shared_ptr<const SparseMatrix>& propagation() const { return prop_; }

  // --- sequence side ---
  // Token row (item indices, summary token included) -> [W, 2D] of
  // item-embedding/position-embedding concat rows. Padding tokens (index 0)
  // contribute a zero item half.
  Tensor embed_with_positions(ForwardCtx& ctx, std::span<const int> tokens) const;
  // One encoder layer: masked multi-head self-attention, residual + layer
  // norm, feed-forward, residual + layer norm, dropout. token_mask flags real
  // tokens (nullptr = all real); masked columns get zero attention.
  Tensor transformer_layer(ForwardCtx& ctx, const Tensor& x, const std::vector<uint8_t>* token_mask,
                           int layer) const;
  // Summary-query attention over the m real-item rows; returns the aggregated
  // [1,2D] vector (value rows come from the initial embedding x_init).
  Tensor summary_attention(ForwardCtx& ctx, const Tensor& x_encoded, const Tensor& x_init,
                           int m) const;
  // Full sequence view: unit-norm [1,D]. `tokens` = m real items + summary.
  Tensor temporal_view(ForwardCtx& ctx, std::span<const int> tokens) const;

  // --- graph side ---
  // One relational attention pass over the session graph: [U,D] -> [U,D].
  Tensor relational_attention(ForwardCtx& ctx, const Tensor& h, const Msg& msg) const;
  SpatialOut spatial_view(ForwardCtx& ctx, std::span<const int> prefix) const;

  // --- global graph ---
  // K-hop propagated item table [N+1, D]; row 0 (padding slot) is zero.
  Tensor global_embedding(ForwardCtx& ctx) const;

  // --- fusion & prediction ---
  // t_view: pass nullptr under the no-sequence ablation (zero substitution).
  // global_rows: [N+1,D] table or undefined under the no-global ablation.
  Tensor fuse(ForwardCtx& ctx, const SpatialOut& sp, const Tensor* t_view,
              const Tensor& global_rows, std::span<const int> prefix) const;
  // Fused rows [C,D] -> probability rows [C,N].
  Tensor predict(ForwardCtx& ctx, const Tensor& fused_rows) const;

  // Whole padded batch in one call. global_rows may be undefined; it is then
  // computed internally when the global branch is active.
  BatchOut forward_batch(ForwardCtx& ctx, const Batch& batch, Tensor global_rows = {}) const;

  // Reversed-position rows for a session of length m ([m,D]); zeros under the
  // graph-side position ablation.
  Tensor reversed_positions(ForwardCtx& ctx, int m) const;

 private:
  ModelDims dims_;
  TrainConfig cfg_;
  ModelParams params_;
  std::shared_ptr<const SparseMatrix> prop_;
};

}  // namespace restc
