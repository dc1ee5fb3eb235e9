#include "restc/model.hpp"

#include <cmath>
#include <string>

namespace restc {

namespace {

// Dropout is identity outside training; only a training forward needs an RNG.
Tensor maybe_dropout(ForwardCtx& ctx, const Tensor& x, Scalar p) {
  if (!ctx.training || p == 0.0) return x;
  if (!ctx.rng) throw UsageError("training forward needs an RNG for dropout");
  return dropout(ctx.tape, x, p, *ctx.rng, true);
}

}  // namespace

Model::Model(const ModelDims& dims, const TrainConfig& cfg, Rng& init_rng)
    : dims_(dims), cfg_(cfg), params_(ModelParams::init(dims, init_rng)) {}

Model::Model(const ModelDims& dims, const TrainConfig& cfg, ModelParams params)
    : dims_(dims), cfg_(cfg), params_(std::move(params)) {}

Tensor Model::embed_with_positions(ForwardCtx& ctx, std::span<const int> tokens) const {
  const int w = static_cast<int>(tokens.size());
  if (w < 1) throw DataError("embed_with_positions: empty token row");
  if (w > dims_.max_len + 1)
    throw DataError("embed_with_positions: row of " + std::to_string(w) +
                    " tokens exceeds the position table");
  std::vector<int> idx(tokens.begin(), tokens.end());
  for (int t : idx)
    if (t < 0 || t > dims_.n_items + 1)
      throw DataError("embed_with_positions: token index " + std::to_string(t) + " out of range");
  // Item half: table rows (padding row 0 is all zero). Position half: one row
  // per slot, zeroed under the sequence-side position ablation.
  Tensor items = gather_rows(ctx.tape, params_.item_embed, idx);
  Tensor pos;
  if (cfg_.no_pe_s) {
    pos = Tensor::zeros({w, dims_.hidden});
  } else {
    std::vector<int> pidx(w);
    for (int i = 0; i < w; ++i) pidx[i] = i;
    pos = gather_rows(ctx.tape, params_.pos_temporal, pidx);
  }
  return concat_cols(ctx.tape, {items, pos});
}

Tensor Model::transformer_layer(ForwardCtx& ctx, const Tensor& x,
                                const std::vector<uint8_t>* token_mask, int layer) const {
  if (layer < 0 || layer >= static_cast<int>(params_.ses_layers.size()))
    throw UsageError("transformer_layer: layer index out of range");
  const auto& lp = params_.ses_layers[layer];
  const int s = x.rows(), dd = dims_.embed_width();
  if (x.cols() != dd) throw ShapeError("transformer_layer: expected width " + std::to_string(dd));
  if (token_mask && static_cast<int>(token_mask->size()) != s)
    throw ShapeError("transformer_layer: token mask length mismatch");
  const int heads = dims_.heads, dh = dd / heads;
  const Scalar scale_f = 1.0 / std::sqrt(static_cast<Scalar>(dh));

  Tensor q = matmul(ctx.tape, x, lp.wq);
  Tensor k = matmul(ctx.tape, x, lp.wk);
  Tensor v = matmul(ctx.tape, x, lp.wv);
  // Masked positions are excluded as attention targets for every query row.
  std::vector<uint8_t> attn_mask;
  if (token_mask) {
    attn_mask.resize(static_cast<size_t>(s) * s);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) attn_mask[static_cast<size_t>(i) * s + j] = (*token_mask)[j];
  }
  std::vector<Tensor> head_out;
  for (int h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(ctx.tape, q, h * dh, (h + 1) * dh);
    Tensor kh = slice_cols(ctx.tape, k, h * dh, (h + 1) * dh);
    Tensor vh = slice_cols(ctx.tape, v, h * dh, (h + 1) * dh);
    Tensor scores = scale(ctx.tape, matmul(ctx.tape, qh, transpose(ctx.tape, kh)), scale_f);
    Tensor attn = softmax_rows(ctx.tape, scores, token_mask ? &attn_mask : nullptr);
    if (ctx.collect)
      for (int i = 0; i < s; ++i)
        if (!token_mask || (*token_mask)[i])
          ctx.collect->add("attention", attn.values().data() + static_cast<size_t>(i) * s, s);
    head_out.push_back(matmul(ctx.tape, attn, vh));
  }
  Tensor att = heads == 1 ? head_out[0] : concat_cols(ctx.tape, head_out);
  Tensor y1 = layer_norm_rows(ctx.tape, add(ctx.tape, x, att));
  Tensor ff = add_row_broadcast(
      ctx.tape,
      matmul(ctx.tape,
             relu(ctx.tape, add_row_broadcast(ctx.tape, matmul(ctx.tape, y1, lp.w1), lp.b1)),
             lp.w2),
      lp.b2);
  Tensor y2 = layer_norm_rows(ctx.tape, add(ctx.tape, y1, ff));
  return maybe_dropout(ctx, y2, cfg_.dropout);
}

Tensor Model::summary_attention(ForwardCtx& ctx, const Tensor& x_encoded, const Tensor& x_init,
                                int m) const {
  if (m < 1) throw DataError("summary_attention: need at least one real item");
  if (x_encoded.rows() < m + 1 || x_init.rows() < m + 1)
    throw ShapeError("summary_attention: rows must cover items plus the summary token");
  // Query from the encoded summary row, keys from the encoded item rows,
  // values from the *initial* item embeddings.
  Tensor q = matmul(ctx.tape, slice_rows(ctx.tape, x_encoded, m, m + 1), params_.w3);
  Tensor keys = matmul(ctx.tape, slice_rows(ctx.tape, x_encoded, 0, m), params_.w4);
  Tensor pre = relu(ctx.tape,
                    add_row_broadcast(ctx.tape, add_row_broadcast(ctx.tape, keys, q), params_.b3));
  Tensor logits = transpose(ctx.tape, matmul(ctx.tape, pre, params_.f_t));  // [1,m]
  Tensor gamma = softmax_rows(ctx.tape, logits);
  if (ctx.collect) ctx.collect->add("summary_gate", gamma.values().data(), m);
  Tensor values = slice_rows(ctx.tape, x_init, 0, m);
  return matmul(ctx.tape, gamma, values);  // [1, 2D]
}

Tensor Model::temporal_view(ForwardCtx& ctx, std::span<const int> tokens) const {
  const int m = static_cast<int>(tokens.size()) - 1;
  if (m < 1) throw DataError("temporal_view: need at least one item before the summary token");
  if (tokens[m] != dims_.n_items + 1)
    throw DataError("temporal_view: last token must be the summary index");
  Tensor x0 = embed_with_positions(ctx, tokens);
  Tensor x = x0;
  for (int l = 0; l < static_cast<int>(params_.ses_layers.size()); ++l)
    x = transformer_layer(ctx, x, nullptr, l);
  Tensor h = summary_attention(ctx, x, x0, m);
  Tensor cat = concat_cols(ctx.tape, {h, slice_rows(ctx.tape, x0, m, m + 1)});  // [1,4D]
  Tensor hidden = relu(
      ctx.tape, add_row_broadcast(ctx.tape, matmul(ctx.tape, cat, params_.out_w1), params_.out_b1));
  Tensor out = add_row_broadcast(ctx.tape, matmul(ctx.tape, hidden, params_.out_w2), params_.out_b2);
  out = maybe_dropout(ctx, out, cfg_.dropout);
  return l2_normalize_rows(ctx.tape, out);
}

// Relational graph attention: one scalar score r.(h_i*h_j) per edge, softmax
// per (node, relation) neighborhood, relation-summed neighbor aggregation.
// Single fused tape op with a hand-written backward.
Tensor Model::relational_attention(ForwardCtx& ctx, const Tensor& h, const Msg& msg) const {
  const int u = msg.num_nodes(), d = dims_.hidden;
  if (h.rows() != u || h.cols() != d)
    throw ShapeError("relational_attention: embeddings " + h.shape_str() + " do not match " +
                     std::to_string(u) + " nodes");
  const Tensor rels[kNumRelations] = {params_.rel_in, params_.rel_out, params_.rel_bi,
                                      params_.rel_self};
  const Scalar slope = cfg_.leaky_slope;

  // Forward: per (node, relation) attention rows, stored for backward.
  struct Row {
    int node, rel;
    std::vector<int> nbr;
    std::vector<Scalar> e;      // raw scores
    std::vector<Scalar> alpha;  // softmax of leaky-relu scores
  };
  auto rows = std::make_shared<std::vector<Row>>();
  Tensor out = Tensor::zeros({u, d});
  for (int i = 0; i < u; ++i) {
    for (int r = 0; r < kNumRelations; ++r) {
      const auto& nbrs = msg.adj[i][r];
      if (nbrs.empty()) continue;
      Row row;
      row.node = i;
      row.rel = r;
      row.nbr = nbrs;
      Scalar maxv = -std::numeric_limits<Scalar>::infinity();
      for (int j : nbrs) {
        Scalar e = 0;
        for (int c = 0; c < d; ++c) e += rels[r].at(0, c) * h.at(i, c) * h.at(j, c);
        row.e.push_back(e);
        const Scalar a = e > 0 ? e : slope * e;
        maxv = std::max(maxv, a);
      }
      Scalar sum = 0;
      for (Scalar e : row.e) {
        const Scalar a = e > 0 ? e : slope * e;
        const Scalar ex = std::exp(a - maxv);
        row.alpha.push_back(ex);
        sum += ex;
      }
      for (Scalar& a : row.alpha) a /= sum;
      for (size_t t = 0; t < row.nbr.size(); ++t)
        for (int c = 0; c < d; ++c) out.at(i, c) += row.alpha[t] * h.at(row.nbr[t], c);
      if (ctx.collect) ctx.collect->add("relational_attention", row.alpha.data(), row.alpha.size());
      rows->push_back(std::move(row));
    }
  }

  bool track = h.tracked();
  for (int r = 0; r < kNumRelations; ++r) track = track || rels[r].tracked();
  if (ctx.tape && track) {
    Tensor th = h, to = out;
    Tensor trels[kNumRelations] = {rels[0], rels[1], rels[2], rels[3]};
    ctx.tape->record(
        "relational_attention", {h, rels[0], rels[1], rels[2], rels[3]}, out,
        [th, to, trels, rows, d, slope]() mutable {
          const std::vector<Scalar>& dO = to.grad();
          for (const auto& row : *rows) {
            const int i = row.node;
            const Tensor& rel = trels[row.rel];
            const size_t nn = row.nbr.size();
            // d(out_i) . h_j and the softmax jacobian give score grads.
            std::vector<Scalar> dalpha(nn, 0.0);
            for (size_t t = 0; t < nn; ++t) {
              Scalar acc = 0;
              for (int c = 0; c < d; ++c)
                acc += dO[static_cast<size_t>(i) * d + c] * th.at(row.nbr[t], c);
              dalpha[t] = acc;
              if (th.tracked())
                for (int c = 0; c < d; ++c)
                  th.grad()[static_cast<size_t>(row.nbr[t]) * d + c] +=
                      row.alpha[t] * dO[static_cast<size_t>(i) * d + c];
            }
            Scalar dot = 0;
            for (size_t t = 0; t < nn; ++t) dot += row.alpha[t] * dalpha[t];
            for (size_t t = 0; t < nn; ++t) {
              const Scalar dact = row.alpha[t] * (dalpha[t] - dot);
              const Scalar de = dact * (row.e[t] > 0 ? 1.0 : slope);
              if (de == 0.0) continue;
              const int j = row.nbr[t];
              for (int c = 0; c < d; ++c) {
                const Scalar hi = th.at(i, c), hj = th.at(j, c), rc = rel.at(0, c);
                if (trels[row.rel].tracked()) trels[row.rel].grad()[c] += de * hi * hj;
                if (th.tracked()) {
                  th.grad()[static_cast<size_t>(i) * d + c] += de * rc * hj;
                  th.grad()[static_cast<size_t>(j) * d + c] += de * rc * hi;
                }
              }
            }
          }
        });
  }
  return out;
}

Tensor Model::reversed_positions(ForwardCtx& ctx, int m) const {
  if (m < 1) throw DataError("reversed_positions: empty session");
  if (m > dims_.max_len)
    throw DataError("reversed_positions: session longer than the position table");
  if (cfg_.no_pe_g) return Tensor::zeros({m, dims_.hidden});
  // Last item gets table row 0 (distance one from the end), first gets m-1.
  std::vector<int> idx(m);
  for (int k = 0; k < m; ++k) idx[k] = m - 1 - k;
  return gather_rows(ctx.tape, params_.pos_spatial, idx);
}

SpatialOut Model::spatial_view(ForwardCtx& ctx, std::span<const int> prefix) const {
  SpatialOut out;
  out.msg = build_msg(prefix);
  const int m = out.msg.session_length();
  Tensor h = gather_rows(ctx.tape, params_.item_embed, out.msg.nodes);
  for (int l = 0; l < dims_.mgat_layers; ++l) h = relational_attention(ctx, h, out.msg);
  out.node_embeds = h;
  out.expanded = gather_rows(ctx.tape, h, out.msg.node_of_position);  // [M,D]
  // Position-aware gate over the expanded rows.
  Tensor pos = reversed_positions(ctx, m);
  Tensor mixed = tanh(ctx.tape, matmul(ctx.tape, concat_cols(ctx.tape, {pos, out.expanded}),
                                       params_.ws));
  Tensor mean = matmul(ctx.tape, mean_rows(ctx.tape, out.expanded), params_.w6);
  Tensor gate_in = add_row_broadcast(
      ctx.tape,
      add_row_broadcast(ctx.tape, matmul(ctx.tape, mixed, params_.w5), mean), params_.b5);
  Tensor beta = matmul(ctx.tape, sigmoid(ctx.tape, gate_in), params_.f_s);  // [M,1]
  out.g = matmul(ctx.tape, transpose(ctx.tape, beta), out.expanded);        // [1,D]
  return out;
}

Tensor Model::global_embedding(ForwardCtx& ctx) const {
  if (cfg_.no_cfg) return {};
  if (!prop_) throw UsageError("global_embedding: propagation matrix not set");
  const int n = dims_.n_items;
  Tensor z = slice_rows(ctx.tape, params_.item_embed, 1, n + 1);  // real items only
  for (int k = 0; k < dims_.cfg_layers; ++k)
    z = leaky_relu(ctx.tape, matmul(ctx.tape, spmm(ctx.tape, prop_, z), params_.wc[k]),
                   cfg_.leaky_slope);
  return prepend_zero_row(ctx.tape, z);  // padding slot back at row 0
}

Tensor Model::fuse(ForwardCtx& ctx, const SpatialOut& sp, const Tensor* t_view,
                   const Tensor& global_rows, std::span<const int> prefix) const {
  const int m = static_cast<int>(prefix.size()), d = dims_.hidden;
  if (sp.expanded.rows() != m) throw ShapeError("fuse: prefix/session-view length mismatch");
  Tensor cfg_rows;
  if (cfg_.no_cfg || !global_rows.defined()) {
    cfg_rows = Tensor::zeros({m, d});
  } else {
    std::vector<int> idx(prefix.begin(), prefix.end());
    cfg_rows = gather_rows(ctx.tape, global_rows, idx);
  }
  Tensor pos = reversed_positions(ctx, m);
  Tensor hg = matmul(ctx.tape, concat_cols(ctx.tape, {pos, sp.expanded, cfg_rows}), params_.wg);
  Tensor hgp = tanh(ctx.tape, matmul(ctx.tape, hg, params_.wf));
  Tensor t_row;
  if (t_view && t_view->defined())
    t_row = *t_view;
  else
    t_row = Tensor::zeros({1, d});  // sequence side ablated
  Tensor gate_in = add_row_broadcast(
      ctx.tape,
      add_row_broadcast(ctx.tape, matmul(ctx.tape, hgp, params_.w7),
                        matmul(ctx.tape, t_row, params_.w8)),
      params_.b7);
  Tensor rho = matmul(ctx.tape, sigmoid(ctx.tape, gate_in), params_.f_g);  // [M,1]
  // The fused sum runs over unique items; each item contributes at its first
  // occurrence position.
  Tensor first = Tensor::zeros({m, 1});
  for (int pos_first : sp.msg.first_occurrence()) first.at(pos_first, 0) = 1.0;
  Tensor rho_first = mul(ctx.tape, rho, first);
  return matmul(ctx.tape, transpose(ctx.tape, rho_first),
                add(ctx.tape, cfg_rows, sp.expanded));  // [1,D]
}

Tensor Model::predict(ForwardCtx& ctx, const Tensor& fused_rows) const {
  Tensor logits = matmul(ctx.tape, fused_rows, params_.wy);
  Tensor probs = softmax_rows(ctx.tape, logits);
  if (ctx.collect)
    for (int i = 0; i < probs.rows(); ++i)
      ctx.collect->add("prediction",
                       probs.values().data() + static_cast<size_t>(i) * probs.cols(),
                       probs.cols());
  return probs;
}

BatchOut Model::forward_batch(ForwardCtx& ctx, const Batch& batch, Tensor global_rows) const {
  BatchOut out;
  if (batch.rows < 1) throw DataError("forward_batch: empty batch");
  if (!global_rows.defined() && !cfg_.no_cfg) global_rows = global_embedding(ctx);
  std::vector<Tensor> t_rows, g_rows, s_rows;
  for (int r = 0; r < batch.rows; ++r) {
    const int m = batch.lengths[r];
    std::span<const int> row(batch.indices.data() + static_cast<size_t>(r) * batch.width,
                             static_cast<size_t>(batch.width));
    std::span<const int> tokens = row.subspan(0, m + 1);  // items + summary slot
    std::span<const int> prefix = row.subspan(0, m);
    Tensor t;
    if (!cfg_.no_sestrans) {
      t = temporal_view(ctx, tokens);
      t_rows.push_back(t);
    }
    SpatialOut sp = spatial_view(ctx, prefix);
    g_rows.push_back(sp.g);
    s_rows.push_back(fuse(ctx, sp, cfg_.no_sestrans ? nullptr : &t, global_rows, prefix));
  }
  if (!t_rows.empty())
    out.temporal = t_rows.size() == 1 ? t_rows[0] : concat_rows(ctx.tape, t_rows);
  out.spatial = g_rows.size() == 1 ? g_rows[0] : concat_rows(ctx.tape, g_rows);
  out.fused = s_rows.size() == 1 ? s_rows[0] : concat_rows(ctx.tape, s_rows);
  out.probs = predict(ctx, out.fused);
  return out;
}

}  // namespace restc
