#include "restc/params.hpp"

#include <cmath>

#include "restc/common.hpp"

namespace restc {

uint64_t ModelDims::hash() const {
  // FNV-1a over the fields that determine parameter shapes.
  uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<uint64_t>(n_items));
  mix(static_cast<uint64_t>(max_len));
  mix(static_cast<uint64_t>(hidden));
  mix(static_cast<uint64_t>(heads));
  mix(static_cast<uint64_t>(sestrans_layers));
  mix(static_cast<uint64_t>(mgat_layers));
  mix(static_cast<uint64_t>(cfg_layers));
  return h;
}

namespace {

Tensor uniform_init(std::vector<int> shape, Scalar bound, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
  for (Scalar& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

ModelParams ModelParams::init(const ModelDims& dims, Rng& rng) {
  if (dims.n_items < 1) throw UsageError("model: need at least one item");
  if (dims.hidden < 1) throw UsageError("model: hidden size must be positive");
  if (dims.heads < 1 || (2 * dims.hidden) % dims.heads != 0)
    throw UsageError("model: heads must divide twice the hidden size");
  if (dims.mgat_layers < 1 || dims.mgat_layers > 4)
    throw UsageError("model: graph-attention depth must lie in [1,4]");
  if (dims.cfg_layers < 1 || dims.cfg_layers > 4)
    throw UsageError("model: propagation depth must lie in [1,4]");
  if (dims.sestrans_layers < 1) throw UsageError("model: need at least one encoder layer");

  const int d = dims.hidden, dd = dims.embed_width();
  const Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(d));
  ModelParams p;
  p.item_embed = uniform_init({dims.n_items + 2, d}, bound, rng);
  for (int j = 0; j < d; ++j) p.item_embed.at(0, j) = 0.0;  // padding row stays zero
  p.pos_temporal = uniform_init({dims.max_len + 1, d}, bound, rng);
  for (int l = 0; l < dims.sestrans_layers; ++l) {
    SesLayer layer;
    layer.wq = uniform_init({dd, dd}, bound, rng);
    layer.wk = uniform_init({dd, dd}, bound, rng);
    layer.wv = uniform_init({dd, dd}, bound, rng);
    layer.w1 = uniform_init({dd, dd}, bound, rng);
    layer.w2 = uniform_init({dd, dd}, bound, rng);
    layer.b1 = Tensor::zeros({1, dd}, true);
    layer.b2 = Tensor::zeros({1, dd}, true);
    p.ses_layers.push_back(std::move(layer));
  }
  p.w3 = uniform_init({dd, dd}, bound, rng);
  p.w4 = uniform_init({dd, dd}, bound, rng);
  p.b3 = Tensor::zeros({1, dd}, true);
  p.f_t = uniform_init({dd, 1}, bound, rng);
  p.out_w1 = uniform_init({2 * dd, d}, bound, rng);
  p.out_b1 = Tensor::zeros({1, d}, true);
  p.out_w2 = uniform_init({d, d}, bound, rng);
  p.out_b2 = Tensor::zeros({1, d}, true);

  p.rel_in = uniform_init({1, d}, bound, rng);
  p.rel_out = uniform_init({1, d}, bound, rng);
  p.rel_bi = uniform_init({1, d}, bound, rng);
  p.rel_self = uniform_init({1, d}, bound, rng);
  p.pos_spatial = uniform_init({dims.max_len, d}, bound, rng);
  p.ws = uniform_init({dd, d}, bound, rng);
  p.w5 = uniform_init({d, d}, bound, rng);
  p.w6 = uniform_init({d, d}, bound, rng);
  p.b5 = Tensor::zeros({1, d}, true);
  p.f_s = uniform_init({d, 1}, bound, rng);

  for (int k = 0; k < dims.cfg_layers; ++k) p.wc.push_back(uniform_init({d, d}, bound, rng));

  p.wg = uniform_init({3 * d, d}, bound, rng);
  p.wf = uniform_init({d, d}, bound, rng);
  p.w7 = uniform_init({d, d}, bound, rng);
  p.w8 = uniform_init({d, d}, bound, rng);
  p.b7 = Tensor::zeros({1, d}, true);
  p.f_g = uniform_init({d, 1}, bound, rng);
  p.wy = uniform_init({d, dims.n_items}, bound, rng);
  return p;
}

std::vector<NamedParam> ModelParams::named() const {
  std::vector<NamedParam> out;
  auto push = [&out](const std::string& name, const char* group, const Tensor& t) {
    out.push_back(NamedParam{name, group, t});
  };
  push("item_embed", "temporal", item_embed);
  push("pos_temporal", "temporal", pos_temporal);
  for (size_t l = 0; l < ses_layers.size(); ++l) {
    const std::string pre = "ses" + std::to_string(l) + ".";
    push(pre + "wq", "temporal", ses_layers[l].wq);
    push(pre + "wk", "temporal", ses_layers[l].wk);
    push(pre + "wv", "temporal", ses_layers[l].wv);
    push(pre + "w1", "temporal", ses_layers[l].w1);
    push(pre + "w2", "temporal", ses_layers[l].w2);
    push(pre + "b1", "temporal", ses_layers[l].b1);
    push(pre + "b2", "temporal", ses_layers[l].b2);
  }
  push("w3", "temporal", w3);
  push("w4", "temporal", w4);
  push("b3", "temporal", b3);
  push("f_t", "temporal", f_t);
  push("out_w1", "temporal", out_w1);
  push("out_b1", "temporal", out_b1);
  push("out_w2", "temporal", out_w2);
  push("out_b2", "temporal", out_b2);
  push("rel_in", "relation", rel_in);
  push("rel_out", "relation", rel_out);
  push("rel_bi", "relation", rel_bi);
  push("rel_self", "relation", rel_self);
  push("pos_spatial", "spatial", pos_spatial);
  push("ws", "spatial", ws);
  push("w5", "spatial", w5);
  push("w6", "spatial", w6);
  push("b5", "spatial", b5);
  push("f_s", "spatial", f_s);
  for (size_t k = 0; k < wc.size(); ++k) push("wc" + std::to_string(k), "cfg", wc[k]);
  push("wg", "fusion", wg);
  push("wf", "fusion", wf);
  push("w7", "fusion", w7);
  push("w8", "fusion", w8);
  push("b7", "fusion", b7);
  push("f_g", "fusion", f_g);
  push("wy", "fusion", wy);
  return out;
}

std::vector<Tensor> ModelParams::tensors() const {
  std::vector<Tensor> out;
  for (const NamedParam& p : named()) out.push_back(p.tensor);
  return out;
}

Scalar ModelParams::squared_l2() const {
  Scalar s = 0;
  for (const NamedParam& p : named())
    for (Scalar v : p.tensor.values()) s += v * v;
  return s;
}

size_t ModelParams::scalar_count() const {
  size_t n = 0;
  for (const NamedParam& p : named()) n += p.tensor.size();
  return n;
}

}  // namespace restc
