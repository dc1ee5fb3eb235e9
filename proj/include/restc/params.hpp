#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "restc/rng.hpp"
#include "restc/tensor.hpp"

namespace restc {

// Architecture dimensions; everything a parameter shape depends on.
struct ModelDims {
  int n_items = 0;  // N
  int max_len = 1;  // L (longest prefix kept)
  int hidden = 64;  // D
  int heads = 2;
  int sestrans_layers = 2;
  int mgat_layers = 1;
  int cfg_layers = 3;

  int embed_width() const { return 2 * hidden; }  // item + position concat
  uint64_t hash() const;                          // architecture fingerprint for checkpoints
};

struct NamedParam {
  std::string name;
  std::string group;  // temporal | spatial | relation | cfg | fusion
  Tensor tensor;
};

// Every learnable matrix/vector of the model, enumerable in a stable order so
// the optimizer, the L2 term and checkpoints all see the same list.
struct ModelParams {
  // Shared item table [N+2, D]: row 0 padding (kept zero), rows 1..N items,
  // row N+1 the sequence-summary token.
  Tensor item_embed;
  // Sequence-side position table [L+1, D].
  Tensor pos_temporal;

  struct SesLayer {
    Tensor wq, wk, wv;  // [2D, 2D]
    Tensor w1, w2;      // [2D, 2D]
    Tensor b1, b2;      // [1, 2D]
  };
  std::vector<SesLayer> ses_layers;

  // Summary-query attention over the sequence.
  Tensor w3, w4;  // [2D, 2D]
  Tensor b3;      // [1, 2D]
  Tensor f_t;     // [2D, 1]

  // Output head mapping concat(h_t, x_summary) [1,4D] -> [1,D].
  Tensor out_w1;  // [4D, D]
  Tensor out_b1;  // [1, D]
  Tensor out_w2;  // [D, D]
  Tensor out_b2;  // [1, D]

  // Graph side: one embedding per relation type, [1, D] each.
  Tensor rel_in, rel_out, rel_bi, rel_self;
  // Graph-side reversed position table [L, D] (row 0 = distance 1 from the end).
  Tensor pos_spatial;
  Tensor ws;      // [2D, D]
  Tensor w5, w6;  // [D, D]
  Tensor b5;      // [1, D]
  Tensor f_s;     // [D, 1]

  // Global-graph propagation weights, one [D, D] per hop.
  std::vector<Tensor> wc;

  // Fusion and prediction.
  Tensor wg;      // [3D, D]
  Tensor wf;      // [D, D]
  Tensor w7, w8;  // [D, D]
  Tensor b7;      // [1, D]
  Tensor f_g;     // [D, 1]
  Tensor wy;      // [D, N]

  // Uniform(-1/sqrt(D), 1/sqrt(D)) for tables and matrices, zeros for biases,
  // padding row kept zero.
  static ModelParams init(const ModelDims& dims, Rng& rng);

  std::vector<NamedParam> named() const;
  std::vector<Tensor> tensors() const;
  Scalar squared_l2() const;
  size_t scalar_count() const;
};

}  // namespace restc
