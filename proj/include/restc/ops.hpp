#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "restc/rng.hpp"
#include "restc/tensor.hpp"

namespace restc {

// Differentiable ops. Every op takes the recording tape as `g`; pass nullptr
// for inference (nothing is recorded, outputs are plain values). An op records
// itself iff g != nullptr and at least one input carries gradient.

Tensor matmul(Graph* g, const Tensor& a, const Tensor& b);  // [m,k]x[k,n]
Tensor transpose(Graph* g, const Tensor& a);
Tensor add(Graph* g, const Tensor& a, const Tensor& b);  // same shape
Tensor sub(Graph* g, const Tensor& a, const Tensor& b);
Tensor mul(Graph* g, const Tensor& a, const Tensor& b);  // Hadamard
Tensor scale(Graph* g, const Tensor& a, Scalar c);
// [m,n] + [1,n] row vector broadcast down the rows.
Tensor add_row_broadcast(Graph* g, const Tensor& a, const Tensor& v);
// [m,n] rows scaled by the [m,1] column of per-row scalars.
Tensor scale_rows(Graph* g, const Tensor& a, const Tensor& s);

Tensor relu(Graph* g, const Tensor& a);
Tensor leaky_relu(Graph* g, const Tensor& a, Scalar slope = 0.01);
Tensor sigmoid(Graph* g, const Tensor& a);
Tensor tanh(Graph* g, const Tensor& a);

// Row-wise softmax; masked entries (mask 0) get probability exactly 0 and a
// fully masked row is a contract error. mask, when given, has a.size() flags.
Tensor softmax_rows(Graph* g, const Tensor& a, const std::vector<uint8_t>* mask = nullptr);
// Row-wise log(sum(exp)) over unmasked entries -> [m,1].
Tensor logsumexp_rows(Graph* g, const Tensor& a, const std::vector<uint8_t>* mask = nullptr);

// Rows scaled to unit L2 norm; rows with norm < 1e-12 pass through unchanged.
Tensor l2_normalize_rows(Graph* g, const Tensor& a);
// Parameter-free layer norm per row (zero mean, unit variance, epsilon inside
// the square root).
Tensor layer_norm_rows(Graph* g, const Tensor& a, Scalar eps = 1e-5);
// Inverted dropout; identity when !training or p == 0. Draws one uniform per
// element from `rng` in row-major order when active.
Tensor dropout(Graph* g, const Tensor& a, Scalar p, Rng& rng, bool training);

Tensor concat_cols(Graph* g, const std::vector<Tensor>& parts);
Tensor concat_rows(Graph* g, const std::vector<Tensor>& parts);
Tensor slice_cols(Graph* g, const Tensor& a, int from, int to);
Tensor slice_rows(Graph* g, const Tensor& a, int from, int to);
// Output row i = a[idx[i]]; repeated indices accumulate grad into the row.
Tensor gather_rows(Graph* g, const Tensor& a, const std::vector<int>& idx);
Tensor mean_rows(Graph* g, const Tensor& a);  // [1,n]
Tensor sum_all(Graph* g, const Tensor& a);    // [1]
// Row-wise dot product of equally shaped matrices -> [m,1].
Tensor rowwise_dot(Graph* g, const Tensor& a, const Tensor& b);
// Output row i = a[i] with its columns permuted by perms[i] (out[j] = in[perms[i][j]]).
Tensor permute_cols_rowwise(Graph* g, const Tensor& a, const std::vector<std::vector<int>>& perms);
// [n,d] -> [n+1,d] with an all-zero first row (padding slot).
Tensor prepend_zero_row(Graph* g, const Tensor& a);

// Compressed sparse row matrix (constant, never learned).
struct SparseMatrix {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<Scalar> val;
};

// Sparse [n,n] times dense [n,d]; gradient flows into the dense side only.
Tensor spmm(Graph* g, const std::shared_ptr<const SparseMatrix>& p, const Tensor& z);

}  // namespace restc
