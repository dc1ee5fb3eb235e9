#include "restc/ops.hpp"

#include <cmath>
#include <string>

namespace restc {

namespace {

bool want_grad(Graph* g, std::initializer_list<const Tensor*> ins) {
  if (!g) return false;
  for (const Tensor* t : ins)
    if (t->defined() && t->tracked()) return true;
  return false;
}

void check_2d(const Tensor& a, const char* op) {
  if (a.shape().size() != 2)
    throw ShapeError(std::string(op) + ": expected a matrix, got " + a.shape_str());
}

}  // namespace

Tensor matmul(Graph* g, const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions disagree, " + a.shape_str() + " x " +
                     b.shape_str());
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros({m, n});
  {
    const Scalar* A = a.values().data();
    const Scalar* B = b.values().data();
    Scalar* C = out.values().data();
    for (int i = 0; i < m; ++i)
      for (int kk = 0; kk < k; ++kk) {
        const Scalar aik = A[static_cast<size_t>(i) * k + kk];
        const Scalar* Brow = B + static_cast<size_t>(kk) * n;
        Scalar* Crow = C + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) Crow[j] += aik * Brow[j];
      }
  }
  if (want_grad(g, {&a, &b})) {
    Tensor ta = a, tb = b, to = out;
    g->record("matmul", {a, b}, out, [ta, tb, to, m, k, n]() mutable {
      const Scalar* dC = to.grad().data();
      if (ta.tracked()) {
        Scalar* dA = ta.grad().data();
        const Scalar* B = tb.values().data();
        for (int i = 0; i < m; ++i)
          for (int kk = 0; kk < k; ++kk) {
            const Scalar* dCrow = dC + static_cast<size_t>(i) * n;
            const Scalar* Brow = B + static_cast<size_t>(kk) * n;
            Scalar acc = 0;
            for (int j = 0; j < n; ++j) acc += dCrow[j] * Brow[j];
            dA[static_cast<size_t>(i) * k + kk] += acc;
          }
      }
      if (tb.tracked()) {
        Scalar* dB = tb.grad().data();
        const Scalar* A = ta.values().data();
        for (int i = 0; i < m; ++i)
          for (int kk = 0; kk < k; ++kk) {
            const Scalar aik = A[static_cast<size_t>(i) * k + kk];
            if (aik == 0.0) continue;
            const Scalar* dCrow = dC + static_cast<size_t>(i) * n;
            Scalar* dBrow = dB + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) dBrow[j] += aik * dCrow[j];
          }
      }
    });
  }
  return out;
}

Tensor transpose(Graph* g, const Tensor& a) {
  check_2d(a, "transpose");
  const int m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
  if (want_grad(g, {&a})) {
    Tensor ta = a, to = out;
    g->record("transpose", {a}, out, [ta, to, m, n]() mutable {
      if (!ta.tracked()) return;
      std::vector<Scalar>& dA = ta.grad();
      const std::vector<Scalar>& dO = to.grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          dA[static_cast<size_t>(i) * n + j] += dO[static_cast<size_t>(j) * m + i];
    });
  }
  return out;
}

namespace {

// Shared scaffolding for elementwise binary ops with per-element partials.
template <typename Fwd, typename Bwd>
Tensor binary_elementwise(Graph* g, const char* name, const Tensor& a, const Tensor& b, Fwd fwd,
                          Bwd bwd) {
  check_same_shape(a, b, name);
  Tensor out = Tensor::zeros(a.shape());
  const size_t n = a.size();
  for (size_t i = 0; i < n; ++i) out.values()[i] = fwd(a.values()[i], b.values()[i]);
  if (want_grad(g, {&a, &b})) {
    Tensor ta = a, tb = b, to = out;
    g->record(name, {a, b}, out, [ta, tb, to, bwd, n]() mutable {
      const std::vector<Scalar>& dO = to.grad();
      for (size_t i = 0; i < n; ++i) {
        auto [da, db] = bwd(ta.values()[i], tb.values()[i]);
        if (ta.tracked()) ta.grad()[i] += da * dO[i];
        if (tb.tracked()) tb.grad()[i] += db * dO[i];
      }
    });
  }
  return out;
}

template <typename Fwd, typename Bwd>
Tensor unary_elementwise(Graph* g, const char* name, const Tensor& a, Fwd fwd, Bwd bwd) {
  Tensor out = Tensor::zeros(a.shape());
  const size_t n = a.size();
  for (size_t i = 0; i < n; ++i) out.values()[i] = fwd(a.values()[i]);
  if (want_grad(g, {&a})) {
    Tensor ta = a, to = out;
    g->record(name, {a}, out, [ta, to, bwd, n]() mutable {
      if (!ta.tracked()) return;
      const std::vector<Scalar>& dO = to.grad();
      for (size_t i = 0; i < n; ++i) ta.grad()[i] += bwd(ta.values()[i], to.values()[i]) * dO[i];
    });
  }
  return out;
}

}  // namespace

Tensor add(Graph* g, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      g, "add", a, b, [](Scalar x, Scalar y) { return x + y; },
      [](Scalar, Scalar) { return std::pair<Scalar, Scalar>{1.0, 1.0}; });
}

Tensor sub(Graph* g, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      g, "sub", a, b, [](Scalar x, Scalar y) { return x - y; },
      [](Scalar, Scalar) { return std::pair<Scalar, Scalar>{1.0, -1.0}; });
}

Tensor mul(Graph* g, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      g, "mul", a, b, [](Scalar x, Scalar y) { return x * y; },
      [](Scalar x, Scalar y) { return std::pair<Scalar, Scalar>{y, x}; });
}

Tensor scale(Graph* g, const Tensor& a, Scalar c) {
  return unary_elementwise(
      g, "scale", a, [c](Scalar x) { return c * x; }, [c](Scalar, Scalar) { return c; });
}

Tensor add_row_broadcast(Graph* g, const Tensor& a, const Tensor& v) {
  check_2d(a, "add_row_broadcast");
  if (v.rows() != 1 || v.cols() != a.cols())
    throw ShapeError("add_row_broadcast: need [1," + std::to_string(a.cols()) + "], got " +
                     v.shape_str());
  const int m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = a.at(i, j) + v.at(0, j);
  if (want_grad(g, {&a, &v})) {
    Tensor ta = a, tv = v, to = out;
    g->record("add_row_broadcast", {a, v}, out, [ta, tv, to, m, n]() mutable {
      const std::vector<Scalar>& dO = to.grad();
      if (ta.tracked())
        for (size_t i = 0; i < dO.size(); ++i) ta.grad()[i] += dO[i];
      if (tv.tracked())
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) tv.grad()[j] += dO[static_cast<size_t>(i) * n + j];
    });
  }
  return out;
}

Tensor scale_rows(Graph* g, const Tensor& a, const Tensor& s) {
  check_2d(a, "scale_rows");
  if (s.rows() != a.rows() || s.cols() != 1)
    throw ShapeError("scale_rows: need [" + std::to_string(a.rows()) + ",1], got " + s.shape_str());
  const int m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = a.at(i, j) * s.at(i, 0);
  if (want_grad(g, {&a, &s})) {
    Tensor ta = a, ts = s, to = out;
    g->record("scale_rows", {a, s}, out, [ta, ts, to, m, n]() mutable {
      const std::vector<Scalar>& dO = to.grad();
      for (int i = 0; i < m; ++i) {
        Scalar acc = 0;
        for (int j = 0; j < n; ++j) {
          const Scalar d = dO[static_cast<size_t>(i) * n + j];
          if (ta.tracked()) ta.grad()[static_cast<size_t>(i) * n + j] += d * ts.at(i, 0);
          acc += d * ta.at(i, j);
        }
        if (ts.tracked()) ts.grad()[i] += acc;
      }
    });
  }
  return out;
}

Tensor relu(Graph* g, const Tensor& a) {
  return unary_elementwise(
      g, "relu", a, [](Scalar x) { return x > 0 ? x : 0.0; },
      [](Scalar x, Scalar) { return x > 0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(Graph* g, const Tensor& a, Scalar slope) {
  return unary_elementwise(
      g, "leaky_relu", a, [slope](Scalar x) { return x > 0 ? x : slope * x; },
      [slope](Scalar x, Scalar) { return x > 0 ? 1.0 : slope; });
}

Tensor sigmoid(Graph* g, const Tensor& a) {
  return unary_elementwise(
      g, "sigmoid", a,
      [](Scalar x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](Scalar, Scalar y) { return y * (1.0 - y); });
}

Tensor tanh(Graph* g, const Tensor& a) {
  return unary_elementwise(
      g, "tanh", a, [](Scalar x) { return std::tanh(x); },
      [](Scalar, Scalar y) { return 1.0 - y * y; });
}

Tensor softmax_rows(Graph* g, const Tensor& a, const std::vector<uint8_t>* mask) {
  check_2d(a, "softmax_rows");
  if (mask && mask->size() != a.size())
    throw ShapeError("softmax_rows: mask size does not match tensor");
  const int m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i) {
    Scalar maxv = -std::numeric_limits<Scalar>::infinity();
    bool any = false;
    for (int j = 0; j < n; ++j) {
      if (mask && !(*mask)[static_cast<size_t>(i) * n + j]) continue;
      any = true;
      maxv = std::max(maxv, a.at(i, j));
    }
    if (!any) throw ShapeError("softmax_rows: row " + std::to_string(i) + " is fully masked");
    Scalar sum = 0;
    for (int j = 0; j < n; ++j) {
      if (mask && !(*mask)[static_cast<size_t>(i) * n + j]) continue;
      const Scalar e = std::exp(a.at(i, j) - maxv);
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < n; ++j) out.at(i, j) /= sum;
  }
  if (want_grad(g, {&a})) {
    Tensor ta = a, to = out;
    g->record("softmax_rows", {a}, out, [ta, to, m, n]() mutable {
      if (!ta.tracked()) return;
      const std::vector<Scalar>& dO = to.grad();
      for (int i = 0; i < m; ++i) {
        Scalar dot = 0;
        for (int j = 0; j < n; ++j) dot += to.at(i, j) * dO[static_cast<size_t>(i) * n + j];
        for (int j = 0; j < n; ++j)
          ta.grad()[static_cast<size_t>(i) * n + j] +=
              to.at(i, j) * (dO[static_cast<size_t>(i) * n + j] - dot);
      }
    });
  }
  return out;
}

Tensor logsumexp_rows(Graph* g, const Tensor& a, const std::vector<uint8_t>* mask) {
  check_2d(a, "logsumexp_rows");
  if (mask && mask->size() != a.size())
    throw ShapeError("logsumexp_rows: mask size does not match tensor");
  const int m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros({m, 1});
  for (int i = 0; i < m; ++i) {
    Scalar maxv = -std::numeric_limits<Scalar>::infinity();
    bool any = false;
    for (int j = 0; j < n; ++j) {
      if (mask && !(*mask)[static_cast<size_t>(i) * n + j]) continue;
      any = true;
      maxv = std::max(maxv, a.at(i, j));
    }
    if (!any) throw ShapeError("logsumexp_rows: row " + std::to_string(i) + " is fully masked");
    Scalar sum = 0;
    for (int j = 0; j < n; ++j) {
      if (mask && !(*mask)[static_cast<size_t>(i) * n + j]) continue;
      sum += std::exp(a.at(i, j) - maxv);
    }
    out.at(i, 0) = maxv + std::log(sum);
  }
  if (want_grad(g, {&a})) {
    Tensor ta = a, to = out;
    std::vector<uint8_t> mask_copy;
    if (mask) mask_copy = *mask;
    g->record("logsumexp_rows", {a}, out, [ta, to, m, n, mask_copy = std::move(mask_copy),
                                           has_mask = mask != nullptr]() mutable {
      if (!ta.tracked()) return;
      const std::vector<Scalar>& dO = to.grad();
      for (int i = 0; i < m; ++i) {
        const Scalar lse = to.at(i, 0);
        for (int j = 0; j < n; ++j) {
          if (has_mask && !mask_copy[static_cast<size_t>(i) * n + j]) continue;
          ta.grad()[static_cast<size_t>(i) * n + j] += dO[i] * std::exp(ta.at(i, j) - lse);
        }
      }
    });
  }
  return out;
}

Tensor l2_normalize_rows(Graph* g, const Tensor& a) {
  check_2d(a, "l2_normalize_rows");
  const int m = a.rows(), n = a.cols();
  constexpr Scalar kFloor = 1e-12;
  Tensor out = Tensor::zeros({m, n});
  std::vector<Scalar> norms(m);
  for (int i = 0; i < m; ++i) {
    Scalar sq = 0;
    for (int j = 0; j < n; ++j) sq += a.at(i, j) * a.at(i, j);
    const Scalar norm = std::sqrt(sq);
    norms[i] = norm;
    const Scalar inv = norm < kFloor ? 1.0 : 1.0 / norm;  // degenerate rows pass through
    for (int j = 0; j < n; ++j) out.at(i, j) = a.at(i, j) * inv;
  }
  if (want_grad(g, {&a})) {
    Tensor ta = a, to = out;
    g->record("l2_normalize_rows", {a}, out, [ta, to, m, n, norms]() mutable {
      if (!ta.tracked()) return;
      const std::vector<Scalar>& dO = to.grad();
      for (int i = 0; i < m; ++i) {
        if (norms[i] < kFloor) {
          for (int j = 0; j < n; ++j)
            ta.grad()[static_cast<size_t>(i) * n + j] += dO[static_cast<size_t>(i) * n + j];
          continue;
        }
        Scalar dot = 0;
        for (int j = 0; j < n; ++j) dot += to.at(i, j) * dO[static_cast<size_t>(i) * n + j];
        const Scalar inv = 1.0 / norms[i];
        for (int j = 0; j < n; ++j)
          ta.grad()[static_cast<size_t>(i) * n + j] +=
              (dO[static_cast<size_t>(i) * n + j] - to.at(i, j) * dot) * inv;
      }
    });
  }
  return out;
}

Tensor layer_norm_rows(Graph* g, const Tensor& a, Scalar eps) {
  check_2d(a, "layer_norm_rows");
  const int m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros({m, n});
  std::vector<Scalar> inv_std(m);
  for (int i = 0; i < m; ++i) {
    Scalar mean = 0;
    for (int j = 0; j < n; ++j) mean += a.at(i, j);
    mean /= n;
    Scalar var = 0;
    for (int j = 0; j < n; ++j) {
      const Scalar d = a.at(i, j) - mean;
      var += d * d;
    }
    var /= n;
    const Scalar inv = 1.0 / std::sqrt(var + eps);
    inv_std[i] = inv;
    for (int j = 0; j < n; ++j) out.at(i, j) = (a.at(i, j) - mean) * inv;
  }
  if (want_grad(g, {&a})) {
    Tensor ta = a, to = out;
    g->record("layer_norm_rows", {a}, out, [ta, to, m, n, inv_std]() mutable {
      if (!ta.tracked()) return;
      const std::vector<Scalar>& dO = to.grad();
      for (int i = 0; i < m; ++i) {
        Scalar mean_d = 0, mean_dy = 0;
        for (int j = 0; j < n; ++j) {
          const Scalar d = dO[static_cast<size_t>(i) * n + j];
          mean_d += d;
          mean_dy += d * to.at(i, j);
        }
        mean_d /= n;
        mean_dy /= n;
        for (int j = 0; j < n; ++j) {
          const Scalar d = dO[static_cast<size_t>(i) * n + j];
          ta.grad()[static_cast<size_t>(i) * n + j] +=
              inv_std[i] * (d - mean_d - to.at(i, j) * mean_dy);
        }
      }
    });
  }
  return out;
}

Tensor dropout(Graph* g, const Tensor& a, Scalar p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) throw UsageError("dropout: rate must be in [0,1)");
  if (!training || p == 0.0) return a;  // identity, nothing recorded
  const size_t n = a.size();
  std::vector<Scalar> keep(n);
  const Scalar inv = 1.0 / (1.0 - p);
  for (size_t i = 0; i < n; ++i) keep[i] = rng.uniform() >= p ? inv : 0.0;
  Tensor out = Tensor::zeros(a.shape());
  for (size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * keep[i];
  if (want_grad(g, {&a})) {
    Tensor ta = a, to = out;
    g->record("dropout", {a}, out, [ta, to, keep = std::move(keep), n]() mutable {
      if (!ta.tracked()) return;
      const std::vector<Scalar>& dO = to.grad();
      for (size_t i = 0; i < n; ++i) ta.grad()[i] += dO[i] * keep[i];
    });
  }
  return out;
}

Tensor concat_cols(Graph* g, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int m = parts[0].rows();
  int n = 0;
  for (const Tensor& t : parts) {
    check_2d(t, "concat_cols");
    if (t.rows() != m) throw ShapeError("concat_cols: row counts differ");
    n += t.cols();
  }
  Tensor out = Tensor::zeros({m, n});
  int off = 0;
  for (const Tensor& t : parts) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < t.cols(); ++j) out.at(i, off + j) = t.at(i, j);
    off += t.cols();
  }
  bool track = false;
  for (const Tensor& t : parts) track = track || (g && t.tracked());
  if (track) {
    std::vector<Tensor> ins = parts;
    Tensor to = out;
    g->record("concat_cols", parts, out, [ins, to, m, n]() mutable {
      const std::vector<Scalar>& dO = to.grad();
      int off = 0;
      for (Tensor& t : ins) {
        if (t.tracked())
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < t.cols(); ++j)
              t.grad()[static_cast<size_t>(i) * t.cols() + j] +=
                  dO[static_cast<size_t>(i) * n + off + j];
        off += t.cols();
      }
    });
  }
  return out;
}

Tensor concat_rows(Graph* g, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const int n = parts[0].cols();
  int m = 0;
  for (const Tensor& t : parts) {
    check_2d(t, "concat_rows");
    if (t.cols() != n) throw ShapeError("concat_rows: column counts differ");
    m += t.rows();
  }
  Tensor out = Tensor::zeros({m, n});
  int off = 0;
  for (const Tensor& t : parts) {
    for (int i = 0; i < t.rows(); ++i)
      for (int j = 0; j < n; ++j) out.at(off + i, j) = t.at(i, j);
    off += t.rows();
  }
  bool track = false;
  for (const Tensor& t : parts) track = track || (g && t.tracked());
  if (track) {
    std::vector<Tensor> ins = parts;
    Tensor to = out;
    g->record("concat_rows", parts, out, [ins, to, n]() mutable {
      const std::vector<Scalar>& dO = to.grad();
      int off = 0;
      for (Tensor& t : ins) {
        if (t.tracked())
          for (int i = 0; i < t.rows(); ++i)
            for (int j = 0; j < n; ++j)
              t.grad()[static_cast<size_t>(i) * n + j] +=
                  dO[static_cast<size_t>(off + i) * n + j];
        off += t.rows();
      }
    });
  }
  return out;
}

Tensor slice_cols(Graph* g, const Tensor& a, int from, int to) {
  check_2d(a, "slice_cols");
  if (from < 0 || to > a.cols() || from >= to)
    throw ShapeError("slice_cols: bad range [" + std::to_string(from) + "," + std::to_string(to) +
                     ") for " + a.shape_str());
  const int m = a.rows(), w = to - from;
  Tensor out = Tensor::zeros({m, w});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < w; ++j) out.at(i, j) = a.at(i, from + j);
  if (want_grad(g, {&a})) {
    Tensor ta = a, tout = out;
    g->record("slice_cols", {a}, out, [ta, tout, m, w, from]() mutable {
      if (!ta.tracked()) return;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j)
          ta.grad()[static_cast<size_t>(i) * ta.cols() + from + j] +=
              tout.grad()[static_cast<size_t>(i) * w + j];
    });
  }
  return out;
}

Tensor slice_rows(Graph* g, const Tensor& a, int from, int to) {
  check_2d(a, "slice_rows");
  if (from < 0 || to > a.rows() || from >= to)
    throw ShapeError("slice_rows: bad range [" + std::to_string(from) + "," + std::to_string(to) +
                     ") for " + a.shape_str());
  const int n = a.cols(), h = to - from;
  Tensor out = Tensor::zeros({h, n});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = a.at(from + i, j);
  if (want_grad(g, {&a})) {
    Tensor ta = a, tout = out;
    g->record("slice_rows", {a}, out, [ta, tout, h, n, from]() mutable {
      if (!ta.tracked()) return;
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < n; ++j)
          ta.grad()[static_cast<size_t>(from + i) * n + j] +=
              tout.grad()[static_cast<size_t>(i) * n + j];
    });
  }
  return out;
}

Tensor gather_rows(Graph* g, const Tensor& a, const std::vector<int>& idx) {
  check_2d(a, "gather_rows");
  const int n = a.cols(), m = static_cast<int>(idx.size());
  if (m == 0) throw ShapeError("gather_rows: empty index list");
  for (int r : idx)
    if (r < 0 || r >= a.rows())
      throw ShapeError("gather_rows: index " + std::to_string(r) + " out of range for " +
                       a.shape_str());
  Tensor out = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = a.at(idx[i], j);
  if (want_grad(g, {&a})) {
    Tensor ta = a, to = out;
    g->record("gather_rows", {a}, out, [ta, to, idx, m, n]() mutable {
      if (!ta.tracked()) return;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          ta.grad()[static_cast<size_t>(idx[i]) * n + j] += to.grad()[static_cast<size_t>(i) * n + j];
    });
  }
  return out;
}

Tensor mean_rows(Graph* g, const Tensor& a) {
  check_2d(a, "mean_rows");
  const int m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros({1, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(0, j) += a.at(i, j);
  for (int j = 0; j < n; ++j) out.at(0, j) /= m;
  if (want_grad(g, {&a})) {
    Tensor ta = a, to = out;
    g->record("mean_rows", {a}, out, [ta, to, m, n]() mutable {
      if (!ta.tracked()) return;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) ta.grad()[static_cast<size_t>(i) * n + j] += to.grad()[j] / m;
    });
  }
  return out;
}

Tensor sum_all(Graph* g, const Tensor& a) {
  Tensor out = Tensor::zeros({1});
  Scalar s = 0;
  for (Scalar v : a.values()) s += v;
  out.values()[0] = s;
  if (want_grad(g, {&a})) {
    Tensor ta = a, to = out;
    g->record("sum_all", {a}, out, [ta, to]() mutable {
      if (!ta.tracked()) return;
      const Scalar d = to.grad()[0];
      for (Scalar& gr : ta.grad()) gr += d;
    });
  }
  return out;
}

Tensor rowwise_dot(Graph* g, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "rowwise_dot");
  check_2d(a, "rowwise_dot");
  const int m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros({m, 1});
  for (int i = 0; i < m; ++i) {
    Scalar s = 0;
    for (int j = 0; j < n; ++j) s += a.at(i, j) * b.at(i, j);
    out.at(i, 0) = s;
  }
  if (want_grad(g, {&a, &b})) {
    Tensor ta = a, tb = b, to = out;
    g->record("rowwise_dot", {a, b}, out, [ta, tb, to, m, n]() mutable {
      for (int i = 0; i < m; ++i) {
        const Scalar d = to.grad()[i];
        for (int j = 0; j < n; ++j) {
          if (ta.tracked()) ta.grad()[static_cast<size_t>(i) * n + j] += d * tb.at(i, j);
          if (tb.tracked()) tb.grad()[static_cast<size_t>(i) * n + j] += d * ta.at(i, j);
        }
      }
    });
  }
  return out;
}

Tensor permute_cols_rowwise(Graph* g, const Tensor& a, const std::vector<std::vector<int>>& perms) {
  check_2d(a, "permute_cols_rowwise");
  const int m = a.rows(), n = a.cols();
  if (static_cast<int>(perms.size()) != m)
    throw ShapeError("permute_cols_rowwise: need one permutation per row");
  for (const auto& p : perms)
    if (static_cast<int>(p.size()) != n)
      throw ShapeError("permute_cols_rowwise: permutation length mismatch");
  Tensor out = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = a.at(i, perms[i][j]);
  if (want_grad(g, {&a})) {
    Tensor ta = a, to = out;
    g->record("permute_cols_rowwise", {a}, out, [ta, to, perms, m, n]() mutable {
      if (!ta.tracked()) return;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          ta.grad()[static_cast<size_t>(i) * n + perms[i][j]] +=
              to.grad()[static_cast<size_t>(i) * n + j];
    });
  }
  return out;
}

Tensor prepend_zero_row(Graph* g, const Tensor& a) {
  check_2d(a, "prepend_zero_row");
  const int m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros({m + 1, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i + 1, j) = a.at(i, j);
  if (want_grad(g, {&a})) {
    Tensor ta = a, to = out;
    g->record("prepend_zero_row", {a}, out, [ta, to, m, n]() mutable {
      if (!ta.tracked()) return;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          ta.grad()[static_cast<size_t>(i) * n + j] += to.grad()[static_cast<size_t>(i + 1) * n + j];
    });
  }
  return out;
}

Tensor spmm(Graph* g, const std::shared_ptr<const SparseMatrix>& p, const Tensor& z) {
  if (!p) throw ShapeError("spmm: null sparse matrix");
  check_2d(z, "spmm");
  if (z.rows() != p->n)
    throw ShapeError("spmm: sparse [" + std::to_string(p->n) + "," + std::to_string(p->n) +
                     "] x dense " + z.shape_str());
  const int n = p->n, d = z.cols();
  Tensor out = Tensor::zeros({n, d});
  for (int i = 0; i < n; ++i)
    for (int e = p->row_ptr[i]; e < p->row_ptr[i + 1]; ++e) {
      const Scalar w = p->val[e];
      const int c = p->col[e];
      for (int j = 0; j < d; ++j) out.at(i, j) += w * z.at(c, j);
    }
  if (want_grad(g, {&z})) {
    Tensor tz = z, to = out;
    g->record("spmm", {z}, out, [tz, to, p, n, d]() mutable {
      if (!tz.tracked()) return;
      for (int i = 0; i < n; ++i)
        for (int e = p->row_ptr[i]; e < p->row_ptr[i + 1]; ++e) {
          const Scalar w = p->val[e];
          const int c = p->col[e];
          for (int j = 0; j < d; ++j)
            tz.grad()[static_cast<size_t>(c) * d + j] += w * to.grad()[static_cast<size_t>(i) * d + j];
        }
    });
  }
  return out;
}

}  // namespace restc
