#include "restc/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace restc {

int rank_target(std::span<const Scalar> scores, int target_col) {
  const int n = static_cast<int>(scores.size());
  if (target_col < 0 || target_col >= n)
    throw UsageError("rank_target: target column " + std::to_string(target_col) +
                     " outside 0.." + std::to_string(n - 1));
  const Scalar s = scores[target_col];
  int rank = 1;
  for (int j = 0; j < n; ++j) {
    if (scores[j] > s) ++rank;
    else if (scores[j] == s && j < target_col) ++rank;
  }
  return rank;
}

namespace {

const char* length_group(int length) {
  if (length <= 5) return "S";
  if (length <= 10) return "M";
  return "L";
}

}  // namespace

double MetricReport::get(const std::string& metric, int cutoff, const std::string& group) const {
  for (const Row& r : rows)
    if (r.metric == metric && r.cutoff == cutoff && r.group == group) return r.value;
  throw UsageError("metric report has no row " + metric + "@" + std::to_string(cutoff) + "/" +
                   group);
}

MetricReport compute_metrics(const std::vector<RankResult>& ranks,
                             const std::vector<int>& cutoffs) {
  if (ranks.empty()) throw UsageError("compute_metrics: no ranks");
  MetricReport report;
  const std::vector<std::string> groups = {"all", "S", "M", "L"};
  for (const std::string& g : groups) {
    for (int k : cutoffs) {
      double hits = 0, rr = 0;
      size_t count = 0;
      for (const RankResult& r : ranks) {
        if (g != "all" && g != length_group(r.length)) continue;
        ++count;
        if (r.rank <= k) {
          hits += 1.0;
          rr += 1.0 / r.rank;
        }
      }
      const double denom = count ? static_cast<double>(count) : 1.0;
      report.rows.push_back({"hr", k, g, hits / denom, count});
      report.rows.push_back({"mrr", k, g, rr / denom, count});
    }
  }
  return report;
}

namespace {

// Inference forward over examples in fixed order; hands each probability row
// and its batch position to the sink.
template <typename Fn>
void for_each_output_row(Model& model, const std::vector<AugmentedExample>& examples,
                         int batch_size, Fn&& fn) {
  if (examples.empty()) throw UsageError("evaluation requires at least one example");
  const ModelDims& dims = model.dims();
  std::vector<Batch> batches = make_batches(examples, batch_size, dims.max_len,
                                            dims.n_items + 1, /*shuffle=*/false, /*seed=*/0);
  ForwardCtx ctx;  // inference: no tape, no rng, no dropout
  Tensor global;
  if (!model.config().no_cfg) global = model.global_embedding(ctx);
  size_t example_pos = 0;
  for (const Batch& b : batches) {
    BatchOut out = model.forward_batch(ctx, b, global);
    for (int r = 0; r < b.rows; ++r, ++example_pos) fn(b, out, r);
  }
}

}  // namespace

std::vector<RankResult> model_ranks(Model& model, const std::vector<AugmentedExample>& examples,
                                    int batch_size) {
  std::vector<RankResult> ranks;
  ranks.reserve(examples.size());
  const int n = model.dims().n_items;
  for_each_output_row(model, examples, batch_size, [&](const Batch& b, BatchOut& out, int r) {
    std::span<const Scalar> row(out.probs.values().data() + static_cast<size_t>(r) * n,
                                static_cast<size_t>(n));
    ranks.push_back({rank_target(row, b.targets[r] - 1), b.original_lengths[r]});
  });
  return ranks;
}

std::vector<int64_t> popularity_counts(const std::vector<AugmentedExample>& train, int n_items) {
  std::vector<int64_t> counts(static_cast<size_t>(n_items) + 1, 0);
  for (const AugmentedExample& e : train) {
    if (e.target < 1 || e.target > n_items)
      throw DataError("popularity_counts: target outside vocabulary");
    ++counts[e.target];
  }
  return counts;
}

std::vector<RankResult> popularity_ranks(const std::vector<int64_t>& counts,
                                         const std::vector<AugmentedExample>& test) {
  const int n = static_cast<int>(counts.size()) - 1;
  if (n < 1) throw UsageError("popularity_ranks: empty count table");
  // One fixed ranking: by count descending, ties to the lower index.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return counts[a + 1] > counts[b + 1]; });
  std::vector<int> rank_of(n);
  for (int pos = 0; pos < n; ++pos) rank_of[order[pos]] = pos + 1;
  std::vector<RankResult> ranks;
  ranks.reserve(test.size());
  for (const AugmentedExample& e : test) {
    if (e.target < 1 || e.target > n)
      throw DataError("popularity_ranks: target outside vocabulary");
    ranks.push_back({rank_of[e.target - 1], e.original_length});
  }
  return ranks;
}

void write_metric_csv(const std::string& path, const std::vector<const MetricReport*>& reports,
                      const std::vector<std::string>& prefixes) {
  if (reports.size() != prefixes.size())
    throw UsageError("write_metric_csv: one prefix per report required");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "metric,cutoff,group,value\n";
  char buf[64];
  for (size_t i = 0; i < reports.size(); ++i) {
    for (const MetricReport::Row& r : reports[i]->rows) {
      std::snprintf(buf, sizeof(buf), "%.17g", r.value);
      out << prefixes[i] << r.metric << "," << r.cutoff << "," << r.group << "," << buf << "\n";
    }
  }
  if (!out) throw DataError("failed writing " + path);
}

void export_embeddings(Model& model, const std::vector<AugmentedExample>& examples, int batch_size,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  const int d = model.dims().hidden;
  out << "label";
  for (int j = 0; j < d; ++j) out << ",dim_" << j;
  out << "\n";
  char buf[64];
  for_each_output_row(model, examples, batch_size, [&](const Batch& b, BatchOut& res, int r) {
    out << b.targets[r];
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", res.fused.at(r, j));
      out << "," << buf;
    }
    out << "\n";
  });
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace restc
