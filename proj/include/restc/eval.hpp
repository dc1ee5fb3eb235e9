#pragma once

#include <span>
#include <string>
#include <vector>

#include "restc/data.hpp"
#include "restc/model.hpp"

namespace restc {

// 1-based rank of target_col within scores; strictly greater scores rank
// ahead, exact ties are broken in favor of the lower index (so a tie at a
// lower index pushes the target down).
int rank_target(std::span<const Scalar> scores, int target_col);

struct RankResult {
  int rank = 0;    // 1-based
  int length = 0;  // prefix length, for length-group reporting
};

// hr@K / mrr@K overall and per length group: S=(0,5], M=(5,10], L=(10,inf).
struct MetricReport {
  struct Row {
    std::string metric;  // "hr" | "mrr"
    int cutoff;
    std::string group;  // "all" | "S" | "M" | "L"
    double value;
    size_t count;  // examples in the group
  };
  std::vector<Row> rows;

  double get(const std::string& metric, int cutoff, const std::string& group = "all") const;
};

MetricReport compute_metrics(const std::vector<RankResult>& ranks, const std::vector<int>& cutoffs);

// Model ranks over a set of examples (inference mode, deterministic).
std::vector<RankResult> model_ranks(Model& model, const std::vector<AugmentedExample>& examples,
                                    int batch_size);

// Frequency-of-target baseline: items ordered by how often they appear as a
// training target (ties to the lower index), every test example scored by
// that one fixed ranking.
std::vector<int64_t> popularity_counts(const std::vector<AugmentedExample>& train, int n_items);
std::vector<RankResult> popularity_ranks(const std::vector<int64_t>& counts,
                                         const std::vector<AugmentedExample>& test);

void write_metric_csv(const std::string& path, const std::vector<const MetricReport*>& reports,
                      const std::vector<std::string>& prefixes);

// Fused session vectors for the examples as CSV rows `label,dim_0..dim_{D-1}`
// (label = target item index).
void export_embeddings(Model& model, const std::vector<AugmentedExample>& examples, int batch_size,
                       const std::string& path);

}  // namespace restc
