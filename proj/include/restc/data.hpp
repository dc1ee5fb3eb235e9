#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "restc/common.hpp"
#include "restc/graphs.hpp"

namespace restc {

struct RawEvent {
  std::string session_id;
  std::string item_id;
  int64_t timestamp = 0;  // seconds
};

struct ParseResult {
  std::vector<RawEvent> events;
  size_t malformed = 0;
};

// Reads `session_id,item_id,timestamp` CSV; a header line is auto-detected.
// Malformed lines are skipped and counted; more than half malformed raises
// DataError, as does an unreadable file.
ParseResult parse_sessions(const std::string& path);

// Dense item index mapping. Index 0 is reserved for padding and index N+1 for
// the sequence-summary token, so real items live in 1..N.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> items);

  int size() const { return static_cast<int>(items_.size()); }  // N
  int padding_index() const { return 0; }
  int summary_index() const { return size() + 1; }
  // 1..N for known items, 0 for unknown.
  int index_of(const std::string& item) const;
  const std::string& item_of(int index) const;  // index in 1..N

 private:
  std::vector<std::string> items_;
  std::map<std::string, int> index_;
};

struct SplitResult {
  std::vector<std::vector<int>> train_sessions;  // vocab indices
  std::vector<std::vector<int>> test_sessions;
  Vocab vocab;
  int64_t clicks = 0;  // events surviving the filters (train + test)
};

// Groups events into sessions ordered by timestamp, removes items occurring
// fewer than min_item_freq times over all sessions, drops sessions of length
// <= 1, sends sessions whose last timestamp falls within test_window_days of
// the corpus maximum to test, builds the vocab from train only, and prunes
// test items outside it. Raises DataError when nothing survives.
SplitResult filter_and_split(const std::vector<RawEvent>& events, int test_window_days,
                             int min_item_freq = 5);

struct AugmentedExample {
  std::vector<int> prefix;  // length >= 1, vocab indices
  int target = 0;
  int original_length = 0;  // prefix length before any truncation
};

// Session of length M -> M-1 (prefix, next-item) examples.
std::vector<AugmentedExample> augment_prefixes(const std::vector<int>& session);
std::vector<AugmentedExample> augment_all(const std::vector<std::vector<int>>& sessions);

// One padded minibatch. Row layout: prefix items (most recent max_len kept),
// then the summary token, then zero padding; width is max_len+1.
struct Batch {
  int rows = 0;
  int width = 0;
  std::vector<int> indices;           // rows*width
  std::vector<int> lengths;           // real items per row (post-truncation)
  std::vector<int> original_lengths;  // pre-truncation, for length-group metrics
  std::vector<int> targets;
  std::vector<uint8_t> mask;  // rows*width, 1 on items and the summary slot

  int index_at(int r, int c) const { return indices[static_cast<size_t>(r) * width + c]; }
};

// Deterministic batching; when shuffle is set the example order is drawn from
// `seed` (Fisher-Yates), otherwise input order is kept. The final partial
// batch is kept.
std::vector<Batch> make_batches(const std::vector<AugmentedExample>& examples, int batch_size,
                                int max_len, int summary_index, bool shuffle, uint64_t seed);

// Longest prefix over the examples, capped.
int effective_max_len(const std::vector<AugmentedExample>& examples, int cap);

struct DatasetStats {
  int items = 0;
  int64_t clicks = 0;
  size_t train_examples = 0;
  size_t test_examples = 0;
  double avg_len = 0.0;  // mean augmented-prefix length over train+test
};

DatasetStats compute_stats(const SplitResult& split, const std::vector<AugmentedExample>& train,
                           const std::vector<AugmentedExample>& test);

// On-disk dataset directory: vocab.tsv, train.examples, test.examples,
// cfg.tsv, stats.tsv. Write is byte-deterministic for identical inputs.
void write_dataset_dir(const std::string& dir, const SplitResult& split);

struct Dataset {
  Vocab vocab;
  std::vector<AugmentedExample> train;
  std::vector<AugmentedExample> test;
  CollabGraph cfg;
  DatasetStats stats;
};

Dataset load_dataset_dir(const std::string& dir);

}  // namespace restc
