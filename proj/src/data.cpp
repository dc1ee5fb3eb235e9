#include "restc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "restc/rng.hpp"

namespace restc {

namespace {

bool parse_i64(const std::string& s, int64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

ParseResult parse_sessions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  ParseResult res;
  std::string line;
  size_t total = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    int64_t ts = 0;
    const bool ok = fields.size() == 3 && !fields[0].empty() && !fields[1].empty() &&
                    parse_i64(fields[2], ts);
    if (first) {
      first = false;
      if (!ok) continue;  // header line, not counted as malformed
    }
    ++total;
    if (!ok) {
      ++res.malformed;
      continue;
    }
    res.events.push_back(RawEvent{fields[0], fields[1], ts});
  }
  if (total > 0 && res.malformed * 2 > total)
    throw DataError(path + ": " + std::to_string(res.malformed) + " of " + std::to_string(total) +
                    " lines malformed, refusing the file");
  return res;
}

Vocab::Vocab(std::vector<std::string> items) : items_(std::move(items)) {
  for (int i = 0; i < static_cast<int>(items_.size()); ++i) index_[items_[i]] = i + 1;
}

int Vocab::index_of(const std::string& item) const {
  auto it = index_.find(item);
  return it == index_.end() ? 0 : it->second;
}

const std::string& Vocab::item_of(int index) const {
  if (index < 1 || index > size())
    throw DataError("vocab: index " + std::to_string(index) + " out of range 1.." +
                    std::to_string(size()));
  return items_[index - 1];
}

SplitResult filter_and_split(const std::vector<RawEvent>& events, int test_window_days,
                             int min_item_freq) {
  if (events.empty()) throw DataError("no events to split");
  // Group by session, events ordered by timestamp (stable on ties).
  std::map<std::string, std::vector<size_t>> by_session;
  for (size_t i = 0; i < events.size(); ++i) by_session[events[i].session_id].push_back(i);
  struct Sess {
    std::vector<std::string> items;
    int64_t last_ts;
  };
  std::vector<Sess> sessions;
  std::map<std::string, int64_t> item_count;
  for (auto& [sid, idx] : by_session) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return events[a].timestamp < events[b].timestamp; });
    Sess s;
    s.last_ts = events[idx.back()].timestamp;
    for (size_t i : idx) {
      s.items.push_back(events[i].item_id);
      ++item_count[events[i].item_id];
    }
    sessions.push_back(std::move(s));
  }
  // Rare items go first, then too-short sessions.
  int64_t max_ts = INT64_MIN;
  std::vector<Sess> kept;
  for (Sess& s : sessions) {
    std::vector<std::string> items;
    for (auto& it : s.items)
      if (item_count[it] >= min_item_freq) items.push_back(std::move(it));
    if (items.size() <= 1) continue;
    s.items = std::move(items);
    max_ts = std::max(max_ts, s.last_ts);
    kept.push_back(std::move(s));
  }
  if (kept.empty()) throw DataError("all sessions removed by the frequency/length filters");
  // Sessions ending within the window of the corpus maximum form the test set.
  const int64_t cutoff = max_ts - static_cast<int64_t>(test_window_days) * 86400;
  std::vector<const Sess*> train_raw, test_raw;
  for (const Sess& s : kept) (s.last_ts > cutoff ? test_raw : train_raw).push_back(&s);
  if (train_raw.empty()) throw DataError("no training sessions outside the test window");
  // Vocab from train only, first-occurrence order.
  std::vector<std::string> vocab_items;
  std::map<std::string, int> seen;
  for (const Sess* s : train_raw)
    for (const auto& it : s->items)
      if (seen.emplace(it, 1).second) vocab_items.push_back(it);
  SplitResult res;
  res.vocab = Vocab(std::move(vocab_items));
  for (const Sess* s : train_raw) {
    std::vector<int> ids;
    for (const auto& it : s->items) ids.push_back(res.vocab.index_of(it));
    res.clicks += static_cast<int64_t>(ids.size());
    res.train_sessions.push_back(std::move(ids));
  }
  // Unseen items drop out of test; shrunken sessions must still be usable.
  for (const Sess* s : test_raw) {
    std::vector<int> ids;
    for (const auto& it : s->items) {
      const int id = res.vocab.index_of(it);
      if (id > 0) ids.push_back(id);
    }
    if (ids.size() <= 1) continue;
    res.clicks += static_cast<int64_t>(ids.size());
    res.test_sessions.push_back(std::move(ids));
  }
  return res;
}

std::vector<AugmentedExample> augment_prefixes(const std::vector<int>& session) {
  if (session.size() < 2)
    throw DataError("augment_prefixes: session shorter than 2 items");
  std::vector<AugmentedExample> out;
  out.reserve(session.size() - 1);
  for (size_t k = 1; k < session.size(); ++k) {
    AugmentedExample ex;
    ex.prefix.assign(session.begin(), session.begin() + k);
    ex.target = session[k];
    ex.original_length = static_cast<int>(k);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<AugmentedExample> augment_all(const std::vector<std::vector<int>>& sessions) {
  std::vector<AugmentedExample> out;
  for (const auto& s : sessions) {
    auto ex = augment_prefixes(s);
    out.insert(out.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
  }
  return out;
}

int effective_max_len(const std::vector<AugmentedExample>& examples, int cap) {
  int longest = 1;
  for (const auto& ex : examples) longest = std::max(longest, static_cast<int>(ex.prefix.size()));
  return std::min(longest, cap);
}

std::vector<Batch> make_batches(const std::vector<AugmentedExample>& examples, int batch_size,
                                int max_len, int summary_index, bool shuffle, uint64_t seed) {
  if (batch_size < 1) throw UsageError("make_batches: batch_size must be >= 1");
  if (max_len < 1) throw UsageError("make_batches: max_len must be >= 1");
  std::vector<int> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  if (shuffle) Rng(seed).shuffle(order);
  std::vector<Batch> batches;
  const int width = max_len + 1;
  for (size_t start = 0; start < order.size(); start += batch_size) {
    const int rows = static_cast<int>(std::min(order.size() - start, static_cast<size_t>(batch_size)));
    Batch b;
    b.rows = rows;
    b.width = width;
    b.indices.assign(static_cast<size_t>(rows) * width, 0);
    b.mask.assign(static_cast<size_t>(rows) * width, 0);
    b.lengths.resize(rows);
    b.original_lengths.resize(rows);
    b.targets.resize(rows);
    for (int r = 0; r < rows; ++r) {
      const AugmentedExample& ex = examples[order[start + r]];
      // Keep the most recent max_len items, then the summary token, then pads.
      const int m = static_cast<int>(std::min(ex.prefix.size(), static_cast<size_t>(max_len)));
      const size_t from = ex.prefix.size() - static_cast<size_t>(m);
      for (int c = 0; c < m; ++c) {
        b.indices[static_cast<size_t>(r) * width + c] = ex.prefix[from + c];
        b.mask[static_cast<size_t>(r) * width + c] = 1;
      }
      b.indices[static_cast<size_t>(r) * width + m] = summary_index;
      b.mask[static_cast<size_t>(r) * width + m] = 1;
      b.lengths[r] = m;
      b.original_lengths[r] = ex.original_length;
      b.targets[r] = ex.target;
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

DatasetStats compute_stats(const SplitResult& split, const std::vector<AugmentedExample>& train,
                           const std::vector<AugmentedExample>& test) {
  DatasetStats st;
  st.items = split.vocab.size();
  st.clicks = split.clicks;
  st.train_examples = train.size();
  st.test_examples = test.size();
  size_t total_len = 0;
  for (const auto& ex : train) total_len += ex.prefix.size();
  for (const auto& ex : test) total_len += ex.prefix.size();
  const size_t n = train.size() + test.size();
  st.avg_len = n == 0 ? 0.0 : static_cast<double>(total_len) / static_cast<double>(n);
  return st;
}

namespace {

void write_examples(const std::string& path, const std::vector<AugmentedExample>& examples) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& ex : examples) {
    out << ex.target << "\t";
    for (size_t i = 0; i < ex.prefix.size(); ++i) {
      if (i) out << ' ';
      out << ex.prefix[i];
    }
    out << "\n";
  }
}

std::vector<AugmentedExample> load_examples(const std::string& path, int n_items) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::vector<AugmentedExample> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(path + ":" + std::to_string(lineno) + ": missing tab separator");
    AugmentedExample ex;
    try {
      ex.target = std::stoi(line.substr(0, tab));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad target");
    }
    std::istringstream rest(line.substr(tab + 1));
    int v;
    while (rest >> v) ex.prefix.push_back(v);
    if (ex.prefix.empty() || ex.target < 1 || ex.target > n_items)
      throw DataError(path + ":" + std::to_string(lineno) + ": bad example");
    for (int p : ex.prefix)
      if (p < 1 || p > n_items)
        throw DataError(path + ":" + std::to_string(lineno) + ": prefix index out of range");
    ex.original_length = static_cast<int>(ex.prefix.size());
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

void write_dataset_dir(const std::string& dir, const SplitResult& split) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/vocab.tsv");
    if (!out) throw DataError("cannot write " + dir + "/vocab.tsv");
    for (int i = 1; i <= split.vocab.size(); ++i) out << i << "\t" << split.vocab.item_of(i) << "\n";
  }
  const auto train = augment_all(split.train_sessions);
  const auto test = augment_all(split.test_sessions);
  write_examples(dir + "/train.examples", train);
  write_examples(dir + "/test.examples", test);
  write_cfg(dir + "/cfg.tsv", build_cfg(split.train_sessions, split.vocab.size()));
  const DatasetStats st = compute_stats(split, train, test);
  std::ofstream out(dir + "/stats.tsv");
  if (!out) throw DataError("cannot write " + dir + "/stats.tsv");
  out << "items\tclicks\ttrain\ttest\tavg_len\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", st.avg_len);
  out << st.items << "\t" << st.clicks << "\t" << st.train_examples << "\t" << st.test_examples
      << "\t" << buf << "\n";
}

Dataset load_dataset_dir(const std::string& dir) {
  Dataset ds;
  {
    std::ifstream in(dir + "/vocab.tsv");
    if (!in) throw DataError("cannot read " + dir + "/vocab.tsv");
    std::vector<std::string> items;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const size_t tab = line.find('\t');
      if (tab == std::string::npos)
        throw DataError(dir + "/vocab.tsv:" + std::to_string(lineno) + ": missing tab");
      int idx = 0;
      try {
        idx = std::stoi(line.substr(0, tab));
      } catch (const std::exception&) {
        throw DataError(dir + "/vocab.tsv:" + std::to_string(lineno) + ": bad index");
      }
      if (idx != static_cast<int>(items.size()) + 1)
        throw DataError(dir + "/vocab.tsv:" + std::to_string(lineno) + ": non-contiguous index");
      items.push_back(line.substr(tab + 1));
    }
    ds.vocab = Vocab(std::move(items));
  }
  ds.train = load_examples(dir + "/train.examples", ds.vocab.size());
  ds.test = load_examples(dir + "/test.examples", ds.vocab.size());
  if (ds.train.empty()) throw DataError(dir + ": empty training set");
  ds.cfg = load_cfg(dir + "/cfg.tsv");
  if (ds.cfg.n_items != ds.vocab.size())
    throw DataError(dir + ": cfg.tsv item count disagrees with vocab.tsv");
  // Stats are derivable; keep whatever preprocess wrote if present.
  ds.stats.items = ds.vocab.size();
  ds.stats.train_examples = ds.train.size();
  ds.stats.test_examples = ds.test.size();
  size_t total_len = 0;
  for (const auto& ex : ds.train) total_len += ex.prefix.size();
  for (const auto& ex : ds.test) total_len += ex.prefix.size();
  const size_t n = ds.train.size() + ds.test.size();
  ds.stats.avg_len = n == 0 ? 0.0 : static_cast<double>(total_len) / static_cast<double>(n);
  return ds;
}

}  // namespace restc
