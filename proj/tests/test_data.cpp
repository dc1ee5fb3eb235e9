#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "restc/data.hpp"

using namespace restc;
namespace fs = std::filesystem;

namespace {

fs::path tmp_path(const std::string& name) {
  return fs::temp_directory_path() / ("restc_data_test_" + name);
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  REQUIRE(out.good());
  for (const auto& l : lines) out << l << "\n";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RawEvent ev(const std::string& sid, const std::string& item, int64_t ts) {
  return RawEvent{sid, item, ts};
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("csv parsing skips a header and counts malformed lines") {
  const fs::path p = tmp_path("parse.csv");
  write_lines(p, {
                     "session_id,item_id,timestamp",
                     "s1,a,100",
                     "s1,b,110",
                     "bad line with,two",
                     "s2,,120",
                     "s2,c,130",
                     "s2,d,not_a_number",
                     "s3,e,140",
                 });
  ParseResult res = parse_sessions(p.string());
  CHECK(res.events.size() == 4);
  CHECK(res.malformed == 3);
  CHECK(res.events[0].session_id == "s1");
  CHECK(res.events[0].item_id == "a");
  CHECK(res.events[0].timestamp == 100);
  fs::remove(p);
}

TEST_CASE("csv parsing keeps a valid first line as data") {
  const fs::path p = tmp_path("parse_noheader.csv");
  write_lines(p, {"s1,a,100", "s1,b,110"});
  ParseResult res = parse_sessions(p.string());
  CHECK(res.events.size() == 2);
  CHECK(res.malformed == 0);
  fs::remove(p);
}

TEST_CASE("csv parsing refuses mostly-malformed files and missing files") {
  const fs::path p = tmp_path("parse_bad.csv");
  write_lines(p, {"session_id,item_id,timestamp", "s1,a,100", "oops", "also bad"});
  CHECK_THROWS_AS(parse_sessions(p.string()), DataError);
  fs::remove(p);
  CHECK_THROWS_AS(parse_sessions(tmp_path("does_not_exist.csv").string()), DataError);
}

TEST_CASE("vocab assigns first-occurrence indices with reserved rows") {
  Vocab v(std::vector<std::string>{"beta", "alpha", "gamma"});
  CHECK(v.size() == 3);
  CHECK(v.padding_index() == 0);
  CHECK(v.summary_index() == 4);
  CHECK(v.index_of("beta") == 1);
  CHECK(v.index_of("alpha") == 2);
  CHECK(v.index_of("gamma") == 3);
  CHECK(v.index_of("unknown") == 0);
  CHECK(v.item_of(2) == "alpha");
  CHECK_THROWS_AS(v.item_of(0), DataError);
  CHECK_THROWS_AS(v.item_of(4), DataError);
}

TEST_CASE("filter and split: frequency filter, window split, test pruning") {
  const int64_t day = 86400;
  std::vector<RawEvent> events = {
      // Two early sessions -> train.
      ev("s1", "a", 0), ev("s1", "b", 10), ev("s1", "c", 20),
      ev("s2", "b", 100), ev("s2", "c", 110), ev("s2", "a", 120),
      // "z" occurs once -> removed; the session shrinks to one item -> dropped.
      ev("s3", "a", 200), ev("s3", "z", 210),
      // Two sessions on day 5 -> test. "q" survives the frequency filter (two
      // occurrences) but never appears in train, so it is pruned from test.
      ev("s4", "c", 5 * day), ev("s4", "q", 5 * day + 10), ev("s4", "a", 5 * day + 20),
      ev("s5", "q", 5 * day + 100), ev("s5", "c", 5 * day + 110),
  };
  SplitResult s = filter_and_split(events, /*test_window_days=*/1, /*min_item_freq=*/2);
  CHECK(s.vocab.size() == 3);
  CHECK(s.vocab.index_of("a") == 1);
  CHECK(s.vocab.index_of("b") == 2);
  CHECK(s.vocab.index_of("c") == 3);
  CHECK(s.vocab.index_of("q") == 0);
  REQUIRE(s.train_sessions.size() == 2);
  CHECK(s.train_sessions[0] == std::vector<int>{1, 2, 3});
  CHECK(s.train_sessions[1] == std::vector<int>{2, 3, 1});
  // s4 keeps [c, a]; s5 shrinks below two items and is dropped.
  REQUIRE(s.test_sessions.size() == 1);
  CHECK(s.test_sessions[0] == std::vector<int>{3, 1});
  CHECK(s.clicks == 8);
}

TEST_CASE("filter and split orders events by timestamp within a session") {
  std::vector<RawEvent> events = {
      ev("s1", "late", 300), ev("s1", "early", 100), ev("s1", "mid", 200),
      ev("s2", "early", 400), ev("s2", "late", 410), ev("s2", "mid", 420),
  };
  SplitResult s = filter_and_split(events, 0, 1);
  REQUIRE(s.train_sessions.size() == 2);
  CHECK(s.train_sessions[0] ==
        std::vector<int>{s.vocab.index_of("early"), s.vocab.index_of("mid"),
                         s.vocab.index_of("late")});
}

TEST_CASE("filter and split failure modes") {
  CHECK_THROWS_AS(filter_and_split({}, 1, 1), DataError);
  // Everything rare.
  CHECK_THROWS_AS(filter_and_split({ev("s1", "a", 0), ev("s1", "b", 1)}, 0, 2), DataError);
  // All surviving sessions inside the test window.
  CHECK_THROWS_AS(filter_and_split({ev("s1", "a", 0), ev("s1", "b", 1),
                                    ev("s2", "a", 2), ev("s2", "b", 3)},
                                   3, 1),
                  DataError);
}

TEST_CASE("prefix augmentation emits one example per next item") {
  auto ex = augment_prefixes({4, 7, 9});
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].prefix == std::vector<int>{4});
  CHECK(ex[0].target == 7);
  CHECK(ex[0].original_length == 1);
  CHECK(ex[1].prefix == std::vector<int>{4, 7});
  CHECK(ex[1].target == 9);
  CHECK(ex[1].original_length == 2);
  CHECK_THROWS_AS(augment_prefixes({4}), DataError);
  CHECK(augment_all({{1, 2, 3}, {2, 3}}).size() == 3);
}

TEST_CASE("effective max length caps the longest prefix") {
  std::vector<AugmentedExample> ex = augment_all({{1, 2, 3, 1, 2, 3, 1, 2}});  // prefixes 1..7
  CHECK(effective_max_len(ex, 50) == 7);
  CHECK(effective_max_len(ex, 5) == 5);
  CHECK(effective_max_len({}, 5) == 1);
}

TEST_CASE("batch layout: items, summary slot, padding, truncation") {
  std::vector<AugmentedExample> ex;
  ex.push_back({{5, 6}, 7, 2});
  ex.push_back({{1, 2, 3, 4, 5}, 6, 5});
  ex.push_back({{9}, 1, 1});
  auto batches = make_batches(ex, /*batch_size=*/2, /*max_len=*/3, /*summary_index=*/99,
                              /*shuffle=*/false, 0);
  REQUIRE(batches.size() == 2);
  const Batch& b0 = batches[0];
  CHECK(b0.rows == 2);
  CHECK(b0.width == 4);
  CHECK(b0.indices == std::vector<int>{5, 6, 99, 0, /* most recent three: */ 3, 4, 5, 99});
  CHECK(b0.mask == std::vector<uint8_t>{1, 1, 1, 0, 1, 1, 1, 1});
  CHECK(b0.lengths == std::vector<int>{2, 3});
  CHECK(b0.original_lengths == std::vector<int>{2, 5});
  CHECK(b0.targets == std::vector<int>{7, 6});
  CHECK(b0.index_at(1, 0) == 3);
  // Final partial batch.
  const Batch& b1 = batches[1];
  CHECK(b1.rows == 1);
  CHECK(b1.indices == std::vector<int>{9, 99, 0, 0});
  CHECK_THROWS_AS(make_batches(ex, 0, 3, 99, false, 0), UsageError);
}

TEST_CASE("shuffled batching is seed-deterministic and covers every example") {
  std::vector<AugmentedExample> ex;
  for (int i = 1; i <= 23; ++i) ex.push_back({{i}, i, 1});
  auto a = make_batches(ex, 4, 2, 99, true, 1234);
  auto b = make_batches(ex, 4, 2, 99, true, 1234);
  REQUIRE(a.size() == b.size());
  std::multiset<int> seen;
  for (size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].indices == b[k].indices);
    CHECK(a[k].targets == b[k].targets);
    for (int t : a[k].targets) seen.insert(t);
  }
  std::multiset<int> want;
  for (int i = 1; i <= 23; ++i) want.insert(i);
  CHECK(seen == want);
}

TEST_CASE("dataset stats") {
  const int64_t day = 86400;
  std::vector<RawEvent> events = {
      ev("s1", "a", 0), ev("s1", "b", 10), ev("s1", "c", 20),
      ev("s2", "b", 100), ev("s2", "c", 110), ev("s2", "a", 120),
      ev("s4", "c", 5 * day), ev("s4", "a", 5 * day + 20),
  };
  SplitResult s = filter_and_split(events, 1, 1);
  auto train = augment_all(s.train_sessions);
  auto test = augment_all(s.test_sessions);
  DatasetStats st = compute_stats(s, train, test);
  CHECK(st.items == 3);
  CHECK(st.clicks == 8);
  CHECK(st.train_examples == 4);
  CHECK(st.test_examples == 1);
  // Prefix lengths 1,2,1,2 in train and 1 in test.
  CHECK(st.avg_len == doctest::Approx(7.0 / 5.0).epsilon(1e-12));
}

TEST_CASE("dataset directory round-trip is lossless and byte-deterministic") {
  const int64_t day = 86400;
  std::vector<RawEvent> events = {
      ev("s1", "a", 0), ev("s1", "b", 10), ev("s1", "c", 20),
      ev("s2", "b", 100), ev("s2", "c", 110), ev("s2", "a", 120),
      ev("s4", "c", 5 * day), ev("s4", "a", 5 * day + 20),
  };
  SplitResult s = filter_and_split(events, 1, 1);
  const fs::path dir1 = tmp_path("ds1");
  const fs::path dir2 = tmp_path("ds2");
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  write_dataset_dir(dir1.string(), s);
  write_dataset_dir(dir2.string(), s);
  for (const char* f : {"vocab.tsv", "train.examples", "test.examples", "cfg.tsv", "stats.tsv"})
    CHECK(slurp(dir1 / f) == slurp(dir2 / f));

  Dataset ds = load_dataset_dir(dir1.string());
  CHECK(ds.vocab.size() == 3);
  CHECK(ds.vocab.item_of(1) == "a");
  CHECK(ds.train.size() == 4);
  CHECK(ds.test.size() == 1);
  CHECK(ds.train[1].prefix == std::vector<int>{1, 2});
  CHECK(ds.train[1].target == 3);
  CHECK(ds.test[0].prefix == std::vector<int>{3});
  CHECK(ds.test[0].target == 1);
  // Co-occurrence from train sessions [1,2,3] and [2,3,1]: pairs (1,2) once,
  // (2,3) twice, (3,1) once.
  CHECK(ds.cfg.weight(1, 2) == 1);
  CHECK(ds.cfg.weight(2, 3) == 2);
  CHECK(ds.cfg.weight(1, 3) == 1);
  CHECK(ds.stats.avg_len == doctest::Approx(7.0 / 5.0));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  CHECK_THROWS_AS(load_dataset_dir(tmp_path("missing_dir").string()), DataError);
}

}  // TEST_SUITE
