#include <doctest.h>

#include <cmath>
#include <set>

#include "restc/params.hpp"

using namespace restc;

namespace {

ModelDims small_dims() {
  ModelDims d;
  d.n_items = 11;
  d.max_len = 6;
  d.hidden = 8;
  d.heads = 2;
  d.sestrans_layers = 2;
  d.mgat_layers = 1;
  d.cfg_layers = 3;
  return d;
}

}  // namespace

TEST_SUITE("params") {

TEST_CASE("shape inventory") {
  const ModelDims dm = small_dims();
  Rng rng(5);
  ModelParams p = ModelParams::init(dm, rng);
  const int d = dm.hidden, dd = 2 * d;
  CHECK(p.item_embed.shape() == std::vector<int>{dm.n_items + 2, d});
  CHECK(p.pos_temporal.shape() == std::vector<int>{dm.max_len + 1, d});
  REQUIRE(p.ses_layers.size() == 2);
  for (const auto& l : p.ses_layers) {
    CHECK(l.wq.shape() == std::vector<int>{dd, dd});
    CHECK(l.w2.shape() == std::vector<int>{dd, dd});
    CHECK(l.b1.shape() == std::vector<int>{1, dd});
  }
  CHECK(p.f_t.shape() == std::vector<int>{dd, 1});
  CHECK(p.out_w1.shape() == std::vector<int>{2 * dd, d});
  CHECK(p.out_w2.shape() == std::vector<int>{d, d});
  CHECK(p.rel_in.shape() == std::vector<int>{1, d});
  CHECK(p.pos_spatial.shape() == std::vector<int>{dm.max_len, d});
  CHECK(p.ws.shape() == std::vector<int>{dd, d});
  CHECK(p.f_s.shape() == std::vector<int>{d, 1});
  REQUIRE(p.wc.size() == 3);
  CHECK(p.wc[0].shape() == std::vector<int>{d, d});
  CHECK(p.wg.shape() == std::vector<int>{3 * d, d});
  CHECK(p.wy.shape() == std::vector<int>{d, dm.n_items});
}

TEST_CASE("padding row and biases start at zero, the rest inside the bound") {
  const ModelDims dm = small_dims();
  Rng rng(6);
  ModelParams p = ModelParams::init(dm, rng);
  for (int j = 0; j < dm.hidden; ++j) CHECK(p.item_embed.at(0, j) == 0.0);
  for (Scalar v : p.b3.values()) CHECK(v == 0.0);
  for (Scalar v : p.out_b1.values()) CHECK(v == 0.0);
  for (Scalar v : p.ses_layers[0].b1.values()) CHECK(v == 0.0);
  const Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(dm.hidden));
  bool any_nonzero = false;
  for (const NamedParam& np : p.named())
    for (Scalar v : np.tensor.values()) {
      CHECK(std::abs(v) <= bound);
      any_nonzero = any_nonzero || v != 0.0;
    }
  CHECK(any_nonzero);
  // Summary-token row is a real parameter, not left at zero.
  Scalar summary_norm = 0;
  for (int j = 0; j < dm.hidden; ++j)
    summary_norm += p.item_embed.at(dm.n_items + 1, j) * p.item_embed.at(dm.n_items + 1, j);
  CHECK(summary_norm > 0.0);
}

TEST_CASE("named inventory is unique, grouped, and aliases the tensors") {
  const ModelDims dm = small_dims();
  Rng rng(7);
  ModelParams p = ModelParams::init(dm, rng);
  auto named = p.named();
  std::set<std::string> names;
  const std::set<std::string> groups = {"temporal", "spatial", "relation", "cfg", "fusion"};
  for (const NamedParam& np : named) {
    CHECK(names.insert(np.name).second);
    CHECK(groups.count(np.group) == 1);
    CHECK(np.tensor.requires_grad());
  }
  // 2 tables + 2*7 encoder + 8 head/readout + 4 relations + 6 spatial + 3 hops
  // + 7 fusion.
  CHECK(named.size() == 2 + 7 * 2 + 8 + 4 + 6 + 3 + 7);
  CHECK(named.size() == p.tensors().size());
  // Same underlying storage, not copies.
  p.item_embed.at(1, 0) = 123.0;
  for (const NamedParam& np : named)
    if (np.name == "item_embed") CHECK(np.tensor.at(1, 0) == 123.0);
  // Stable order.
  auto again = p.named();
  for (size_t i = 0; i < named.size(); ++i) CHECK(named[i].name == again[i].name);
}

TEST_CASE("squared l2 and scalar count match a direct sum") {
  const ModelDims dm = small_dims();
  Rng rng(8);
  ModelParams p = ModelParams::init(dm, rng);
  Scalar sq = 0;
  size_t n = 0;
  for (const NamedParam& np : p.named()) {
    n += np.tensor.size();
    for (Scalar v : np.tensor.values()) sq += v * v;
  }
  CHECK(p.squared_l2() == doctest::Approx(sq).epsilon(1e-15));
  CHECK(p.scalar_count() == n);
}

TEST_CASE("init is deterministic in the seed") {
  const ModelDims dm = small_dims();
  Rng r1(99), r2(99), r3(100);
  ModelParams a = ModelParams::init(dm, r1);
  ModelParams b = ModelParams::init(dm, r2);
  ModelParams c = ModelParams::init(dm, r3);
  auto na = a.named(), nb = b.named(), nc = c.named();
  bool any_diff = false;
  for (size_t i = 0; i < na.size(); ++i) {
    CHECK(na[i].tensor.values() == nb[i].tensor.values());
    any_diff = any_diff || na[i].tensor.values() != nc[i].tensor.values();
  }
  CHECK(any_diff);
}

TEST_CASE("dims hash separates architectures") {
  const ModelDims a = small_dims();
  ModelDims b = a;
  b.hidden = 16;
  ModelDims c = a;
  c.max_len = 7;
  CHECK(a.hash() == small_dims().hash());
  CHECK(a.hash() != b.hash());
  CHECK(a.hash() != c.hash());
}

TEST_CASE("init validates dims") {
  Rng rng(1);
  ModelDims bad = small_dims();
  bad.n_items = 0;
  CHECK_THROWS_AS(ModelParams::init(bad, rng), UsageError);
  bad = small_dims();
  bad.heads = 3;  // 16 % 3 != 0
  CHECK_THROWS_AS(ModelParams::init(bad, rng), UsageError);
  bad = small_dims();
  bad.cfg_layers = 5;
  CHECK_THROWS_AS(ModelParams::init(bad, rng), UsageError);
}

}  // TEST_SUITE
