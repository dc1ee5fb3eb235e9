#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "restc/ops.hpp"

namespace restc {

// Edge types of the multi-relational session graph. For a transition pair
// (a,b) observed only forward, a->b is Out and b->a is In; pairs observed in
// both directions become Bi in both directions; a->a (and isolated nodes)
// become SelfLoop. Exactly one relation per ordered node pair.
enum class Relation : int { In = 0, Out = 1, Bi = 2, SelfLoop = 3 };
constexpr int kNumRelations = 4;
const char* relation_name(Relation r);

// Session graph over the unique items of one session prefix.
struct Msg {
  std::vector<int> nodes;             // item indices, first-occurrence order
  std::vector<int> node_of_position;  // [M] position -> node slot
  // adj[node][relation] = neighbor node slots, sorted by neighbor item index
  // so aggregation order is independent of node numbering.
  std::vector<std::array<std::vector<int>, kNumRelations>> adj;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int session_length() const { return static_cast<int>(node_of_position.size()); }
  bool has_edge(int src, int dst, Relation r) const;
  size_t edge_count() const;
  // First position (0-based) at which each node occurs.
  std::vector<int> first_occurrence() const;
};

Msg build_msg(std::span<const int> prefix);

// True when the two graphs are identical as typed graphs over item indices
// (node sets and typed edges match, node numbering ignored).
bool msg_same_graph(const Msg& a, const Msg& b);

// Global item co-occurrence graph: symmetric weights over items 1..N counting
// adjacent pairs across all training sessions.
struct CollabGraph {
  int n_items = 0;
  // weights[i] holds {j -> count} for item i (1-based), both directions stored.
  std::vector<std::map<int, int64_t>> weights;

  int64_t weight(int i, int j) const;
  size_t pair_count() const;  // undirected pairs with nonzero weight
};

CollabGraph build_cfg(const std::vector<std::vector<int>>& train_sessions, int n_items);

// Row-normalized propagation matrix (A + I) with rows divided by their degree
// sum; every row sums to one.
std::shared_ptr<const SparseMatrix> propagation_matrix(const CollabGraph& g);

void write_cfg(const std::string& path, const CollabGraph& g);
CollabGraph load_cfg(const std::string& path);

}  // namespace restc
