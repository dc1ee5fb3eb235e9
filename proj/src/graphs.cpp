#include "restc/graphs.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "restc/common.hpp"

namespace restc {

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::In: return "in";
    case Relation::Out: return "out";
    case Relation::Bi: return "bi";
    case Relation::SelfLoop: return "self";
  }
  return "?";
}

bool Msg::has_edge(int src, int dst, Relation r) const {
  const auto& lst = adj[src][static_cast<int>(r)];
  return std::find(lst.begin(), lst.end(), dst) != lst.end();
}

size_t Msg::edge_count() const {
  size_t n = 0;
  for (const auto& per_node : adj)
    for (const auto& lst : per_node) n += lst.size();
  return n;
}

std::vector<int> Msg::first_occurrence() const {
  std::vector<int> first(nodes.size(), -1);
  for (int pos = 0; pos < static_cast<int>(node_of_position.size()); ++pos) {
    const int node = node_of_position[pos];
    if (first[node] < 0) first[node] = pos;
  }
  return first;
}

Msg build_msg(std::span<const int> prefix) {
  if (prefix.empty()) throw DataError("build_msg: empty session prefix");
  Msg msg;
  std::map<int, int> slot_of_item;
  for (int item : prefix) {
    if (item <= 0) throw DataError("build_msg: non-item index " + std::to_string(item));
    auto it = slot_of_item.find(item);
    if (it == slot_of_item.end()) {
      it = slot_of_item.emplace(item, msg.num_nodes()).first;
      msg.nodes.push_back(item);
    }
    msg.node_of_position.push_back(it->second);
  }
  msg.adj.resize(msg.nodes.size());

  // Ordered transition pairs between distinct items, plus self transitions.
  std::set<std::pair<int, int>> pairs;
  std::set<int> selfs;
  for (size_t k = 0; k + 1 < prefix.size(); ++k) {
    const int a = msg.node_of_position[k], b = msg.node_of_position[k + 1];
    if (a == b)
      selfs.insert(a);
    else
      pairs.emplace(a, b);
  }
  // A pair seen in one direction yields Out forward and In backward; both
  // directions collapse into a Bi edge each way. Relations never overlap on
  // the same ordered pair.
  for (const auto& [a, b] : pairs) {
    if (pairs.count({b, a})) {
      if (a < b) {  // handle each unordered pair once
        msg.adj[a][static_cast<int>(Relation::Bi)].push_back(b);
        msg.adj[b][static_cast<int>(Relation::Bi)].push_back(a);
      }
    } else {
      msg.adj[a][static_cast<int>(Relation::Out)].push_back(b);
      msg.adj[b][static_cast<int>(Relation::In)].push_back(a);
    }
  }
  for (int a : selfs) msg.adj[a][static_cast<int>(Relation::SelfLoop)].push_back(a);
  // Nodes with no incident edge (single-item sessions) still need a neighbor.
  for (int u = 0; u < msg.num_nodes(); ++u) {
    bool incident = false;
    for (const auto& lst : msg.adj[u]) incident = incident || !lst.empty();
    if (!incident) msg.adj[u][static_cast<int>(Relation::SelfLoop)].push_back(u);
  }
  // Neighbor order by item index so aggregation order does not depend on node
  // numbering.
  for (auto& per_node : msg.adj)
    for (auto& lst : per_node)
      std::sort(lst.begin(), lst.end(),
                [&msg](int x, int y) { return msg.nodes[x] < msg.nodes[y]; });
  return msg;
}

bool msg_same_graph(const Msg& a, const Msg& b) {
  std::set<int> items_a(a.nodes.begin(), a.nodes.end());
  std::set<int> items_b(b.nodes.begin(), b.nodes.end());
  if (items_a != items_b) return false;
  auto edge_set = [](const Msg& m) {
    std::set<std::tuple<int, int, int>> edges;  // (src item, dst item, relation)
    for (int u = 0; u < m.num_nodes(); ++u)
      for (int r = 0; r < kNumRelations; ++r)
        for (int v : m.adj[u][r]) edges.emplace(m.nodes[u], m.nodes[v], r);
    return edges;
  };
  return edge_set(a) == edge_set(b);
}

int64_t CollabGraph::weight(int i, int j) const {
  if (i < 1 || i > n_items || j < 1 || j > n_items) return 0;
  const auto& row = weights[i];
  auto it = row.find(j);
  return it == row.end() ? 0 : it->second;
}

size_t CollabGraph::pair_count() const {
  size_t n = 0;
  for (int i = 1; i <= n_items; ++i)
    for (const auto& [j, w] : weights[i])
      if (j > i && w > 0) ++n;
  return n;
}

CollabGraph build_cfg(const std::vector<std::vector<int>>& train_sessions, int n_items) {
  CollabGraph g;
  g.n_items = n_items;
  g.weights.resize(n_items + 1);
  for (const auto& s : train_sessions)
    for (size_t k = 0; k + 1 < s.size(); ++k) {
      const int a = s[k], b = s[k + 1];
      if (a == b) continue;  // self pairs carry no co-occurrence weight
      if (a < 1 || a > n_items || b < 1 || b > n_items)
        throw DataError("build_cfg: item index out of range");
      ++g.weights[a][b];
      ++g.weights[b][a];
    }
  return g;
}

std::shared_ptr<const SparseMatrix> propagation_matrix(const CollabGraph& g) {
  auto p = std::make_shared<SparseMatrix>();
  const int n = g.n_items;
  p->n = n;
  p->row_ptr.assign(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    // Row for item i: neighbor weights plus the identity entry, divided by
    // the row sum so every row is a probability distribution.
    std::vector<std::pair<int, Scalar>> entries;
    Scalar deg = 1.0;
    entries.emplace_back(i - 1, 1.0);
    for (const auto& [j, w] : g.weights[i]) {
      if (j == i) throw DataError("propagation_matrix: self weight in graph");
      entries.emplace_back(j - 1, static_cast<Scalar>(w));
      deg += static_cast<Scalar>(w);
    }
    std::sort(entries.begin(), entries.end());
    for (const auto& [col, v] : entries) {
      p->col.push_back(col);
      p->val.push_back(v / deg);
    }
    p->row_ptr[i] = static_cast<int>(p->col.size());
  }
  return p;
}

void write_cfg(const std::string& path, const CollabGraph& g) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << g.n_items << "\n";
  for (int i = 1; i <= g.n_items; ++i)
    for (const auto& [j, w] : g.weights[i])
      if (j > i) out << i << "\t" << j << "\t" << w << "\n";
}

CollabGraph load_cfg(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing item-count header");
  CollabGraph g;
  try {
    g.n_items = std::stoi(line);
  } catch (const std::exception&) {
    throw DataError(path + ": bad item-count header '" + line + "'");
  }
  if (g.n_items < 0) throw DataError(path + ": negative item count");
  g.weights.resize(g.n_items + 1);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    int i, j;
    int64_t w;
    if (!(ls >> i >> j >> w) || i < 1 || j < 1 || i > g.n_items || j > g.n_items || w <= 0)
      throw DataError(path + ":" + std::to_string(lineno) + ": bad co-occurrence triple");
    g.weights[i][j] = w;
    g.weights[j][i] = w;
  }
  return g;
}

}  // namespace restc
