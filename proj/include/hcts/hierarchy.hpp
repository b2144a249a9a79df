#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <iterator>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dissim.hpp"
#include "error.hpp"

namespace hcts {

/// Node of a binary class hierarchy. Leaves hold exactly one class;
/// internal nodes have two children partitioning their members.
struct HierarchyNode {
  int id = 0;
  std::vector<int> members;  // ascending
  std::vector<HierarchyNode> children;
  std::optional<std::pair<int, int>> medoids;

  bool is_leaf() const { return children.empty(); }
};

struct KMedoidsResult {
  std::vector<int> assignment;  // parallel to items, values in {0, 1}
  std::pair<int, int> medoids;  // class indices; medoids.first is cluster 0
  double cost = 0.0;
};

/// Exact 2-medoids on the items' submatrix of D.
///
/// Every medoid pair (a, b) with a before b in `items` is scored by the total
/// distance of each item to its nearer medoid; ties between medoids go to
/// `a`, and each medoid always belongs to its own cluster. The cheapest pair
/// wins, earlier pairs winning cost ties. `seed` is unused in exact mode.
inline KMedoidsResult kmedoids2(const Matrix& D, std::span<const int> items, std::uint64_t seed = 0) {
  (void)seed;
  const std::size_t n = items.size();
  if (n < 2) throw DomainError("2-medoids needs at least 2 items");
  KMedoidsResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      double cost = 0.0;
      for (std::size_t x = 0; x < n; ++x) {
        if (x == a || x == b) continue;
        cost += std::min(D(items[x], items[a]), D(items[x], items[b]));
      }
      if (cost < best.cost) {
        best.cost = cost;
        best.medoids = {items[a], items[b]};
      }
    }
  best.assignment.resize(n);
  const auto [ma, mb] = best.medoids;
  for (std::size_t x = 0; x < n; ++x) {
    if (items[x] == ma) best.assignment[x] = 0;
    else if (items[x] == mb) best.assignment[x] = 1;
    else best.assignment[x] = D(items[x], mb) < D(items[x], ma) ? 1 : 0;
  }
  return best;
}

inline KMedoidsResult kmedoids2(const DissimilarityMatrix& d, std::span<const int> items, std::uint64_t seed = 0) {
  return kmedoids2(d.values, items, seed);
}

namespace detail {

inline HierarchyNode split_node(const Matrix& D, std::vector<int> members, int& next_id) {
  HierarchyNode node;
  node.id = next_id++;
  std::sort(members.begin(), members.end());
  node.members = std::move(members);
  if (node.members.size() < 2) return node;
  const auto km = kmedoids2(D, node.members);
  std::array<std::vector<int>, 2> parts;
  for (std::size_t x = 0; x < node.members.size(); ++x) parts[static_cast<std::size_t>(km.assignment[x])].push_back(node.members[x]);
  std::pair<int, int> medoids = km.medoids;
  // Child 0 is the cluster holding the smallest member.
  if (parts[1].front() < parts[0].front()) {
    std::swap(parts[0], parts[1]);
    std::swap(medoids.first, medoids.second);
  }
  node.medoids = medoids;
  node.children.push_back(split_node(D, std::move(parts[0]), next_id));
  node.children.push_back(split_node(D, std::move(parts[1]), next_id));
  return node;
}

}  // namespace detail

/// Divisive hierarchy: the root holds every class and each node is split
/// by kmedoids2 on its members until leaves are single classes. Node ids
/// follow pre-order.
inline HierarchyNode build_hierarchy(const DissimilarityMatrix& d) {
  if (d.size() < 2) throw DomainError("a hierarchy needs at least 2 classes");
  check_invariants(d);
  std::vector<int> all(static_cast<std::size_t>(d.size()));
  std::iota(all.begin(), all.end(), 0);
  int next_id = 0;
  return detail::split_node(d.values, std::move(all), next_id);
}

template <typename Fn>
void for_each_node(const HierarchyNode& n, Fn&& fn) {
  fn(n);
  for (const auto& c : n.children) for_each_node(c, fn);
}

inline int count_leaves(const HierarchyNode& n) {
  int k = 0;
  for_each_node(n, [&](const HierarchyNode& x) { k += x.is_leaf(); });
  return k;
}

inline int count_internal(const HierarchyNode& n) {
  int k = 0;
  for_each_node(n, [&](const HierarchyNode& x) { k += !x.is_leaf(); });
  return k;
}

inline int tree_depth(const HierarchyNode& n) {
  int d = 0;
  for (const auto& c : n.children) d = std::max(d, 1 + tree_depth(c));
  return d;
}

/// Full binary tree over classes [first, first + count), children splitting
/// at the midpoint; ids in pre-order.
inline HierarchyNode balanced_tree(int first, int count, int& next_id) {
  HierarchyNode n;
  n.id = next_id++;
  for (int k = 0; k < count; ++k) n.members.push_back(first + k);
  if (count > 1) {
    const int half = count / 2;
    n.children.push_back(balanced_tree(first, half, next_id));
    n.children.push_back(balanced_tree(first + half, count - half, next_id));
  }
  return n;
}

// ---------------------------------------------------------------------------
// Serialization.

inline nlohmann::ordered_json tree_to_json_value(const HierarchyNode& n) {
  nlohmann::ordered_json j;
  j["id"] = n.id;
  j["members"] = n.members;
  if (n.medoids) j["medoids"] = {n.medoids->first, n.medoids->second};
  if (!n.children.empty()) {
    j["children"] = nlohmann::ordered_json::array();
    for (const auto& c : n.children) j["children"].push_back(tree_to_json_value(c));
  }
  return j;
}

/// Canonical compact JSON text of the tree.
inline std::string tree_to_json(const HierarchyNode& n) { return tree_to_json_value(n).dump(); }

namespace detail {

inline HierarchyNode node_from_json(const nlohmann::ordered_json& j, const std::string& path, int& next_id) {
  auto fail = [&](const std::string& where, const std::string& what) -> void {
    throw FormatError((where.empty() ? "/" : where) + ": " + what);
  };
  if (!j.is_object()) fail(path, "expected an object");
  HierarchyNode n;
  if (j.contains("id")) {
    if (!j["id"].is_number_integer()) fail(path + "/id", "expected an integer");
    n.id = j["id"].get<int>();
    next_id = std::max(next_id, n.id + 1);
  } else {
    n.id = -1;
  }
  if (!j.contains("members") || !j["members"].is_array() || j["members"].empty())
    fail(path + "/members", "expected a non-empty array of class indices");
  for (std::size_t k = 0; k < j["members"].size(); ++k) {
    if (!j["members"][k].is_number_integer()) fail(path + "/members/" + std::to_string(k), "expected an integer");
    n.members.push_back(j["members"][k].get<int>());
  }
  std::sort(n.members.begin(), n.members.end());
  if (std::adjacent_find(n.members.begin(), n.members.end()) != n.members.end()) fail(path + "/members", "duplicate class index");
  if (j.contains("medoids")) {
    const auto& m = j["medoids"];
    if (!m.is_array() || m.size() != 2 || !m[0].is_number_integer() || !m[1].is_number_integer())
      fail(path + "/medoids", "expected a pair of integers");
    n.medoids = std::pair{m[0].get<int>(), m[1].get<int>()};
  }
  if (j.contains("children")) {
    const auto& ch = j["children"];
    if (!ch.is_array() || ch.size() != 2) fail(path + "/children", "expected exactly two children");
    for (std::size_t k = 0; k < 2; ++k) n.children.push_back(node_from_json(ch[k], path + "/children/" + std::to_string(k), next_id));
    std::vector<int> merged;
    std::merge(n.children[0].members.begin(), n.children[0].members.end(), n.children[1].members.begin(),
               n.children[1].members.end(), std::back_inserter(merged));
    if (merged != n.members) fail(path + "/children", "child members do not partition the parent's members");
  } else if (n.members.size() != 1) {
    fail(path + "/members", "a leaf must hold exactly one class");
  }
  return n;
}

inline void assign_missing_ids(HierarchyNode& n, int& next_id) {
  if (n.id < 0) n.id = next_id++;
  for (auto& c : n.children) assign_missing_ids(c, next_id);
}

}  // namespace detail

inline HierarchyNode tree_from_json_value(const nlohmann::ordered_json& j) {
  int next_id = 0;
  auto root = detail::node_from_json(j, "", next_id);
  detail::assign_missing_ids(root, next_id);
  std::set<int> ids;
  bool unique = true;
  for_each_node(root, [&](const HierarchyNode& n) { unique &= ids.insert(n.id).second; });
  if (!unique) throw FormatError("/: duplicate node id");
  return root;
}

inline HierarchyNode tree_from_json(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("/: invalid JSON: ") + e.what());
  }
  return tree_from_json_value(j);
}

/// Newick text with leaves named c<index>, e.g. "((c0,c1),(c2,c3));".
inline std::string tree_to_newick(const HierarchyNode& n) {
  auto rec = [](const auto& self, const HierarchyNode& x) -> std::string {
    if (x.is_leaf()) return "c" + std::to_string(x.members.front());
    return "(" + self(self, x.children[0]) + "," + self(self, x.children[1]) + ")";
  };
  return rec(rec, n) + ";";
}

// ---------------------------------------------------------------------------

namespace detail {

// Non-trivial bipartitions of the leaf set, each keyed by the side that
// does not contain the smallest leaf.
inline std::set<std::vector<int>> bipartitions(const HierarchyNode& root) {
  const auto& all = root.members;
  std::set<std::vector<int>> out;
  for_each_node(root, [&](const HierarchyNode& n) {
    const std::size_t k = n.members.size();
    if (k < 2 || all.size() - k < 2) return;
    if (std::binary_search(n.members.begin(), n.members.end(), all.front())) {
      std::vector<int> rest;
      std::set_difference(all.begin(), all.end(), n.members.begin(), n.members.end(), std::back_inserter(rest));
      out.insert(std::move(rest));
    } else {
      out.insert(n.members);
    }
  });
  return out;
}

}  // namespace detail

/// Number of non-trivial bipartitions found in exactly one of the trees.
inline int robinson_foulds(const HierarchyNode& a, const HierarchyNode& b) {
  if (a.members != b.members) throw DomainError("Robinson-Foulds distance needs identical leaf sets");
  const auto pa = detail::bipartitions(a), pb = detail::bipartitions(b);
  int d = 0;
  for (const auto& s : pa) d += !pb.contains(s);
  for (const auto& s : pb) d += !pa.contains(s);
  return d;
}

}  // namespace hcts
