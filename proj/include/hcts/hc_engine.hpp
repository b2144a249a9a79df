#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "classifier.hpp"
#include "dataset.hpp"
#include "hierarchy.hpp"
#include "parallel.hpp"

namespace hcts {

/// Local classifier per node: one binary model (child 0 vs child 1) at
/// every internal node of the hierarchy.
struct HcModel {
  HierarchyNode tree;
  std::map<int, ClassifierModel> node_models;
};

/// Seed of the classifier at `node_id`. The root uses the global seed so a
/// one-node hierarchy reproduces the flat model exactly.
inline std::uint64_t node_seed(std::uint64_t seed, int node_id) {
  return node_id == 0 ? seed : derive_seed(seed, {0x6e6f6465ULL, static_cast<std::uint64_t>(node_id)});
}

inline ClassifierModel train_flat(const ClassifierSpec& spec, const TimeSeriesDataset& train) {
  return fit(spec, train.values, train.labels);
}

inline HcModel train_lcn(const HierarchyNode& tree, const ClassifierSpec& spec, const TimeSeriesDataset& train,
                         std::size_t jobs = 1) {
  std::vector<const HierarchyNode*> internal;
  for_each_node(tree, [&](const HierarchyNode& n) {
    if (!n.is_leaf()) internal.push_back(&n);
  });
  for (int y : train.labels)
    if (!std::binary_search(tree.members.begin(), tree.members.end(), y))
      throw DomainError("training label " + std::to_string(y) + " is not a leaf of the hierarchy");

  std::vector<ClassifierModel> models(internal.size());
  parallel_for(internal.size(), jobs, [&](std::size_t k) {
    const HierarchyNode& n = *internal[k];
    const auto& left = n.children[0].members;
    std::vector<std::size_t> rows;
    std::vector<int> branch;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const int y = train.labels[i];
      if (!std::binary_search(n.members.begin(), n.members.end(), y)) continue;
      rows.push_back(i);
      branch.push_back(std::binary_search(left.begin(), left.end(), y) ? 0 : 1);
    }
    const bool has0 = std::find(branch.begin(), branch.end(), 0) != branch.end();
    const bool has1 = std::find(branch.begin(), branch.end(), 1) != branch.end();
    const auto node_spec = spec.with_seed(node_seed(spec.seed, n.id));
    if (has0 && has1) {
      models[k] = fit(node_spec, subset(train, rows).values, branch);
    } else {
      // One branch has no training samples: always route to the other.
      models[k] = ClassifierModel::constant(has1 ? 1 : 0, train.length(), node_spec);
    }
  });
  HcModel out{tree, {}};
  for (std::size_t k = 0; k < internal.size(); ++k) out.node_models.emplace(internal[k]->id, std::move(models[k]));
  return out;
}

/// Hard top-down routing: every sample descends from the root along the
/// branch its node model predicts until it reaches a leaf.
inline std::vector<int> predict_lcn(const HcModel& model, const Matrix& X) {
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<int> out(n, -1);
  // Batch the samples sitting at each node so every model predicts once.
  std::vector<std::pair<const HierarchyNode*, std::vector<std::size_t>>> frontier{{&model.tree, {}}};
  for (std::size_t i = 0; i < n; ++i) frontier[0].second.push_back(i);
  while (!frontier.empty()) {
    auto [node, rows] = std::move(frontier.back());
    frontier.pop_back();
    if (rows.empty()) continue;
    if (node->is_leaf()) {
      for (auto i : rows) out[i] = node->members.front();
      continue;
    }
    const auto it = model.node_models.find(node->id);
    if (it == model.node_models.end()) throw DomainError("no model for internal node " + std::to_string(node->id));
    Matrix sub(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(rows[r]));
    const auto branch = it->second.predict(sub);
    std::array<std::vector<std::size_t>, 2> next;
    for (std::size_t r = 0; r < rows.size(); ++r) next[static_cast<std::size_t>(branch[r] == 1)].push_back(rows[r]);
    frontier.emplace_back(&node->children[1], std::move(next[1]));
    frontier.emplace_back(&node->children[0], std::move(next[0]));
  }
  return out;
}

inline nlohmann::ordered_json hc_model_to_json(const HcModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "hcts-lcn";
  j["version"] = 1;
  j["tree"] = tree_to_json_value(m.tree);
  nlohmann::ordered_json nodes = nlohmann::ordered_json::object();
  for (const auto& [id, model] : m.node_models) nodes[std::to_string(id)] = model_to_json(model);
  j["node_models"] = std::move(nodes);
  return j;
}

inline HcModel hc_model_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || j.value("format", "") != "hcts-lcn") throw FormatError("/format: not a hierarchical model document");
  HcModel m;
  m.tree = tree_from_json_value(j.at("tree"));
  for (const auto& [key, value] : j.at("node_models").items()) m.node_models.emplace(std::stoi(key), model_from_json(value));
  for_each_node(m.tree, [&](const HierarchyNode& n) {
    if (!n.is_leaf() && !m.node_models.contains(n.id))
      throw FormatError("/node_models: missing model for node " + std::to_string(n.id));
  });
  return m;
}

}  // namespace hcts
