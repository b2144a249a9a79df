#include <gtest/gtest.h>

#include <hcts/hc_engine.hpp>
#include <hcts/stats.hpp>
#include <hcts/synthgen.hpp>

using namespace hcts;

namespace {

PlantedDataset small_planted(int depth, std::uint64_t seed = 0) {
  PlantedSpec s = separable_preset(seed);
  s.depth = depth;
  s.level_offsets.resize(static_cast<std::size_t>(depth));
  s.length = 64;
  s.samples_per_class = 10;
  return generate_planted(s);
}

ClassifierSpec svm() { return {}; }

}  // namespace

TEST(Lcn, TwoClassTreeEqualsFlatModel) {
  const auto p = small_planted(1);
  for (auto kind : {ClassifierKind::LinearSVM, ClassifierKind::MiniRocketStyle, ClassifierKind::IntervalForest}) {
    ClassifierSpec spec;
    spec.kind = kind;
    spec.seed = 17;
    const auto hc = train_lcn(p.tree, spec, p.dataset);
    ASSERT_EQ(hc.node_models.size(), 1u);
    const auto flat = train_flat(spec, p.dataset);
    Matrix probe = p.dataset.values;
    probe.array() += 0.7;  // off-distribution probe exercises both branches of the decision
    EXPECT_EQ(predict_lcn(hc, probe), flat.predict(probe)) << to_string(kind);
  }
}

TEST(Lcn, NodeSampleCounts) {
  const auto p = small_planted(2);
  const auto hc = train_lcn(p.tree, svm(), p.dataset);
  ASSERT_EQ(hc.node_models.size(), 3u);
  for (const auto& [id, model] : hc.node_models) EXPECT_EQ(model.classes_seen, (std::vector<int>{0, 1})) << id;
}

TEST(Lcn, SeparableDataIsPerfect) {
  const auto p = small_planted(3, 4);
  const auto hc = train_lcn(p.tree, svm(), p.dataset);
  EXPECT_EQ(hc.node_models.size(), 7u);
  const auto pred = predict_lcn(hc, p.dataset.values);
  EXPECT_DOUBLE_EQ(f1_macro(p.dataset.labels, pred, 8), 1.0);
  const auto flat = train_flat(svm(), p.dataset);
  EXPECT_DOUBLE_EQ(f1_macro(p.dataset.labels, flat.predict(p.dataset.values), 8), 1.0);
}

TEST(Lcn, ConstantLeftModelsRouteToLeftmostLeaf) {
  const auto p = small_planted(2);
  auto hc = train_lcn(p.tree, svm(), p.dataset);
  for (auto& [id, m] : hc.node_models) m = ClassifierModel::constant(0, p.dataset.length());
  for (int y : predict_lcn(hc, p.dataset.values)) EXPECT_EQ(y, 0);
}

TEST(Lcn, MissingBranchBecomesConstant) {
  auto p = small_planted(2);
  // Train only on classes 0, 1 and 2: node {2,3} sees class 2 alone.
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < p.dataset.size(); ++i)
    if (p.dataset.labels[i] != 3) rows.push_back(i);
  const auto train = subset(p.dataset, rows);
  const auto hc = train_lcn(p.tree, svm(), train);
  int constants = 0;
  for (const auto& [id, m] : hc.node_models) constants += m.is_constant();
  EXPECT_EQ(constants, 1);
  for (int y : predict_lcn(hc, p.dataset.values)) EXPECT_NE(y, 3);
}

TEST(Lcn, WidthMismatchRejected) {
  const auto p = small_planted(2);
  const auto hc = train_lcn(p.tree, svm(), p.dataset);
  EXPECT_THROW(predict_lcn(hc, Matrix::Zero(1, 10)), DomainError);
}

TEST(Lcn, LabelOutsideTreeRejected) {
  const auto p = small_planted(2);
  int id = 0;
  const auto tree = balanced_tree(0, 3, id);
  EXPECT_THROW(train_lcn(tree, svm(), p.dataset), DomainError);
}

TEST(Lcn, ParallelTrainingMatchesSerial) {
  const auto p = small_planted(3, 2);
  ClassifierSpec spec;
  spec.kind = ClassifierKind::IntervalForest;
  spec.num_estimators = 5;
  const auto a = train_lcn(p.tree, spec, p.dataset, 1);
  const auto b = train_lcn(p.tree, spec, p.dataset, 4);
  EXPECT_EQ(hc_model_to_json(a).dump(), hc_model_to_json(b).dump());
}

TEST(Lcn, JsonRoundTrip) {
  const auto p = small_planted(2, 3);
  ClassifierSpec spec;
  spec.kind = ClassifierKind::MiniRocketStyle;
  const auto hc = train_lcn(p.tree, spec, p.dataset);
  const auto text = hc_model_to_json(hc).dump();
  const auto back = hc_model_from_json(nlohmann::ordered_json::parse(text));
  EXPECT_EQ(predict_lcn(back, p.dataset.values), predict_lcn(hc, p.dataset.values));
  EXPECT_EQ(hc_model_to_json(back).dump(), text);
  auto broken = nlohmann::ordered_json::parse(text);
  broken["node_models"].erase("0");
  EXPECT_THROW(hc_model_from_json(broken), FormatError);
}
