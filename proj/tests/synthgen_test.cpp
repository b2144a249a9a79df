#include <gtest/gtest.h>

#include <hcts/synthgen.hpp>

using namespace hcts;

namespace {

double template_distance(const PlantedSpec& s, int a, int b) {
  const auto ta = planted_template(s, a), tb = planted_template(s, b);
  double d = 0;
  for (std::size_t t = 0; t < ta.size(); ++t) d += (ta[t] - tb[t]) * (ta[t] - tb[t]);
  return std::sqrt(d);
}

}  // namespace

TEST(Planted, DepthOneTwoClasses) {
  PlantedSpec s = separable_preset(1);
  s.depth = 1;
  s.level_offsets = {2.0};
  const auto p = generate_planted(s);
  EXPECT_EQ(p.dataset.num_classes, 2);
  const auto t0 = planted_template(s, 0), t1 = planted_template(s, 1);
  for (std::size_t t = 0; t < t0.size(); ++t) EXPECT_DOUBLE_EQ(t0[t], -t1[t]);
  EXPECT_DOUBLE_EQ(*std::max_element(t1.begin(), t1.end()), 2.0);
}

TEST(Planted, PresetShape) {
  const auto p = generate_planted(separable_preset(0));
  EXPECT_EQ(p.dataset.num_classes, 8);
  EXPECT_EQ(p.dataset.size(), 240u);
  EXPECT_EQ(p.dataset.length(), 128u);
  EXPECT_EQ(count_internal(p.tree), 7);
  EXPECT_EQ(count_leaves(p.tree), 8);
  EXPECT_EQ(tree_to_newick(p.tree), "(((c0,c1),(c2,c3)),((c4,c5),(c6,c7)));");
  EXPECT_NO_THROW(validate(p.dataset));
}

TEST(Planted, Deterministic) {
  const auto a = generate_planted(separable_preset(5)), b = generate_planted(separable_preset(5));
  EXPECT_EQ(a.dataset.values, b.dataset.values);
  EXPECT_NE(a.dataset.values, generate_planted(separable_preset(6)).dataset.values);
}

TEST(Planted, SamplesIndependentOfCount) {
  // Each (class, sample) draws from its own stream, so adding samples leaves earlier ones intact.
  PlantedSpec small = separable_preset(2), big = small;
  small.samples_per_class = 5;
  big.samples_per_class = 9;
  const auto a = generate_planted(small).dataset, b = generate_planted(big).dataset;
  for (int k = 0; k < 8; ++k)
    for (int i = 0; i < 5; ++i) EXPECT_EQ(a.values.row(k * 5 + i), b.values.row(k * 9 + i));
}

TEST(Planted, TopSplitDominatesTemplateDistances) {
  const auto s = separable_preset(0);
  double cross_min = 1e300, within_max = 0;
  for (int a = 0; a < 8; ++a)
    for (int b = a + 1; b < 8; ++b) {
      const double d = template_distance(s, a, b);
      if ((a < 4) != (b < 4)) cross_min = std::min(cross_min, d);
      else within_max = std::max(within_max, d);
    }
  EXPECT_GT(cross_min, within_max);
}

TEST(Planted, DistanceGrowsWithSplitLevel) {
  const auto s = separable_preset(0);
  EXPECT_LT(template_distance(s, 0, 1), template_distance(s, 0, 2));
  EXPECT_LT(template_distance(s, 0, 2), template_distance(s, 0, 4));
}

TEST(Planted, SlicesAreDisjointAndCover) {
  const auto s = separable_preset(0);
  int prev_end = 0;
  for (int l = 0; l < s.depth; ++l) {
    const auto [b, e] = planted_slice(s, l);
    EXPECT_EQ(b, prev_end);
    EXPECT_GT(e, b);
    prev_end = e;
  }
  EXPECT_EQ(prev_end, s.length);
}

TEST(Planted, InvalidSpecsRejected) {
  auto s = separable_preset(0);
  s.level_offsets = {3.0, 3.0, 1.0};
  EXPECT_THROW(generate_planted(s), DomainError);
  s = separable_preset(0);
  s.noise_sigma = 0;
  EXPECT_THROW(generate_planted(s), DomainError);
  s = separable_preset(0);
  s.level_offsets.pop_back();
  EXPECT_THROW(generate_planted(s), DomainError);
}
