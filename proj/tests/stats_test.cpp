#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <hcts/stats.hpp>

using namespace hcts;

namespace {

// Two-sided exact p by listing every sign pattern of the ranks.
double wilcoxon_enumeration(const std::vector<double>& ranks, double w_plus) {
  const std::size_t n = ranks.size();
  double total = 0;
  for (double r : ranks) total += r;
  const double mean = total / 2;
  const double dev = std::abs(w_plus - mean);
  std::uint64_t extreme = 0;
  for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i)
      if ((mask >> i) & 1u) w += ranks[i];
    extreme += std::abs(w - mean) >= dev - 1e-9;
  }
  return std::min(1.0, static_cast<double>(extreme) / std::ldexp(1.0, static_cast<int>(n)));
}

std::vector<FoldResult> block(const std::vector<std::vector<double>>& scores) {
  std::vector<FoldResult> out;
  for (std::size_t d = 0; d < scores.size(); ++d)
    for (std::size_t m = 0; m < scores[d].size(); ++m)
      out.push_back({"d" + std::to_string(d), std::string(1, static_cast<char>('A' + m)), 0, scores[d][m], 0, 0, ""});
  return out;
}

}  // namespace

TEST(F1Macro, Oracles) {
  const std::vector<int> t{0, 0, 1, 1, 2, 2};
  EXPECT_DOUBLE_EQ(f1_macro(t, t, 3), 1.0);
  const std::vector<int> zeros(6, 0);
  EXPECT_NEAR(f1_macro(t, zeros, 3), 1.0 / 6.0, 1e-15);
  const std::vector<int> bad{0, 0, 1, 1, 2, 3};
  EXPECT_THROW(f1_macro(t, bad, 3), DomainError);
}

TEST(F1Macro, MatchesPerClassDefinition) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 2 + static_cast<int>(rng() % 5);
    std::vector<int> t(30), p(30);
    for (auto& v : t) v = static_cast<int>(rng() % static_cast<unsigned>(c));
    for (auto& v : p) v = static_cast<int>(rng() % static_cast<unsigned>(c));
    double sum = 0;
    for (int k = 0; k < c; ++k) {
      double tp = 0, pp = 0, ap = 0;
      for (std::size_t i = 0; i < t.size(); ++i) tp += t[i] == k && p[i] == k, pp += p[i] == k, ap += t[i] == k;
      const double prec = pp ? tp / pp : 0, rec = ap ? tp / ap : 0;
      sum += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0;
    }
    EXPECT_NEAR(f1_macro(t, p, c), sum / c, 1e-12);
  }
}

TEST(Ranks, TiesAveraged) {
  EXPECT_EQ(rank_descending(std::vector<double>{0.9, 0.8, 0.7}), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(rank_descending(std::vector<double>{0.9, 0.9, 0.7}), (std::vector<double>{1.5, 1.5, 3}));
  EXPECT_EQ(rank_descending(std::vector<double>{0.1, 0.5, 0.5, 0.5}), (std::vector<double>{4, 2, 2, 2}));
}

TEST(Ranks, AverageOverFoldsThenDatasets) {
  std::vector<FoldResult> r{{"x", "A", 0, 0.9, 0, 0, ""}, {"x", "A", 1, 0.5, 0, 0, ""}, {"x", "B", 0, 0.6, 0, 0, ""},
                            {"x", "B", 1, 0.6, 0, 0, ""}, {"y", "A", 0, 1.0, 0, 0, ""}, {"y", "B", 0, 0.0, 0, 0, ""}};
  const auto t = average_ranks(r);
  EXPECT_EQ(t.methods, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(t.average(), (std::vector<double>{1.0, 2.0}));
}

TEST(Ranks, IncompleteBlockListsMissingCells) {
  std::vector<FoldResult> r{{"x", "A", 0, 0.9, 0, 0, ""}, {"x", "B", 0, 0.6, 0, 0, ""}, {"y", "A", 0, 1.0, 0, 0, ""}};
  try {
    average_ranks(r);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("y/B"), std::string::npos);
  }
  r.push_back({"y", "B", 0, std::nan(""), 0, 0, "boom"});
  EXPECT_THROW(average_ranks(r), DomainError);
}

TEST(Friedman, OneMethodAlwaysWins) {
  std::vector<std::vector<double>> s(10, {0.9, 0.1});
  const auto f = friedman_test(average_ranks(block(s)));
  EXPECT_NEAR(f.statistic, 10.0, 1e-12);
  EXPECT_NEAR(f.p_value, std::erfc(std::sqrt(5.0)), 1e-12 * std::erfc(std::sqrt(5.0)));
  EXPECT_NEAR(f.p_value, 0.001565, 1e-6);
}

TEST(Friedman, AllTied) {
  std::vector<std::vector<double>> s(6, {0.5, 0.5, 0.5});
  const auto f = friedman_test(average_ranks(block(s)));
  EXPECT_EQ(f.statistic, 0.0);
  EXPECT_EQ(f.p_value, 1.0);
}

TEST(Friedman, MatchesTextbookFormula) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 2 + rng() % 5, n = 3 + rng() % 10;
    std::vector<std::vector<double>> s(n, std::vector<double>(k));
    for (auto& row : s)
      for (auto& v : row) v = u(rng);
    const auto t = average_ranks(block(s));
    const auto R = t.average();
    double ss = 0;
    for (double r : R) ss += r * r;
    const double kk = static_cast<double>(k), nn = static_cast<double>(n);
    const double chi2 = 12 * nn / (kk * (kk + 1)) * (ss - kk * (kk + 1) * (kk + 1) / 4);
    EXPECT_NEAR(friedman_test(t).statistic, chi2, 1e-9 * (1 + chi2));
  }
}

TEST(ChiSquare, KnownTails) {
  EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-12);
  EXPECT_NEAR(chi_square_sf(2.0, 2), std::exp(-1.0), 1e-15);
  EXPECT_EQ(chi_square_sf(0.0, 3), 1.0);
}

TEST(Wilcoxon, FivePositiveDifferences) {
  const std::vector<double> a{1.1, 2.2, 3.3, 4.4, 5.5}, b{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(a, b), 0.0625);
  EXPECT_EQ(wilcoxon_signed_rank(a, a), 1.0);
  EXPECT_THROW(wilcoxon_signed_rank(a, std::vector<double>{1, 2}), DomainError);
}

TEST(Wilcoxon, ExactMatchesEnumerationWithTies) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<double> a(n), b(n, 0.0);
    for (auto& v : a) v = static_cast<double>(static_cast<int>(rng() % 9) - 4);  // ties and zeros
    const double p = wilcoxon_signed_rank(a, b);
    std::vector<double> mag, ranks;
    for (double v : a)
      if (v != 0) mag.push_back(-std::abs(v));
    if (mag.empty()) {
      EXPECT_EQ(p, 1.0);
      continue;
    }
    ranks = rank_descending(mag);
    double w = 0;
    std::size_t k = 0;
    for (double v : a)
      if (v != 0) w += v > 0 ? ranks[k++] : (k++, 0.0);
    EXPECT_DOUBLE_EQ(p, wilcoxon_enumeration(ranks, w)) << trial;
  }
}

TEST(Wilcoxon, NormalApproximationCloseToExact) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0.3, 1.0);
  std::vector<double> a(25), b(25, 0.0);
  for (auto& v : a) v = nd(rng);
  const double exact = wilcoxon_signed_rank(a, b);
  const double approx = wilcoxon_signed_rank(a, b, {ZeroMethod::Discard, 0});
  EXPECT_NEAR(approx, exact, 0.01);
}

TEST(Wilcoxon, PrattKeepsZerosInRanking) {
  const std::vector<double> a{0, 1, 2, 3, 4, 5}, b(6, 0.0);
  const double discard = wilcoxon_signed_rank(a, b);
  const double pratt = wilcoxon_signed_rank(a, b, {ZeroMethod::Pratt});
  EXPECT_DOUBLE_EQ(discard, 0.0625);
  // Ranks 2..6 positive out of 1..6, non-zero n = 5: only the all-positive pattern and its mirror are as extreme.
  EXPECT_DOUBLE_EQ(pratt, 0.0625);
}

TEST(Holm, Oracles) {
  const auto adj = holm_adjust(std::vector<double>{0.01, 0.04, 0.03});
  EXPECT_NEAR(adj[0], 0.03, 1e-15);
  EXPECT_NEAR(adj[1], 0.06, 1e-15);
  EXPECT_NEAR(adj[2], 0.06, 1e-15);
  EXPECT_EQ(holm_adjust(std::vector<double>{0.7}), (std::vector<double>{0.7}));
  EXPECT_THROW(holm_adjust(std::vector<double>{1.5}), DomainError);
}

TEST(Holm, MonotoneAndDominatesRaw) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(1 + rng() % 10);
    for (auto& v : p) v = u(rng) * u(rng);
    const auto adj = holm_adjust(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_GE(adj[i], p[i]);
      EXPECT_LE(adj[i], 1.0);
      for (std::size_t j = 0; j < p.size(); ++j)
        if (p[i] < p[j]) {
          EXPECT_LE(adj[i], adj[j]);
        }
    }
  }
}

TEST(Cliques, Rules) {
  const std::vector<std::string> m{"A", "B", "C"};
  const std::vector<double> r{1.0, 2.0, 3.0};
  EXPECT_TRUE(cd_cliques({"A", "B"}, {1, 2}, {{"A", "B", 0.01, 0.01, true}}).empty());
  EXPECT_EQ(cd_cliques({"A", "B"}, {1, 2}, {{"A", "B", 0.5, 0.5, false}}),
            (std::vector<std::vector<std::string>>{{"A", "B"}}));
  const std::vector<PairwiseComparison> only_extreme{{"A", "B", .5, .5, false}, {"A", "C", .01, .01, true}, {"B", "C", .5, .5, false}};
  EXPECT_EQ(cd_cliques(m, r, only_extreme), (std::vector<std::vector<std::string>>{{"A", "B"}, {"B", "C"}}));
  const std::vector<PairwiseComparison> none{{"A", "B", .5, .5, false}, {"A", "C", .5, .5, false}, {"B", "C", .5, .5, false}};
  EXPECT_EQ(cd_cliques(m, r, none), (std::vector<std::vector<std::string>>{{"A", "B", "C"}}));
}

TEST(Analyze, ReportAndSvg) {
  std::vector<std::vector<double>> s;
  for (int d = 0; d < 8; ++d) s.push_back({0.9 - 0.01 * d, 0.5 + 0.01 * d, 0.2});
  const auto rep = analyze(average_ranks(block(s)), 0.05);
  EXPECT_EQ(rep.pairwise.size(), 3u);
  EXPECT_EQ(rep.avg_ranks, (std::vector<double>{1, 2, 3}));
  for (const auto& p : rep.pairwise) EXPECT_TRUE(p.significant) << p.method_a << p.method_b;
  EXPECT_TRUE(rep.cliques.empty());
  const auto j = to_json(rep);
  EXPECT_EQ(j["pairwise"].size(), 3u);
  const auto svg = cd_diagram_svg(rep);
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("A (1.00)"), std::string::npos);
}

TEST(Analyze, TwoMethodsOnePairwiseP) {
  const auto rep = analyze(average_ranks(block({{0.5, 0.4}, {0.6, 0.7}, {0.2, 0.1}})));
  ASSERT_EQ(rep.pairwise.size(), 1u);
  EXPECT_EQ(rep.cliques.size(), 1u);
  EXPECT_NO_THROW(cd_diagram_svg(rep));
}

TEST(Svg, EscapesMethodNames) {
  StatReport r;
  r.methods = {"a<b", "c&d"};
  r.avg_ranks = {1.5, 1.5};
  const auto svg = cd_diagram_svg(r);
  EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
  EXPECT_NE(svg.find("c&amp;d"), std::string::npos);
}
