#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "../dataset.hpp"
#include "../error.hpp"
#include "../random.hpp"

namespace hcts {

/// Between-class over within-class variance of `values`, both weighted by
/// class frequency. The denominator carries a 1e-12 guard.
inline double fisher_score(std::span<const double> values, std::span<const int> labels) {
  if (values.size() != labels.size()) throw DomainError("fisher_score: values and labels differ in length");
  if (values.empty()) return 0.0;
  const int max_label = *std::max_element(labels.begin(), labels.end());
  std::vector<double> sum(static_cast<std::size_t>(max_label) + 1, 0.0);
  std::vector<double> count(sum.size(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum[static_cast<std::size_t>(labels[i])] += values[i];
    count[static_cast<std::size_t>(labels[i])] += 1.0;
  }
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(sum.begin(), sum.end(), 0.0) / n;
  double between = 0.0;
  for (std::size_t c = 0; c < sum.size(); ++c)
    if (count[c] > 0) between += count[c] / n * std::pow(sum[c] / count[c] - mean, 2);
  double within = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    within += std::pow(values[i] - sum[c] / count[c], 2);
  }
  within /= n;
  return between / (within + 1e-12);
}

enum class Representation : int { Raw = 0, Difference = 1, Periodogram = 2 };
enum class IntervalStat : int { Mean = 0, StdDev = 1, Slope = 2 };

/// Half-open index range [start, end) into one representation of a series.
struct Interval {
  Representation rep = Representation::Raw;
  int start = 0;
  int end = 0;
};

struct IntervalFeature {
  Interval interval;
  IntervalStat stat = IntervalStat::Mean;
};

/// Raw series, first difference and periodogram magnitudes of every row.
struct SeriesRepresentations {
  std::array<Matrix, 3> reps;

  const Matrix& operator[](Representation r) const { return reps[static_cast<std::size_t>(r)]; }

  static SeriesRepresentations compute(const Matrix& X) {
    SeriesRepresentations out;
    const Eigen::Index n = X.rows(), L = X.cols();
    out.reps[0] = X;
    out.reps[1] = L > 1 ? Matrix(X.rightCols(L - 1) - X.leftCols(L - 1)) : Matrix(n, 0);
    const Eigen::Index half = L / 2;
    out.reps[2].resize(n, half);
    if (half > 0) {
      Eigen::FFT<double> fft;
      std::vector<double> row(static_cast<std::size_t>(L));
      std::vector<std::complex<double>> spec;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index t = 0; t < L; ++t) row[static_cast<std::size_t>(t)] = X(i, t);
        fft.fwd(spec, row);
        for (Eigen::Index f = 0; f < half; ++f) out.reps[2](i, f) = std::abs(spec[static_cast<std::size_t>(f)]);
      }
    }
    return out;
  }
};

inline double interval_stat(const double* v, int len, IntervalStat stat) {
  const double n = len;
  double mean = 0.0;
  for (int t = 0; t < len; ++t) mean += v[t];
  mean /= n;
  switch (stat) {
    case IntervalStat::Mean:
      return mean;
    case IntervalStat::StdDev: {
      double ss = 0.0;
      for (int t = 0; t < len; ++t) ss += (v[t] - mean) * (v[t] - mean);
      return std::sqrt(ss / n);
    }
    case IntervalStat::Slope: {
      const double tmean = (n - 1.0) / 2.0;
      double num = 0.0, den = 0.0;
      for (int t = 0; t < len; ++t) {
        num += (t - tmean) * (v[t] - mean);
        den += (t - tmean) * (t - tmean);
      }
      return den > 0.0 ? num / den : 0.0;
    }
  }
  return 0.0;
}

inline double feature_value(const SeriesRepresentations& r, Eigen::Index row, const IntervalFeature& f) {
  const Matrix& m = r[f.interval.rep];
  return interval_stat(&m(row, f.interval.start), f.interval.end - f.interval.start, f.stat);
}

/// Flat array node of a Gini decision tree. Leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int leaf_class = 0;  // class index, meaningful at leaves
};

/// A decision tree over supervised interval features.
struct IntervalTree {
  std::vector<IntervalFeature> features;
  std::vector<TreeNode> nodes;

  int predict(const SeriesRepresentations& r, Eigen::Index row) const {
    std::vector<double> cache(features.size(), std::numeric_limits<double>::quiet_NaN());
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
      const auto& nd = nodes[static_cast<std::size_t>(node)];
      auto& v = cache[static_cast<std::size_t>(nd.feature)];
      if (std::isnan(v)) v = feature_value(r, row, features[static_cast<std::size_t>(nd.feature)]);
      node = v <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(node)].leaf_class;
  }
};

struct IntervalForest {
  std::size_t length = 0;
  int num_classes = 0;
  std::vector<IntervalTree> trees;
};

namespace detail {

// Supervised interval search on one representation of length m: a seeded
// cut splits [0, m) in two; from each part, repeatedly split at a seeded cut
// and descend into the half whose interval mean separates the classes
// better, keeping every visited interval.
inline void search_intervals(const Matrix& rep, Representation kind, std::span<const Eigen::Index> rows,
                             std::span<const int> y, Rng& rng, std::vector<Interval>& out) {
  const int m = static_cast<int>(rep.cols());
  if (m < 2) return;
  std::vector<double> means(rows.size());
  auto score = [&](int s, int e) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      means[i] = interval_stat(&rep(rows[i], s), e - s, IntervalStat::Mean);
    return fisher_score(means, y);
  };
  auto descend = [&](int s, int e) {
    out.push_back({kind, s, e});
    while (e - s >= 4) {
      const int cut = s + 2 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(e - s - 3)));
      if (score(s, cut) >= score(cut, e)) e = cut;
      else s = cut;
      out.push_back({kind, s, e});
    }
  };
  if (m < 4) {
    out.push_back({kind, 0, m});
    return;
  }
  const int cut = 2 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(m - 3)));
  descend(0, cut);
  descend(cut, m);
}

inline double gini(std::span<const int> counts, int total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (int c : counts) g -= std::pow(static_cast<double>(c) / total, 2);
  return g;
}

inline int majority(std::span<const int> counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

// Grows a depth-unlimited Gini tree on feature matrix F (rows = samples).
inline void grow_tree(const Matrix& F, std::span<const int> y, int num_classes, std::vector<TreeNode>& nodes) {
  struct Pending {
    int node;
    std::vector<Eigen::Index> rows;
  };
  std::vector<Pending> stack;
  std::vector<Eigen::Index> all(static_cast<std::size_t>(F.rows()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  nodes.push_back({});
  stack.push_back({0, std::move(all)});
  std::vector<int> total(static_cast<std::size_t>(num_classes)), left(total.size());
  std::vector<Eigen::Index> order;
  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    std::fill(total.begin(), total.end(), 0);
    for (auto r : p.rows) ++total[static_cast<std::size_t>(y[static_cast<std::size_t>(r)])];
    const int n = static_cast<int>(p.rows.size());
    nodes[static_cast<std::size_t>(p.node)].leaf_class = majority(total);
    const double parent = gini(total, n);
    if (parent <= 0.0 || n < 2) continue;

    int best_feature = -1;
    double best_threshold = 0.0, best_impurity = parent - 1e-12;
    order = p.rows;
    for (Eigen::Index f = 0; f < F.cols(); ++f) {
      std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return F(a, f) < F(b, f) || (F(a, f) == F(b, f) && a < b);
      });
      std::fill(left.begin(), left.end(), 0);
      for (int i = 0; i + 1 < n; ++i) {
        ++left[static_cast<std::size_t>(y[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])])];
        const double lo = F(order[static_cast<std::size_t>(i)], f), hi = F(order[static_cast<std::size_t>(i) + 1], f);
        if (!(lo < hi)) continue;
        double gl = 1.0, gr = 1.0;
        const int nl = i + 1, nr = n - nl;
        for (std::size_t c = 0; c < total.size(); ++c) {
          gl -= std::pow(static_cast<double>(left[c]) / nl, 2);
          gr -= std::pow(static_cast<double>(total[c] - left[c]) / nr, 2);
        }
        const double impurity = (nl * gl + nr * gr) / n;
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = lo + (hi - lo) / 2.0;
          if (!(best_threshold < hi)) best_threshold = lo;
        }
      }
    }
    if (best_feature < 0) continue;
    std::vector<Eigen::Index> lrows, rrows;
    for (auto r : p.rows) (F(r, best_feature) <= best_threshold ? lrows : rrows).push_back(r);
    const int l = static_cast<int>(nodes.size()), r = l + 1;
    nodes.push_back({});
    nodes.push_back({});
    auto& nd = nodes[static_cast<std::size_t>(p.node)];
    nd.feature = best_feature;
    nd.threshold = best_threshold;
    nd.left = l;
    nd.right = r;
    stack.push_back({r, std::move(rrows)});
    stack.push_back({l, std::move(lrows)});
  }
}

}  // namespace detail

/// Trains `num_estimators` interval trees. `y` holds class indices 0..K-1.
/// Each tree sees a class-stratified bootstrap sample and its own seeded
/// supervised interval search over the three representations; the mean,
/// standard deviation and slope of every kept interval become its features.
inline IntervalForest fit_interval_forest(const Matrix& X, std::span<const int> y, int num_classes, int num_estimators,
                                          std::uint64_t seed) {
  if (num_estimators < 1) throw DomainError("the interval forest needs at least one estimator");
  const auto reps = SeriesRepresentations::compute(X);
  IntervalForest forest;
  forest.length = static_cast<std::size_t>(X.cols());
  forest.num_classes = num_classes;
  forest.trees.resize(static_cast<std::size_t>(num_estimators));

  std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < y.size(); ++i) by_class[static_cast<std::size_t>(y[i])].push_back(static_cast<Eigen::Index>(i));

  for (int e = 0; e < num_estimators; ++e) {
    auto rng = make_rng(seed, {0x73747366ULL, static_cast<std::uint64_t>(e)});
    std::vector<Eigen::Index> rows;
    std::vector<int> ry;
    for (std::size_t c = 0; c < by_class.size(); ++c)
      for (std::size_t t = 0; t < by_class[c].size(); ++t) {
        rows.push_back(by_class[c][uniform_index(rng, by_class[c].size())]);
        ry.push_back(static_cast<int>(c));
      }
    std::vector<Interval> intervals;
    for (auto kind : {Representation::Raw, Representation::Difference, Representation::Periodogram})
      detail::search_intervals(reps[kind], kind, rows, ry, rng, intervals);

    auto& tree = forest.trees[static_cast<std::size_t>(e)];
    for (const auto& iv : intervals)
      for (auto stat : {IntervalStat::Mean, IntervalStat::StdDev, IntervalStat::Slope}) tree.features.push_back({iv, stat});
    Matrix F(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(tree.features.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t f = 0; f < tree.features.size(); ++f)
        F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = feature_value(reps, rows[i], tree.features[f]);
    detail::grow_tree(F, ry, num_classes, tree.nodes);
  }
  return forest;
}

/// Vote shares per class, n x K.
inline Matrix interval_forest_votes(const IntervalForest& forest, const Matrix& X) {
  if (static_cast<std::size_t>(X.cols()) != forest.length)
    throw DomainError("series length " + std::to_string(X.cols()) + " does not match the fitted length " +
                      std::to_string(forest.length));
  const auto reps = SeriesRepresentations::compute(X);
  Matrix votes = Matrix::Zero(X.rows(), forest.num_classes);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (const auto& tree : forest.trees) votes(i, tree.predict(reps, i)) += 1.0;
  votes /= static_cast<double>(forest.trees.size());
  return votes;
}

}  // namespace hcts
