#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "classifier.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace hcts {

enum class Measure { JSD, TSD, CBD };

inline std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::JSD: return "jsd";
    case Measure::TSD: return "tsd";
    case Measure::CBD: return "cbd";
  }
  return "?";
}

inline Measure parse_measure(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "jsd") return Measure::JSD;
  if (lower == "tsd") return Measure::TSD;
  if (lower == "cbd") return Measure::CBD;
  throw DomainError("unknown measure '" + std::string(s) + "' (expected jsd, tsd or cbd)");
}

/// Symmetric c x c class dissimilarities in [0, 1] with a zero diagonal.
struct DissimilarityMatrix {
  Measure measure = Measure::JSD;
  Matrix values;
  std::vector<std::string> class_names;

  int size() const { return static_cast<int>(values.rows()); }
  double operator()(int i, int j) const { return values(i, j); }
};

/// Throws DomainError unless `d` is square, symmetric within 1e-12, has a
/// zero diagonal and entries in [0, 1].
inline void check_invariants(const DissimilarityMatrix& d) {
  const auto c = d.values.rows();
  if (d.values.cols() != c) throw DomainError("dissimilarity matrix is not square");
  if (!d.class_names.empty() && static_cast<Eigen::Index>(d.class_names.size()) != c)
    throw DomainError("dissimilarity matrix has " + std::to_string(d.class_names.size()) + " class names for " +
                      std::to_string(c) + " classes");
  for (Eigen::Index i = 0; i < c; ++i) {
    if (d.values(i, i) != 0.0) throw DomainError("non-zero diagonal at " + std::to_string(i));
    for (Eigen::Index j = 0; j < c; ++j) {
      const double v = d.values(i, j);
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside [0,1]");
      if (std::abs(v - d.values(j, i)) > 1e-12) throw DomainError("matrix is not symmetric");
    }
  }
}

// ---------------------------------------------------------------------------
// Jensen-Shannon divergence over pooled-value histograms.

/// Smoothed histogram of all values of one class.
struct ClassHistogram {
  std::vector<double> bin_edges;  // B + 1, strictly increasing
  std::vector<double> mass;       // B, sums to 1
};

inline constexpr int kDefaultJsdBins = 64;
inline constexpr double kHistogramSmoothing = 1e-9;

/// Pools every time point of every member of each class into a histogram
/// over the global [min, max] of the dataset, then adds 1e-9 to each bin
/// probability and renormalizes.
inline std::vector<ClassHistogram> estimate_class_histograms(const TimeSeriesDataset& ds, int bins) {
  if (bins < 2) throw DomainError("histogram needs at least 2 bins");
  const double lo = ds.values.minCoeff(), hi = ds.values.maxCoeff();
  if (!(hi > lo))
    throw DomainError("all values are identical; the Jensen-Shannon divergence is undefined for constant data");
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
  edges.back() = hi;

  std::vector<std::vector<double>> counts(static_cast<std::size_t>(ds.num_classes), std::vector<double>(bins, 0.0));
  const double scale = bins / (hi - lo);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto& h = counts[static_cast<std::size_t>(ds.labels[i])];
    for (double v : ds.series(i)) {
      const int b = std::clamp(static_cast<int>((v - lo) * scale), 0, bins - 1);
      h[static_cast<std::size_t>(b)] += 1.0;
    }
  }
  std::vector<ClassHistogram> out;
  for (int c = 0; c < ds.num_classes; ++c) {
    auto& h = counts[static_cast<std::size_t>(c)];
    double total = 0.0;
    for (double v : h) total += v;
    if (total == 0.0) throw DomainError("class " + std::to_string(c) + " has no samples");
    double z = 0.0;
    for (double& v : h) z += v = v / total + kHistogramSmoothing;
    for (double& v : h) v /= z;
    out.push_back({edges, std::move(h)});
  }
  return out;
}

/// 0.5 * (KL(P||M) + KL(Q||M)) with M = (P + Q) / 2 and base-2 logarithms,
/// so the result lies in [0, 1]. Zero-mass terms contribute nothing.
inline double jsd_pair(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("distributions have different supports");
  double kl_p = 0.0, kl_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) kl_p += p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) kl_q += q[i] * std::log2(q[i] / m);
  }
  return std::clamp(0.5 * (kl_p + kl_q), 0.0, 1.0);
}

inline double jsd_pair(const ClassHistogram& p, const ClassHistogram& q) {
  if (p.bin_edges != q.bin_edges) throw DomainError("histograms do not share bin edges");
  return jsd_pair(p.mass, q.mass);
}

struct JsdOptions {
  int bins = kDefaultJsdBins;
  bool sqrt_metric = false;  // report sqrt(JSD), the Jensen-Shannon distance
};

inline DissimilarityMatrix jsd_matrix(const TimeSeriesDataset& ds, const JsdOptions& opt = {}) {
  const auto hist = estimate_class_histograms(ds, opt.bins);
  const int c = ds.num_classes;
  DissimilarityMatrix d{Measure::JSD, Matrix::Zero(c, c), ds.class_names};
  for (int i = 0; i < c; ++i)
    for (int j = i + 1; j < c; ++j) {
      double v = jsd_pair(hist[static_cast<std::size_t>(i)], hist[static_cast<std::size_t>(j)]);
      if (opt.sqrt_metric) v = std::sqrt(v);
      d.values(i, j) = d.values(j, i) = v;
    }
  return d;
}

// ---------------------------------------------------------------------------
// Task-similarity distance.

struct TsdConfig {
  int num_references = 5;  // clamped to c - 2
  ClassifierSpec base_classifier{};
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

namespace detail {

// Binary task "class `pos` (label 1) vs class `neg` (label 0)", the larger
// side subsampled to the size of the smaller one.
inline std::pair<Matrix, std::vector<int>> binary_task(const TimeSeriesDataset& ds,
                                                       const std::vector<std::vector<std::size_t>>& parts, int pos,
                                                       int neg, Rng& rng) {
  auto a = parts[static_cast<std::size_t>(pos)], b = parts[static_cast<std::size_t>(neg)];
  const std::size_t n = std::min(a.size(), b.size());
  if (a.size() > n) a = sample_without_replacement(a, n, rng);
  if (b.size() > n) b = sample_without_replacement(b, n, rng);
  std::vector<std::size_t> rows(a);
  rows.insert(rows.end(), b.begin(), b.end());
  std::vector<int> y(a.size(), 1);
  y.resize(rows.size(), 0);
  return {subset(ds, rows).values, std::move(y)};
}

inline double accuracy(const ClassifierModel& m, const Matrix& X, std::span<const int> y) {
  const auto pred = m.predict(X);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i];
  return static_cast<double>(hit) / static_cast<double>(y.size());
}

}  // namespace detail

/// Raw pairwise task similarity before symmetrization and normalization.
///
/// For classes i, j and each sampled reference class r, the classifier
/// trained on "i vs r" is scored on "j vs r" and vice versa; the pair's
/// similarity is the mean of both directions averaged over references.
inline Matrix tsd_similarity(const TimeSeriesDataset& ds, const TsdConfig& cfg) {
  const int c = ds.num_classes;
  if (c < 3) throw DomainError("task-similarity distance needs at least 3 classes");
  const auto parts = class_partition(ds);
  for (int k = 0; k < c; ++k)
    if (parts[static_cast<std::size_t>(k)].size() < 2)
      throw DomainError("class " + std::to_string(k) + " has fewer than 2 samples; cannot form a binary task");
  const int R = std::clamp(cfg.num_references, 1, c - 2);

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < c; ++i)
    for (int j = i + 1; j < c; ++j) pairs.emplace_back(i, j);
  std::vector<double> sim(pairs.size(), 0.0);

  parallel_for(pairs.size(), cfg.jobs, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    auto rng = make_rng(cfg.seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)});
    std::vector<int> others;
    for (int k = 0; k < c; ++k)
      if (k != i && k != j) others.push_back(k);
    const auto refs = sample_without_replacement(others, static_cast<std::size_t>(R), rng);
    double total = 0.0;
    for (int r : refs) {
      auto [Xi, yi] = detail::binary_task(ds, parts, i, r, rng);
      auto [Xj, yj] = detail::binary_task(ds, parts, j, r, rng);
      const auto spec = cfg.base_classifier.with_seed(
          derive_seed(cfg.seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(r)}));
      const auto mi = fit(spec, Xi, yi);
      const auto mj = fit(spec, Xj, yj);
      total += 0.5 * (detail::accuracy(mi, Xj, yj) + detail::accuracy(mj, Xi, yi));
    }
    sim[p] = total / static_cast<double>(refs.size());
  });

  Matrix S = Matrix::Zero(c, c);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    S(i, j) = S(j, i) = sim[p];
  }
  return S;
}

/// Symmetrize, min-max normalize the off-diagonal entries and convert to a
/// dissimilarity 1 - s. If every off-diagonal similarity is equal the pairs
/// are indistinguishable and all entries become 0.5.
inline Matrix similarity_to_dissimilarity(const Matrix& raw) {
  const Eigen::Index c = raw.rows();
  Matrix S = 0.5 * (raw + raw.transpose());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      if (i != j) lo = std::min(lo, S(i, j)), hi = std::max(hi, S(i, j));
  Matrix D = Matrix::Zero(c, c);
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index j = i + 1; j < c; ++j) {
      const double v = hi > lo ? 1.0 - (S(i, j) - lo) / (hi - lo) : 0.5;
      D(i, j) = D(j, i) = std::clamp(v, 0.0, 1.0);
    }
  return D;
}

inline DissimilarityMatrix tsd_matrix(const TimeSeriesDataset& ds, const TsdConfig& cfg = {}) {
  return {Measure::TSD, similarity_to_dissimilarity(tsd_similarity(ds, cfg)), ds.class_names};
}

// ---------------------------------------------------------------------------
// Classifier-based distance.

/// counts(r, s) = samples of true class r predicted as class s.
struct ConfusionMatrix {
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> counts;

  int size() const { return static_cast<int>(counts.rows()); }
  long operator()(int r, int s) const { return counts(r, s); }
};

struct CbdConfig {
  ClassifierSpec base_classifier{};
  int folds = 3;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

/// Out-of-fold confusion matrix from stratified cross-validation on `ds`.
/// The fold count is clamped to the smallest class size (at least 2).
inline ConfusionMatrix cbd_confusion(const TimeSeriesDataset& ds, const CbdConfig& cfg = {}) {
  if (cfg.folds < 2) throw DomainError("classifier-based distance needs at least 2 folds");
  const auto counts = class_counts(ds);
  const std::size_t smallest = *std::min_element(counts.begin(), counts.end());
  if (smallest < 2) throw DomainError("every class needs at least 2 samples for the classifier-based distance");
  const int k = static_cast<int>(std::clamp<std::size_t>(smallest, 2, static_cast<std::size_t>(cfg.folds)));
  const auto plan = stratified_kfold(ds, k, cfg.seed);

  std::vector<std::vector<int>> predictions(static_cast<std::size_t>(k));
  parallel_for(static_cast<std::size_t>(k), cfg.jobs, [&](std::size_t f) {
    const auto train = subset(ds, plan.train_indices(static_cast<int>(f)));
    const auto test = subset(ds, plan.test_indices(static_cast<int>(f)));
    const auto spec = cfg.base_classifier.with_seed(derive_seed(cfg.seed, {0x636264ULL, f}));
    predictions[f] = fit(spec, train.values, train.labels).predict(test.values);
  });
  ConfusionMatrix cm;
  cm.counts.setZero(ds.num_classes, ds.num_classes);
  for (int f = 0; f < k; ++f) {
    const auto idx = plan.test_indices(f);
    for (std::size_t t = 0; t < idx.size(); ++t) ++cm.counts(ds.labels[idx[t]], predictions[static_cast<std::size_t>(f)][t]);
  }
  return cm;
}

/// (m_ii + m_jj) / (m_ij + m_ji + m_ii + m_jj): the accuracy of the 2x2
/// sub-confusion matrix of classes i and j. A zero denominator gives 0.5.
inline double cbd_pair(const ConfusionMatrix& m, int i, int j) {
  const double correct = static_cast<double>(m(i, i) + m(j, j));
  const double total = correct + static_cast<double>(m(i, j) + m(j, i));
  return total > 0.0 ? correct / total : 0.5;
}

inline DissimilarityMatrix cbd_matrix(const ConfusionMatrix& m, std::vector<std::string> class_names = {}) {
  const int c = m.size();
  if (m.counts.cols() != c) throw DomainError("confusion matrix is not square");
  if ((m.counts.array() < 0).any()) throw DomainError("confusion matrix has negative counts");
  DissimilarityMatrix d{Measure::CBD, Matrix::Zero(c, c), std::move(class_names)};
  for (int i = 0; i < c; ++i)
    for (int j = i + 1; j < c; ++j) d.values(i, j) = d.values(j, i) = cbd_pair(m, i, j);
  return d;
}

// ---------------------------------------------------------------------------

/// Options for building any of the three matrices from a dataset.
struct DissimConfig {
  JsdOptions jsd{};
  int tsd_references = 5;
  int cbd_folds = 3;
  ClassifierSpec base_classifier{};
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

inline DissimilarityMatrix build_dissimilarity(const TimeSeriesDataset& ds, Measure measure, const DissimConfig& cfg = {}) {
  switch (measure) {
    case Measure::JSD:
      return jsd_matrix(ds, cfg.jsd);
    case Measure::TSD:
      return tsd_matrix(ds, {cfg.tsd_references, cfg.base_classifier, cfg.seed, cfg.jobs});
    case Measure::CBD: {
      auto d = cbd_matrix(cbd_confusion(ds, {cfg.base_classifier, cfg.cbd_folds, cfg.seed, cfg.jobs}), ds.class_names);
      return d;
    }
  }
  throw DomainError("unknown measure");
}

/// `{"measure": ..., "class_names": [...], "values": [[...], ...]}`.
inline nlohmann::ordered_json to_json(const DissimilarityMatrix& d) {
  nlohmann::ordered_json j;
  j["measure"] = to_string(d.measure);
  j["class_names"] = d.class_names;
  j["values"] = detail::matrix_to_json(d.values);
  return j;
}

inline DissimilarityMatrix dissimilarity_from_json(const nlohmann::ordered_json& j) {
  auto fail = [](const std::string& path, const std::string& what) { throw FormatError(path + ": " + what); };
  if (!j.is_object()) fail("/", "expected an object");
  if (!j.contains("measure") || !j["measure"].is_string()) fail("/measure", "expected a string");
  if (!j.contains("values") || !j["values"].is_array()) fail("/values", "expected an array of rows");
  DissimilarityMatrix d;
  d.measure = parse_measure(j["measure"].get<std::string>());
  const auto& rows = j["values"];
  const auto c = static_cast<Eigen::Index>(rows.size());
  d.values.resize(c, c);
  for (Eigen::Index i = 0; i < c; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    const std::string path = "/values/" + std::to_string(i);
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) fail(path, "expected an array of " + std::to_string(c) + " numbers");
    for (Eigen::Index k = 0; k < c; ++k) {
      if (!row[static_cast<std::size_t>(k)].is_number()) fail(path + "/" + std::to_string(k), "expected a number");
      d.values(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  if (j.contains("class_names")) {
    if (!j["class_names"].is_array()) fail("/class_names", "expected an array of strings");
    for (std::size_t k = 0; k < j["class_names"].size(); ++k) {
      if (!j["class_names"][k].is_string()) fail("/class_names/" + std::to_string(k), "expected a string");
      d.class_names.push_back(j["class_names"][k].get<std::string>());
    }
  }
  try {
    check_invariants(d);
  } catch (const DomainError& e) {
    fail("/values", e.what());
  }
  return d;
}

}  // namespace hcts
