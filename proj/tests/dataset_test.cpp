#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include <hcts/dataset.hpp>

namespace fs = std::filesystem;
using namespace hcts;

namespace {

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = fs::path(testing::TempDir()) / name;
  std::ofstream(p) << text;
  return p;
}

TimeSeriesDataset labelled(std::vector<int> labels, int c, int L = 4) {
  TimeSeriesDataset ds;
  ds.labels = std::move(labels);
  ds.num_classes = c;
  for (int k = 0; k < c; ++k) ds.class_names.push_back(std::to_string(k));
  ds.values = Matrix::Zero(static_cast<Eigen::Index>(ds.labels.size()), L);
  for (Eigen::Index i = 0; i < ds.values.rows(); ++i)
    for (Eigen::Index t = 0; t < L; ++t) ds.values(i, t) = static_cast<double>(i * L + t);
  return ds;
}

}  // namespace

TEST(LoadUcr, ParsesTabSeparatedFile) {
  const auto p = write_file("Tiny_TRAIN.tsv", "1\t0.1\t0.2\n2\t0.3\t0.4\n3\t0.5\t0.6\n");
  const auto ds = load_ucr_tsv(p);
  EXPECT_EQ(ds.name, "Tiny");
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.length(), 2u);
  EXPECT_EQ(ds.num_classes, 3);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(ds.values(2, 1), 0.6);
}

TEST(LoadUcr, RemapsLabelsByNumericOrder) {
  const auto p = write_file("remap.tsv", "10\t1\n-1\t2\n2\t3\n10\t4\n");
  const auto ds = load_ucr_tsv(p);
  EXPECT_EQ(ds.labels, (std::vector<int>{2, 0, 1, 2}));
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"-1", "2", "10"}));
}

TEST(LoadUcr, AcceptsCommaDelimiter) {
  const auto p = write_file("comma.csv", "1,0.1,0.2\n2,0.3,0.4\n3,0.5,0.6\n");
  EXPECT_EQ(load_ucr_tsv(p).length(), 2u);
}

TEST(LoadUcr, RaggedRowNamesLine) {
  const auto p = write_file("ragged.tsv", "1\t0.1\t0.2\n2\t0.3\n3\t0.5\t0.6\n");
  try {
    load_ucr_tsv(p);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(LoadUcr, NonNumericTokenIsParseError) {
  const auto p = write_file("bad.tsv", "1\t0.1\t0.2\n2\tabc\t0.4\n3\t0.5\t0.6\n");
  EXPECT_THROW(load_ucr_tsv(p), ParseError);
}

TEST(LoadUcr, TwoClassesRejected) {
  const auto p = write_file("two.tsv", "1\t0.1\t0.2\n2\t0.3\t0.4\n");
  try {
    load_ucr_tsv(p);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("multi-class required"), std::string::npos);
  }
}

TEST(LoadUcr, TrainAndTestConcatenate) {
  const auto a = write_file("Pair_TRAIN.tsv", "1\t0\t1\n2\t1\t0\n");
  const auto b = write_file("Pair_TEST.tsv", "3\t2\t2\n1\t5\t5\n");
  const std::vector<fs::path> files{a, b};
  const auto ds = load_ucr_files(files);
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.num_classes, 3);
  EXPECT_EQ(ds.name, "Pair");
}

TEST(LoadUcr, WriteReadRoundTrip) {
  auto ds = labelled({0, 1, 2, 1}, 3, 5);
  ds.values(1, 2) = 0.1 + 0.2;  // not exactly representable in short decimal
  const auto p = fs::path(testing::TempDir()) / "rt.tsv";
  write_ucr_tsv(ds, p);
  const auto back = load_ucr_tsv(p);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.values, ds.values);
}

TEST(Znormalize, Examples) {
  const std::vector<double> x{1, 2, 3};
  const auto z = znormalize(x);
  EXPECT_NEAR(z[0], -std::sqrt(1.5), 1e-12);
  EXPECT_NEAR(z[1], 0.0, 1e-12);
  EXPECT_NEAR(z[2], std::sqrt(1.5), 1e-12);
  const std::vector<double> flat{5, 5, 5};
  EXPECT_EQ(znormalize(flat), (std::vector<double>{0, 0, 0}));
}

TEST(Znormalize, IdempotentAndAffineInvariant) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd(3.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(20);
    for (auto& v : x) v = nd(rng);
    const auto z = znormalize(x);
    const auto zz = znormalize(z);
    const double a = 0.1 + trial, b = -5.0 + trial;
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
    const auto zy = znormalize(y);
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_NEAR(zz[i], z[i], 1e-9);
      EXPECT_NEAR(zy[i], z[i], 1e-9);
    }
  }
}

TEST(ClassPartition, Example) {
  const auto ds = labelled({0, 1, 0, 2}, 3);
  const auto parts = class_partition(ds);
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0], (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(parts[1], (std::vector<std::size_t>{1}));
  EXPECT_EQ(parts[2], (std::vector<std::size_t>{3}));
}

TEST(StratifiedKFold, OnePerClassPerFold) {
  const auto ds = labelled({0, 0, 1, 1, 2, 2}, 3);
  const auto plan = stratified_kfold(ds, 2, 11);
  for (int f = 0; f < 2; ++f) {
    std::multiset<int> seen;
    for (auto i : plan.test_indices(f)) seen.insert(ds.labels[i]);
    EXPECT_EQ(seen, (std::multiset<int>{0, 1, 2}));
  }
  EXPECT_EQ(stratified_kfold(ds, 2, 11).assignment, plan.assignment);
}

TEST(StratifiedKFold, BalancedSizes) {
  std::vector<int> labels;
  for (int k = 0; k < 3; ++k) labels.insert(labels.end(), 100, k);
  const auto ds = labelled(labels, 3);
  const auto plan = stratified_kfold(ds, 5, 3);
  for (int f = 0; f < 5; ++f) {
    const auto idx = plan.test_indices(f);
    EXPECT_EQ(idx.size(), 60u);
    std::vector<int> per(3, 0);
    for (auto i : idx) ++per[static_cast<std::size_t>(ds.labels[i])];
    EXPECT_EQ(per, (std::vector<int>{20, 20, 20}));
  }
}

TEST(StratifiedKFold, PartitionProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 2 + static_cast<int>(rng() % 5);
    std::vector<int> labels;
    for (int k = 0; k < c; ++k) labels.insert(labels.end(), 1 + rng() % 9, k);
    const int n = static_cast<int>(labels.size());
    const int k = 2 + static_cast<int>(rng() % static_cast<unsigned>(std::min(6, n - 1)));
    const auto plan = stratified_kfold(labels, c, k, rng());
    std::vector<int> fold_sizes(static_cast<std::size_t>(k), 0);
    for (int a : plan.assignment) {
      ASSERT_GE(a, 0);
      ASSERT_LT(a, k);
      ++fold_sizes[static_cast<std::size_t>(a)];
    }
    const auto [lo, hi] = std::minmax_element(fold_sizes.begin(), fold_sizes.end());
    EXPECT_LE(*hi - *lo, 1);
  }
}

TEST(StratifiedKFold, RejectsTooManyFolds) {
  const auto ds = labelled({0, 1, 2}, 3);
  EXPECT_THROW(stratified_kfold(ds, 4, 0), DomainError);
  EXPECT_THROW(stratified_kfold(ds, 1, 0), DomainError);
}

TEST(SelectClasses, RelabelsDensely) {
  const auto ds = labelled({0, 1, 2, 3, 2}, 4);
  const std::vector<int> keep{1, 3};
  const auto s = select_classes(ds, keep);
  EXPECT_EQ(s.num_classes, 2);
  EXPECT_EQ(s.labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(s.class_names, (std::vector<std::string>{"1", "3"}));
}
