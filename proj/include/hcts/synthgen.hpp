#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "hierarchy.hpp"
#include "random.hpp"

namespace hcts {

/// Synthetic dataset with a planted full binary class hierarchy of the
/// given depth (2^depth classes).
struct PlantedSpec {
  int depth = 3;
  int length = 128;
  int samples_per_class = 30;
  std::vector<double> level_offsets{3.0, 1.5, 0.75};
  double noise_sigma = 0.25;
  std::uint64_t seed = 0;

  int num_classes() const { return 1 << depth; }
};

/// depth 3, L = 128, 30 samples per class, offsets (3, 1.5, 0.75), sigma 0.25.
inline PlantedSpec separable_preset(std::uint64_t seed = 0) {
  PlantedSpec s;
  s.seed = seed;
  return s;
}

inline void validate(const PlantedSpec& s) {
  if (s.depth < 1 || s.depth > 10) throw DomainError("planted depth must lie in 1..10");
  if (s.length < 2 * s.depth) throw DomainError("series length must be at least twice the depth");
  if (s.samples_per_class < 1) throw DomainError("samples_per_class must be positive");
  if (static_cast<int>(s.level_offsets.size()) != s.depth) throw DomainError("need one offset per level");
  for (std::size_t l = 0; l < s.level_offsets.size(); ++l) {
    if (!(s.level_offsets[l] > 0.0)) throw DomainError("level offsets must be positive");
    if (l > 0 && !(s.level_offsets[l] < s.level_offsets[l - 1])) throw DomainError("level offsets must be strictly decreasing");
  }
  if (!(s.noise_sigma > 0.0)) throw DomainError("noise_sigma must be positive");
}

/// Branch (0 or 1) taken by class `c` at tree level `level` (0 = root).
inline int planted_branch(int c, int level, int depth) { return (c >> (depth - 1 - level)) & 1; }

/// Time slice [begin, end) owned by level `l`. Widths are proportional to
/// the level offsets so deeper (weaker) levels also occupy less of the series.
inline std::pair<int, int> planted_slice(const PlantedSpec& s, int l) {
  double total = 0.0, before = 0.0;
  for (int k = 0; k < s.depth; ++k) {
    total += s.level_offsets[static_cast<std::size_t>(k)];
    if (k < l) before += s.level_offsets[static_cast<std::size_t>(k)];
  }
  const double upto = before + s.level_offsets[static_cast<std::size_t>(l)];
  const auto at = [&](double x) { return static_cast<int>(std::lround(x / total * s.length)); };
  return {at(before), l + 1 == s.depth ? s.length : at(upto)};
}

/// Flat-topped bump on [0, len): cosine ramps over the outer quarters.
inline double planted_bump(int i, int len) {
  if (len <= 2) return 1.0;
  constexpr double pi = 3.14159265358979323846;
  const double x = (i + 0.5) / len, ramp = 0.25;
  if (x < ramp) return 0.5 * (1.0 - std::cos(pi * x / ramp));
  if (x > 1.0 - ramp) return 0.5 * (1.0 - std::cos(pi * (1.0 - x) / ramp));
  return 1.0;
}

/// Noise-free class template: each level puts a bump on its own slice,
/// signed by the class's branch at that level and scaled by its offset.
inline std::vector<double> planted_template(const PlantedSpec& s, int c) {
  std::vector<double> t(static_cast<std::size_t>(s.length), 0.0);
  for (int l = 0; l < s.depth; ++l) {
    const auto [begin, end] = planted_slice(s, l);
    const double sign = planted_branch(c, l, s.depth) ? 1.0 : -1.0;
    for (int i = 0; i < end - begin; ++i)
      t[static_cast<std::size_t>(begin + i)] = sign * s.level_offsets[static_cast<std::size_t>(l)] * planted_bump(i, end - begin);
  }
  return t;
}

struct PlantedDataset {
  TimeSeriesDataset dataset;
  HierarchyNode tree;
};

/// Samples are template + N(0, sigma^2) noise; each (class, sample) pair
/// draws from its own seeded stream. Rows are grouped by class.
inline PlantedDataset generate_planted(const PlantedSpec& s) {
  validate(s);
  const int c = s.num_classes();
  PlantedDataset out;
  auto& ds = out.dataset;
  ds.name = "planted-d" + std::to_string(s.depth) + "-s" + std::to_string(s.seed);
  ds.num_classes = c;
  for (int k = 0; k < c; ++k) ds.class_names.push_back(std::to_string(k));
  ds.values.resize(static_cast<Eigen::Index>(c) * s.samples_per_class, s.length);
  for (int k = 0; k < c; ++k) {
    const auto tmpl = planted_template(s, k);
    for (int i = 0; i < s.samples_per_class; ++i) {
      auto rng = make_rng(s.seed, {0x706c616eULL, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i)});
      const Eigen::Index row = static_cast<Eigen::Index>(k) * s.samples_per_class + i;
      for (int t = 0; t < s.length; ++t) ds.values(row, t) = tmpl[static_cast<std::size_t>(t)] + s.noise_sigma * standard_normal(rng);
      ds.labels.push_back(k);
    }
  }
  int next_id = 0;
  out.tree = balanced_tree(0, c, next_id);
  return out;
}

}  // namespace hcts
