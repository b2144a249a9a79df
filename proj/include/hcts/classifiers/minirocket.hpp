#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "../dataset.hpp"
#include "../error.hpp"
#include "../random.hpp"

namespace hcts {

inline constexpr int kKernelLength = 9;
inline constexpr int kNumKernels = 84;  // C(9, 3)

/// Positions of the three weight-2 taps of each length-9 kernel; all other
/// taps are -1, so every kernel sums to zero.
inline const std::array<std::array<int, 3>, kNumKernels>& kernel_taps() {
  static const auto taps = [] {
    std::array<std::array<int, 3>, kNumKernels> t{};
    int k = 0;
    for (int a = 0; a < kKernelLength; ++a)
      for (int b = a + 1; b < kKernelLength; ++b)
        for (int c = b + 1; c < kKernelLength; ++c) t[static_cast<std::size_t>(k++)] = {a, b, c};
    return t;
  }();
  return taps;
}

/// One kernel at one dilation, with the biases of the features it emits.
struct KernelGroup {
  int kernel = 0;
  int dilation = 1;
  bool padded = true;
  std::vector<double> biases;
};

/// Fitted random-convolution transform producing PPV features.
struct MiniRocketTransform {
  std::size_t length = 0;
  std::vector<KernelGroup> groups;  // output feature order

  std::size_t num_features() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.biases.size();
    return n;
  }
};

namespace detail {

// Dilations spread exponentially in [1, (L-1)/8] and how many features each
// receives, for `count` features of one kernel.
inline std::vector<std::pair<int, int>> dilation_schedule(std::size_t length, int count) {
  constexpr int max_dilations_per_kernel = 32;
  const int slots = std::max(1, std::min(count, max_dilations_per_kernel));
  const double max_exponent =
      length > 9 ? std::max(0.0, std::log2(static_cast<double>(length - 1) / (kKernelLength - 1))) : 0.0;
  std::vector<std::pair<int, int>> sched;  // (dilation, features)
  for (int s = 0; s < slots; ++s) {
    const double e = slots == 1 ? 0.0 : max_exponent * s / (slots - 1);
    const int d = std::max(1, static_cast<int>(std::floor(std::pow(2.0, e))));
    if (!sched.empty() && sched.back().first == d) ++sched.back().second;
    else sched.emplace_back(d, 1);
  }
  const int multiplier = count / slots;
  int assigned = 0;
  for (auto& [d, f] : sched) assigned += f *= multiplier;
  for (std::size_t i = 0; assigned < count; i = (i + 1) % sched.size(), ++assigned) ++sched[i].second;
  return sched;
}

// Convolution of one series with every kernel at dilation d. Fills
// `out[k]` with the full zero-padded output (length L).
inline void convolve_all(std::span<const double> x, int d, std::vector<std::vector<double>>& out) {
  const std::size_t L = x.size();
  std::array<std::vector<double>, kKernelLength> shifted;
  std::vector<double> alpha(L, 0.0);
  for (int tap = 0; tap < kKernelLength; ++tap) {
    auto& s = shifted[static_cast<std::size_t>(tap)];
    s.assign(L, 0.0);
    const long off = static_cast<long>(tap - kKernelLength / 2) * d;
    for (std::size_t t = 0; t < L; ++t) {
      const long src = static_cast<long>(t) + off;
      if (src >= 0 && src < static_cast<long>(L)) s[t] = x[static_cast<std::size_t>(src)];
    }
    for (std::size_t t = 0; t < L; ++t) alpha[t] -= s[t];
  }
  out.resize(kNumKernels);
  const auto& taps = kernel_taps();
  for (int k = 0; k < kNumKernels; ++k) {
    auto& c = out[static_cast<std::size_t>(k)];
    c.resize(L);
    const auto& [a, b, e] = taps[static_cast<std::size_t>(k)];
    for (std::size_t t = 0; t < L; ++t)
      c[t] = alpha[t] + 3.0 * (shifted[static_cast<std::size_t>(a)][t] + shifted[static_cast<std::size_t>(b)][t] +
                               shifted[static_cast<std::size_t>(e)][t]);
  }
}

// Valid (unpadded) output range for dilation d: [first, last).
inline std::pair<std::size_t, std::size_t> output_range(std::size_t L, int d, bool padded) {
  if (padded) return {0, L};
  const std::size_t half = static_cast<std::size_t>(kKernelLength / 2) * static_cast<std::size_t>(d);
  return {half, L - half};
}

// Linear-interpolation quantile of a copy of `v` (numpy's default rule).
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

/// Fits the kernel bank, dilations and biases on X (n x L).
///
/// The 84 kernels share num_features / 84 features each, the first
/// num_features % 84 kernels take one more. Biases are quantiles of the
/// convolution output of a training series drawn from a seeded subsample of
/// at most 64 series; quantile levels follow the golden-ratio sequence.
inline MiniRocketTransform fit_minirocket(const Matrix& X, int num_features, std::uint64_t seed) {
  if (num_features < kNumKernels)
    throw DomainError("the convolution transform needs at least 84 features, got " + std::to_string(num_features));
  if (X.rows() < 1) throw DomainError("the convolution transform needs at least one training series");
  const std::size_t L = static_cast<std::size_t>(X.cols());
  MiniRocketTransform tf;
  tf.length = L;

  auto rng = make_rng(seed, {0x6d696e69ULL});
  std::vector<std::size_t> pool(static_cast<std::size_t>(X.rows()));
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  const auto subsample = sample_without_replacement(pool, 64, rng);

  const int per_kernel = num_features / kNumKernels;
  const int extra = num_features % kNumKernels;
  std::vector<std::vector<std::pair<int, int>>> schedules(kNumKernels);
  for (int k = 0; k < kNumKernels; ++k)
    schedules[static_cast<std::size_t>(k)] = detail::dilation_schedule(L, per_kernel + (k < extra ? 1 : 0));

  constexpr double golden = 0.61803398874989484820458683436564;
  std::size_t feature_counter = 0;
  for (int k = 0; k < kNumKernels; ++k) {
    const auto& sched = schedules[static_cast<std::size_t>(k)];
    for (std::size_t di = 0; di < sched.size(); ++di) {
      KernelGroup g;
      g.kernel = k;
      g.dilation = sched[di].first;
      const std::size_t half = static_cast<std::size_t>(kKernelLength / 2) * static_cast<std::size_t>(g.dilation);
      g.padded = (static_cast<std::size_t>(k) + di) % 2 == 0 || 2 * half >= L;
      tf.groups.push_back(std::move(g));
    }
  }
  // Biases: one seeded example per group.
  std::vector<std::vector<double>> conv;
  for (auto& g : tf.groups) {
    const std::size_t ex = subsample[uniform_index(rng, subsample.size())];
    std::span<const double> x(X.data() + ex * L, L);
    detail::convolve_all(x, g.dilation, conv);
    const auto [first, last] = detail::output_range(L, g.dilation, g.padded);
    const auto& c = conv[static_cast<std::size_t>(g.kernel)];
    std::vector<double> view(c.begin() + static_cast<long>(first), c.begin() + static_cast<long>(last));
    const int count = [&] {
      for (auto [d, f] : schedules[static_cast<std::size_t>(g.kernel)])
        if (d == g.dilation) return f;
      return 0;
    }();
    for (int f = 0; f < count; ++f) {
      const double q = std::fmod(static_cast<double>(++feature_counter) * golden, 1.0);
      g.biases.push_back(detail::quantile(view, q));
    }
  }
  return tf;
}

/// PPV features (fraction of convolution outputs above each bias), n x F.
inline Matrix apply_minirocket(const MiniRocketTransform& tf, const Matrix& X) {
  if (static_cast<std::size_t>(X.cols()) != tf.length)
    throw DomainError("series length " + std::to_string(X.cols()) + " does not match the fitted length " +
                      std::to_string(tf.length));
  const std::size_t L = tf.length;
  Matrix out(X.rows(), static_cast<Eigen::Index>(tf.num_features()));
  std::vector<int> dilations;
  for (const auto& g : tf.groups) dilations.push_back(g.dilation);
  std::sort(dilations.begin(), dilations.end());
  dilations.erase(std::unique(dilations.begin(), dilations.end()), dilations.end());

  std::vector<std::vector<double>> conv;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::span<const double> x(X.data() + static_cast<std::size_t>(i) * L, L);
    for (int d : dilations) {
      detail::convolve_all(x, d, conv);
      Eigen::Index col = 0;
      for (const auto& g : tf.groups) {
        if (g.dilation == d) {
          const auto [first, last] = detail::output_range(L, d, g.padded);
          const auto& c = conv[static_cast<std::size_t>(g.kernel)];
          const double len = static_cast<double>(last - first);
          for (std::size_t f = 0; f < g.biases.size(); ++f) {
            std::size_t positive = 0;
            for (std::size_t t = first; t < last; ++t) positive += c[t] > g.biases[f];
            out(i, col + static_cast<Eigen::Index>(f)) = static_cast<double>(positive) / len;
          }
        }
        col += static_cast<Eigen::Index>(g.biases.size());
      }
    }
  }
  return out;
}

/// Fit on X and transform X in one step.
inline Matrix minirocket_transform(const Matrix& X, int num_features, std::uint64_t seed) {
  return apply_minirocket(fit_minirocket(X, num_features, seed), X);
}

}  // namespace hcts
