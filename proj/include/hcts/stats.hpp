#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "error.hpp"

namespace hcts {

/// Unweighted mean over classes 0..c-1 of the per-class F1 score; a class
/// with no true or predicted samples scores 0.
inline double f1_macro(std::span<const int> y_true, std::span<const int> y_pred, int num_classes) {
  if (y_true.size() != y_pred.size() || y_true.empty()) throw DomainError("f1_macro: label arrays must be non-empty and equal length");
  if (num_classes < 1) throw DomainError("f1_macro: need at least one class");
  std::vector<long> tp(static_cast<std::size_t>(num_classes)), fp(tp.size()), fn(tp.size());
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
      throw DomainError("f1_macro: label outside 0.." + std::to_string(num_classes - 1));
    if (t == p) ++tp[static_cast<std::size_t>(t)];
    else ++fp[static_cast<std::size_t>(p)], ++fn[static_cast<std::size_t>(t)];
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < tp.size(); ++k) {
    const long den = 2 * tp[k] + fp[k] + fn[k];
    if (den > 0) sum += 2.0 * static_cast<double>(tp[k]) / static_cast<double>(den);
  }
  return sum / num_classes;
}

/// One cross-validation outcome. A failed cell carries `error` and a NaN
/// score.
struct FoldResult {
  std::string dataset;
  std::string method;
  int fold = 0;
  double f1_macro = 0.0;
  long train_ms = 0;
  long predict_ms = 0;
  std::string error;

  bool ok() const { return error.empty(); }
};

/// Per-dataset ranks of each method; rank 1 is the best score.
struct RankTable {
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  std::vector<std::vector<double>> scores;  // datasets x methods
  std::vector<std::vector<double>> ranks;   // datasets x methods

  std::vector<double> average() const {
    std::vector<double> avg(methods.size(), 0.0);
    for (const auto& row : ranks)
      for (std::size_t j = 0; j < row.size(); ++j) avg[j] += row[j];
    for (double& a : avg) a /= static_cast<double>(ranks.size());
    return avg;
  }
};

/// Ranks with 1 = highest value; tied values share their average rank.
inline std::vector<double> rank_descending(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
    i = j + 1;
  }
  return r;
}

/// Rank table from a complete block of results. Each method's per-dataset
/// score is its mean F1-macro over folds. Methods and datasets are sorted.
inline RankTable rank_table(const std::vector<std::string>& datasets, const std::vector<std::string>& methods,
                            const std::vector<std::vector<double>>& scores) {
  RankTable t{methods, datasets, scores, {}};
  for (const auto& row : scores) t.ranks.push_back(rank_descending(row));
  return t;
}

inline RankTable average_ranks(std::span<const FoldResult> results) {
  std::set<std::string> datasets, methods;
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
  for (const auto& r : results) {
    datasets.insert(r.dataset);
    methods.insert(r.method);
    if (!r.ok() || !std::isfinite(r.f1_macro)) continue;
    auto& a = acc[{r.dataset, r.method}];
    a.first += r.f1_macro;
    a.second += 1;
  }
  std::vector<std::string> missing;
  std::vector<std::vector<double>> scores;
  for (const auto& d : datasets) {
    std::vector<double> row;
    for (const auto& m : methods) {
      const auto it = acc.find({d, m});
      if (it == acc.end()) {
        missing.push_back(d + "/" + m);
        row.push_back(0.0);
      } else {
        row.push_back(it->second.first / it->second.second);
      }
    }
    scores.push_back(std::move(row));
  }
  if (!missing.empty()) {
    std::string msg = "incomplete block design, missing cells:";
    for (const auto& m : missing) msg += " " + m;
    throw DomainError(msg);
  }
  if (datasets.empty()) throw DomainError("no results to rank");
  return rank_table({datasets.begin(), datasets.end()}, {methods.begin(), methods.end()}, scores);
}

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// chi2 = 12 / (N k (k+1)) * sum_j R_j^2 - 3 N (k+1) with R_j the rank sums,
/// referred to chi-square with k-1 degrees of freedom.
inline FriedmanResult friedman_test(const RankTable& t) {
  const double N = static_cast<double>(t.ranks.size()), k = static_cast<double>(t.methods.size());
  if (N < 2 || k < 2) throw DomainError("the Friedman test needs at least 2 datasets and 2 methods");
  std::vector<double> R(t.methods.size(), 0.0);
  for (const auto& row : t.ranks)
    for (std::size_t j = 0; j < row.size(); ++j) R[j] += row[j];
  double ss = 0.0;
  for (double r : R) ss += r * r;
  FriedmanResult res;
  res.statistic = std::max(0.0, 12.0 / (N * k * (k + 1.0)) * ss - 3.0 * N * (k + 1.0));
  res.p_value = chi_square_sf(res.statistic, k - 1.0);
  return res;
}

enum class ZeroMethod { Discard, Pratt };

struct WilcoxonOptions {
  ZeroMethod zero_method = ZeroMethod::Discard;
  int exact_max_n = 25;  // exact null distribution up to this many non-zero differences
};

namespace detail {

// Signed ranks of the non-zero differences (doubled, hence integral).
struct SignedRanks {
  std::vector<long> doubled_ranks;
  std::vector<bool> positive;
};

inline SignedRanks signed_ranks(std::span<const double> a, std::span<const double> b, ZeroMethod zm) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i] - b[i];
    if (x != 0.0 || zm == ZeroMethod::Pratt) d.push_back(x);
  }
  std::vector<double> mag(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) mag[i] = -std::abs(d[i]);  // rank_descending ranks the smallest |d| first
  const auto r = rank_descending(mag);
  SignedRanks out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == 0.0) continue;
    out.doubled_ranks.push_back(std::lround(2.0 * r[i]));
    out.positive.push_back(d[i] > 0.0);
  }
  return out;
}

}  // namespace detail

/// Two-sided Wilcoxon signed-rank p-value for paired samples.
///
/// Exact null distribution of the positive rank sum (a count DP over the
/// doubled ranks, so ties are handled exactly) for up to `exact_max_n`
/// non-zero differences; otherwise a normal approximation with
/// tie-corrected variance and continuity correction.
inline double wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, const WilcoxonOptions& opt = {}) {
  if (a.size() != b.size()) throw DomainError("wilcoxon_signed_rank: samples differ in length");
  const auto sr = detail::signed_ranks(a, b, opt.zero_method);
  const std::size_t n = sr.doubled_ranks.size();
  if (n == 0) return 1.0;
  long w2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += sr.doubled_ranks[i];
    if (sr.positive[i]) w2 += sr.doubled_ranks[i];
  }
  if (n <= static_cast<std::size_t>(opt.exact_max_n)) {
    std::vector<std::uint64_t> count(static_cast<std::size_t>(total2) + 1, 0);
    count[0] = 1;
    long reach = 0;
    for (long r : sr.doubled_ranks) {
      for (long s = reach; s >= 0; --s)
        if (count[static_cast<std::size_t>(s)]) count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
      reach += r;
    }
    std::uint64_t lower = 0, upper = 0;
    for (long s = 0; s <= total2; ++s) {
      if (s <= w2) lower += count[static_cast<std::size_t>(s)];
      if (s >= w2) upper += count[static_cast<std::size_t>(s)];
    }
    const double patterns = std::ldexp(1.0, static_cast<int>(n));
    return std::min(1.0, 2.0 * static_cast<double>(std::min(lower, upper)) / patterns);
  }
  double mean = 0.0, var = 0.0;
  for (long r : sr.doubled_ranks) {
    mean += r / 4.0;  // E[W+] = sum(rank) / 2
    var += static_cast<double>(r) * r / 16.0;  // Var[W+] = sum(rank^2) / 4
  }
  const double w = w2 / 2.0;
  const double z = (std::abs(w - mean) - 0.5) / std::sqrt(var);
  if (z <= 0.0) return 1.0;
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

/// Holm step-down adjustment, returned in input order.
inline std::vector<double> holm_adjust(std::span<const double> p) {
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("holm_adjust: p-value outside [0, 1]");
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> adj(m);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    running = std::max(running, std::min(1.0, static_cast<double>(m - i) * p[order[i]]));
    adj[order[i]] = running;
  }
  return adj;
}

struct PairwiseComparison {
  std::string method_a, method_b;
  double wilcoxon_p = 1.0;
  double holm_p = 1.0;
  bool significant = false;
};

struct StatReport {
  double alpha = 0.05;
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  std::vector<double> avg_ranks;
  double friedman_stat = 0.0;
  double friedman_p = 1.0;
  std::vector<PairwiseComparison> pairwise;
  std::vector<std::vector<std::string>> cliques;
};

/// Maximal runs of methods, contiguous in average-rank order, whose members
/// are pairwise not significantly different. Single methods are not listed.
inline std::vector<std::vector<std::string>> cd_cliques(const std::vector<std::string>& methods,
                                                        const std::vector<double>& avg_ranks,
                                                        const std::vector<PairwiseComparison>& pairs) {
  std::vector<std::size_t> order(methods.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return avg_ranks[a] < avg_ranks[b]; });
  std::map<std::pair<std::string, std::string>, bool> sig;
  for (const auto& p : pairs) sig[{p.method_a, p.method_b}] = sig[{p.method_b, p.method_a}] = p.significant;
  auto same = [&](std::size_t i, std::size_t j) {
    const auto it = sig.find({methods[order[i]], methods[order[j]]});
    return it != sig.end() && !it->second;
  };
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::size_t j = i;
    while (j + 1 < order.size()) {
      bool ok = true;
      for (std::size_t t = i; t <= j && ok; ++t) ok = same(t, j + 1);
      if (!ok) break;
      ++j;
    }
    if (j > i) runs.emplace_back(i, j);
  }
  std::vector<std::vector<std::string>> out;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    bool contained = false;
    for (std::size_t s = 0; s < runs.size() && !contained; ++s)
      contained = s != r && runs[s].first <= runs[r].first && runs[r].second <= runs[s].second;
    if (contained) continue;
    std::vector<std::string> c;
    for (std::size_t t = runs[r].first; t <= runs[r].second; ++t) c.push_back(methods[order[t]]);
    out.push_back(std::move(c));
  }
  return out;
}

/// Friedman test, all-pairs Wilcoxon signed-rank tests on the per-dataset
/// scores with Holm adjustment, and critical-difference cliques.
inline StatReport analyze(const RankTable& t, double alpha = 0.05, const WilcoxonOptions& wopt = {}) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  StatReport rep;
  rep.alpha = alpha;
  rep.methods = t.methods;
  rep.datasets = t.datasets;
  rep.avg_ranks = t.average();
  if (t.datasets.size() >= 2 && t.methods.size() >= 2) {
    const auto f = friedman_test(t);
    rep.friedman_stat = f.statistic;
    rep.friedman_p = f.p_value;
  }
  std::vector<double> raw;
  for (std::size_t i = 0; i < t.methods.size(); ++i)
    for (std::size_t j = i + 1; j < t.methods.size(); ++j) {
      std::vector<double> a, b;
      for (const auto& row : t.scores) a.push_back(row[i]), b.push_back(row[j]);
      PairwiseComparison pc{t.methods[i], t.methods[j], wilcoxon_signed_rank(a, b, wopt)};
      raw.push_back(pc.wilcoxon_p);
      rep.pairwise.push_back(pc);
    }
  const auto adj = holm_adjust(raw);
  for (std::size_t k = 0; k < adj.size(); ++k) {
    rep.pairwise[k].holm_p = adj[k];
    rep.pairwise[k].significant = adj[k] < alpha;
  }
  rep.cliques = cd_cliques(rep.methods, rep.avg_ranks, rep.pairwise);
  return rep;
}

inline nlohmann::ordered_json to_json(const StatReport& r) {
  nlohmann::ordered_json j;
  j["alpha"] = r.alpha;
  j["num_datasets"] = r.datasets.size();
  j["methods"] = r.methods;
  j["avg_ranks"] = r.avg_ranks;
  j["friedman"] = {{"statistic", r.friedman_stat}, {"p_value", r.friedman_p}, {"df", r.methods.size() - 1}};
  j["pairwise"] = nlohmann::ordered_json::array();
  for (const auto& p : r.pairwise)
    j["pairwise"].push_back({{"method_a", p.method_a},
                             {"method_b", p.method_b},
                             {"wilcoxon_p", p.wilcoxon_p},
                             {"holm_adjusted_p", p.holm_p},
                             {"significant", p.significant}});
  j["cliques"] = r.cliques;
  return j;
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string fmt(double v, int digits = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

}  // namespace detail

/// Critical-difference diagram: rank axis with rank 1 at the right, one
/// labeled marker per method and a bar under every clique.
inline std::string cd_diagram_svg(const StatReport& r) {
  const std::size_t k = r.methods.size();
  if (k < 2) throw DomainError("a critical difference diagram needs at least 2 methods");
  const double width = 800, left = 160, right = 640, axis_y = 60, row_h = 22, bar_gap = 10;
  const std::size_t half = (k + 1) / 2;
  const double bars_y = axis_y + 18;
  const double labels_y = bars_y + static_cast<double>(r.cliques.size()) * bar_gap + 16;
  const double height = labels_y + static_cast<double>(half) * row_h + 20;
  auto x = [&](double rank) { return right - (rank - 1.0) / static_cast<double>(k - 1) * (right - left); };

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r.avg_ranks[a] < r.avg_ranks[b]; });

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << detail::fmt(height, 0)
    << "\" viewBox=\"0 0 " << width << " " << detail::fmt(height, 0) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "  <title>Critical difference diagram (alpha = " << r.alpha << ")</title>\n";
  s << "  <g id=\"axis\" stroke=\"black\">\n";
  s << "    <line x1=\"" << left << "\" y1=\"" << axis_y << "\" x2=\"" << right << "\" y2=\"" << axis_y << "\"/>\n";
  for (std::size_t t = 1; t <= k; ++t)
    s << "    <line x1=\"" << detail::fmt(x(static_cast<double>(t))) << "\" y1=\"" << axis_y - 6 << "\" x2=\""
      << detail::fmt(x(static_cast<double>(t))) << "\" y2=\"" << axis_y << "\"/>\n";
  s << "  </g>\n  <g id=\"ticks\" text-anchor=\"middle\">\n";
  for (std::size_t t = 1; t <= k; ++t)
    s << "    <text x=\"" << detail::fmt(x(static_cast<double>(t))) << "\" y=\"" << axis_y - 10 << "\">" << t << "</text>\n";
  s << "  </g>\n  <g id=\"cliques\" stroke=\"black\" stroke-width=\"3\">\n";
  for (std::size_t c = 0; c < r.cliques.size(); ++c) {
    double lo = 1e300, hi = -1e300;
    for (const auto& name : r.cliques[c]) {
      const auto idx = static_cast<std::size_t>(std::find(r.methods.begin(), r.methods.end(), name) - r.methods.begin());
      lo = std::min(lo, r.avg_ranks[idx]);
      hi = std::max(hi, r.avg_ranks[idx]);
    }
    const double y = bars_y + static_cast<double>(c) * bar_gap;
    s << "    <line x1=\"" << detail::fmt(x(hi) - 3) << "\" y1=\"" << detail::fmt(y) << "\" x2=\"" << detail::fmt(x(lo) + 3)
      << "\" y2=\"" << detail::fmt(y) << "\"/>\n";
  }
  s << "  </g>\n  <g id=\"methods\">\n";
  for (std::size_t t = 0; t < k; ++t) {
    const std::size_t m = order[t];
    const bool best_half = t < half;
    const std::size_t row = best_half ? t : k - 1 - t;
    const double y = labels_y + static_cast<double>(row) * row_h;
    const double mx = x(r.avg_ranks[m]);
    const double end = best_half ? right + 20 : left - 20;
    s << "    <polyline fill=\"none\" stroke=\"black\" points=\"" << detail::fmt(mx) << "," << axis_y << " " << detail::fmt(mx)
      << "," << detail::fmt(y) << " " << detail::fmt(end) << "," << detail::fmt(y) << "\"/>\n";
    s << "    <text x=\"" << detail::fmt(best_half ? end + 4 : end - 4) << "\" y=\"" << detail::fmt(y + 4) << "\" text-anchor=\""
      << (best_half ? "start" : "end") << "\">" << detail::xml_escape(r.methods[m]) << " ("
      << detail::fmt(r.avg_ranks[m]) << ")</text>\n";
  }
  s << "  </g>\n</svg>\n";
  return s.str();
}

}  // namespace hcts
