#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "classifier.hpp"
#include "dataset.hpp"
#include "dissim.hpp"
#include "error.hpp"
#include "hc_engine.hpp"
#include "hierarchy.hpp"
#include "parallel.hpp"
#include "stats.hpp"
#include "synthgen.hpp"

namespace hcts {

enum class Mode { Flat, Hierarchical };

inline std::string_view to_string(Mode m) { return m == Mode::Flat ? "fc" : "hc"; }

inline Mode parse_mode(std::string_view s) {
  if (s == "fc") return Mode::Flat;
  if (s == "hc") return Mode::Hierarchical;
  throw DomainError("unknown mode '" + std::string(s) + "' (expected hc or fc)");
}

/// "svm-fc", "minirocket-hc-tsd", ...
inline std::string method_name(ClassifierKind k, Mode mode, Measure measure) {
  std::string s = std::string(to_string(k)) + "-" + std::string(to_string(mode));
  if (mode == Mode::Hierarchical) s += "-" + std::string(to_string(measure));
  return s;
}

/// Benchmark grid and its settings, read from a flat `key = value` file.
struct RunConfig {
  std::vector<std::string> datasets;
  std::vector<Measure> measures{Measure::JSD, Measure::TSD, Measure::CBD};
  std::vector<ClassifierKind> classifiers{ClassifierKind::MiniRocketStyle, ClassifierKind::IntervalForest,
                                          ClassifierKind::LinearSVM};
  std::vector<Mode> modes{Mode::Hierarchical, Mode::Flat};
  int folds = 5;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string output = "out";
  std::size_t jobs = default_jobs();
  bool timing = false;  // record wall-clock times; off keeps results byte-reproducible
  int num_features = 512;
  int num_estimators = 50;
  double regularization = 1.0;
  DissimConfig dissim{};
};

inline void validate(const RunConfig& c) {
  if (c.datasets.empty()) throw DomainError("config: no datasets selected");
  if (c.classifiers.empty()) throw DomainError("config: no classifiers selected");
  if (c.modes.empty()) throw DomainError("config: no modes selected");
  const bool hc = std::find(c.modes.begin(), c.modes.end(), Mode::Hierarchical) != c.modes.end();
  if (hc && c.measures.empty()) throw DomainError("config: hierarchical mode needs at least one measure");
  if (c.folds < 2) throw DomainError("config: folds must be at least 2");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw DomainError("config: alpha must lie in (0, 1)");
}

namespace detail {

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (auto t = trim(cur); !t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (auto t = trim(cur); !t.empty()) out.push_back(t);
  return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view s, Parse parse) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) {
    T v = parse(item);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) h = (h ^ ch) * 0x100000001b3ULL;
  return h;
}

}  // namespace detail

/// Parses `key = value` lines; `#` starts a comment, list values are
/// comma-separated.
inline RunConfig parse_run_config(std::string_view text) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    auto number = [&](const std::string& v) { return detail::parse_double(v, static_cast<std::size_t>(lineno), 2, "config"); };
    auto integer = [&](const std::string& v) {
      const double d = number(v);
      if (d != std::floor(d)) throw ParseError("config line " + std::to_string(lineno) + ": '" + key + "' must be an integer");
      return static_cast<long long>(d);
    };
    if (key == "datasets") c.datasets = detail::split_list(value);
    else if (key == "measures") c.measures = detail::parse_list<Measure>(value, parse_measure);
    else if (key == "classifiers") c.classifiers = detail::parse_list<ClassifierKind>(value, parse_classifier_kind);
    else if (key == "modes") c.modes = detail::parse_list<Mode>(value, parse_mode);
    else if (key == "folds") c.folds = static_cast<int>(integer(value));
    else if (key == "alpha") c.alpha = number(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "output") c.output = value;
    else if (key == "jobs") c.jobs = static_cast<std::size_t>(std::max(1LL, integer(value)));
    else if (key == "timing") c.timing = value == "true" || value == "on" || value == "1";
    else if (key == "num_features") c.num_features = static_cast<int>(integer(value));
    else if (key == "num_estimators") c.num_estimators = static_cast<int>(integer(value));
    else if (key == "regularization") c.regularization = number(value);
    else if (key == "tsd_references") c.dissim.tsd_references = static_cast<int>(integer(value));
    else if (key == "cbd_folds") c.dissim.cbd_folds = static_cast<int>(integer(value));
    else if (key == "jsd_bins") c.dissim.jsd.bins = static_cast<int>(integer(value));
    else throw FormatError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  validate(c);
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

/// Resolves one dataset entry and z-normalizes every series:
///   synth:separable[:seed]   planted-hierarchy preset
///   a.tsv+b.tsv              files concatenated (train + test)
///   DIR                      DIR/<name>_TRAIN.tsv and DIR/<name>_TEST.tsv
///   file.tsv                 a single file
/// Relative paths are resolved against `base`.
inline TimeSeriesDataset load_dataset_source(const std::string& entry, const std::filesystem::path& base = {}) {
  namespace fs = std::filesystem;
  if (entry.starts_with("synth:")) {
    const auto rest = entry.substr(6);
    const auto colon = rest.find(':');
    const std::string preset = rest.substr(0, colon);
    if (preset != "separable") throw DomainError("unknown synthetic preset '" + preset + "'");
    const std::uint64_t seed = colon == std::string::npos ? 0 : std::stoull(rest.substr(colon + 1));
    auto ds = generate_planted(separable_preset(seed)).dataset;
    znormalize_rows(ds);
    return ds;
  }
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() || base.empty() ? fs::path(p) : base / p; };
  std::vector<fs::path> files;
  if (entry.find('+') != std::string::npos) {
    std::string cur;
    for (char ch : entry + "+") {
      if (ch == '+') {
        if (!cur.empty()) files.push_back(resolve(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
  } else if (const auto p = resolve(entry); fs::is_directory(p)) {
    const auto name = p.filename().empty() ? p.parent_path().filename().string() : p.filename().string();
    for (const char* split : {"_TRAIN", "_TEST"})
      for (const char* ext : {".tsv", ".txt", ""})
        if (auto f = p / (name + split + ext); fs::is_regular_file(f)) {
          files.push_back(f);
          break;
        }
    if (files.empty()) throw FormatError("no " + name + "_TRAIN/_TEST files in '" + p.string() + "'");
  } else {
    files.push_back(p);
  }
  return load_ucr_files(files, {.min_classes = 3, .znormalize = true});
}

using ProgressFn = std::function<void(const std::string&)>;

/// Runs the dataset x classifier x mode x measure grid under stratified
/// k-fold cross-validation. Hierarchies are learned from each training
/// split only. Records come back sorted by dataset (input order), method
/// name and fold whatever the scheduling; failed cells carry an error.
inline std::vector<FoldResult> run_benchmark(const RunConfig& cfg, const std::vector<TimeSeriesDataset>& datasets,
                                             const ProgressFn& progress = {}) {
  validate(cfg);
  using Clock = std::chrono::steady_clock;
  auto ms = [](Clock::duration d) { return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(d).count()); };
  const bool want_fc = std::find(cfg.modes.begin(), cfg.modes.end(), Mode::Flat) != cfg.modes.end();
  const bool want_hc = std::find(cfg.modes.begin(), cfg.modes.end(), Mode::Hierarchical) != cfg.modes.end();

  struct Unit {
    std::size_t dataset;
    int fold;
  };
  std::vector<Unit> units;
  std::vector<FoldPlan> plans;
  std::vector<std::string> plan_errors(datasets.size());
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    try {
      plans.push_back(stratified_kfold(datasets[d], cfg.folds, derive_seed(cfg.seed, {detail::fnv1a(datasets[d].name)})));
    } catch (const Error& e) {
      plans.emplace_back();
      plan_errors[d] = e.what();
    }
    for (int f = 0; f < cfg.folds; ++f) units.push_back({d, f});
  }

  std::vector<std::vector<FoldResult>> per_unit(units.size());
  std::mutex progress_mutex;
  auto report = [&](const std::string& msg) {
    if (!progress) return;
    std::lock_guard lock(progress_mutex);
    progress(msg);
  };

  parallel_for(units.size(), cfg.jobs, [&](std::size_t u) {
    const auto [d, fold] = units[u];
    const auto& ds = datasets[d];
    auto& out = per_unit[u];
    auto record = [&](const std::string& method, double f1, long train, long predict, std::string error) {
      out.push_back({ds.name, method, fold, f1, cfg.timing ? train : 0, cfg.timing ? predict : 0, std::move(error)});
      report(ds.name + " fold " + std::to_string(fold) + " " + method +
             (out.back().ok() ? " f1=" + detail::fmt(f1, 4) : " FAILED: " + out.back().error));
    };
    auto fail_all = [&](const std::string& why) {
      for (auto k : cfg.classifiers) {
        if (want_fc) record(method_name(k, Mode::Flat, Measure::JSD), NAN, 0, 0, why);
        if (want_hc)
          for (auto m : cfg.measures) record(method_name(k, Mode::Hierarchical, m), NAN, 0, 0, why);
      }
    };
    if (!plan_errors[d].empty()) return fail_all(plan_errors[d]);
    const auto train = subset(ds, plans[d].train_indices(fold));
    const auto test = subset(ds, plans[d].test_indices(fold));
    const std::uint64_t cell_seed = derive_seed(cfg.seed, {detail::fnv1a(ds.name), static_cast<std::uint64_t>(fold)});

    auto spec_for = [&](ClassifierKind k) {
      ClassifierSpec s;
      s.kind = k;
      s.num_features = cfg.num_features;
      s.num_estimators = cfg.num_estimators;
      s.regularization = cfg.regularization;
      s.seed = cell_seed;
      return s;
    };

    if (want_fc)
      for (auto k : cfg.classifiers) {
        const auto name = method_name(k, Mode::Flat, Measure::JSD);
        try {
          const auto t0 = Clock::now();
          const auto model = train_flat(spec_for(k), train);
          const auto t1 = Clock::now();
          const auto pred = model.predict(test.values);
          const auto t2 = Clock::now();
          record(name, f1_macro(test.labels, pred, ds.num_classes), ms(t1 - t0), ms(t2 - t1), "");
        } catch (const std::exception& e) {
          record(name, NAN, 0, 0, e.what());
        }
      }
    if (want_hc)
      for (auto m : cfg.measures) {
        std::optional<HierarchyNode> tree;
        std::string tree_error;
        long tree_ms = 0;
        try {
          const auto t0 = Clock::now();
          DissimConfig dc = cfg.dissim;
          dc.seed = derive_seed(cell_seed, {0x646973ULL, static_cast<std::uint64_t>(m)});
          dc.jobs = 1;
          tree = build_hierarchy(build_dissimilarity(train, m, dc));
          tree_ms = ms(Clock::now() - t0);
        } catch (const std::exception& e) {
          tree_error = e.what();
        }
        for (auto k : cfg.classifiers) {
          const auto name = method_name(k, Mode::Hierarchical, m);
          if (!tree) {
            record(name, NAN, 0, 0, tree_error);
            continue;
          }
          try {
            const auto t0 = Clock::now();
            const auto model = train_lcn(*tree, spec_for(k), train);
            const auto t1 = Clock::now();
            const auto pred = predict_lcn(model, test.values);
            const auto t2 = Clock::now();
            record(name, f1_macro(test.labels, pred, ds.num_classes), tree_ms + ms(t1 - t0), ms(t2 - t1), "");
          } catch (const std::exception& e) {
            record(name, NAN, 0, 0, e.what());
          }
        }
      }
  });

  std::vector<FoldResult> all;
  for (auto& v : per_unit) all.insert(all.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  auto rank_of = [&](const std::string& name) {
    for (std::size_t d = 0; d < datasets.size(); ++d)
      if (datasets[d].name == name) return d;
    return datasets.size();
  };
  std::stable_sort(all.begin(), all.end(), [&](const FoldResult& a, const FoldResult& b) {
    const auto ra = rank_of(a.dataset), rb = rank_of(b.dataset);
    if (ra != rb) return ra < rb;
    if (a.method != b.method) return a.method < b.method;
    return a.fold < b.fold;
  });
  return all;
}

// ---------------------------------------------------------------------------
// Results CSV: dataset,method,fold,f1_macro,train_ms,predict_ms

inline constexpr const char* kResultsHeader = "dataset,method,fold,f1_macro,train_ms,predict_ms";

inline void write_results_csv(std::span<const FoldResult> results, std::ostream& out) {
  out << kResultsHeader << '\n';
  for (const auto& r : results) {
    std::string name = r.dataset;
    std::replace(name.begin(), name.end(), ',', '_');
    out << name << ',' << r.method << ',' << r.fold << ',';
    if (r.ok() && std::isfinite(r.f1_macro)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", r.f1_macro);
      out << buf;
    } else {
      out << "error";
    }
    out << ',' << r.train_ms << ',' << r.predict_ms << '\n';
  }
}

inline void write_results_csv(std::span<const FoldResult> results, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  write_results_csv(results, out);
}

inline std::vector<FoldResult> read_results_csv(std::istream& in, const std::string& source = "results") {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kResultsHeader)
    throw FormatError(source + ":1: expected header '" + std::string(kResultsHeader) + "'");
  std::vector<FoldResult> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_list(line);
    if (f.size() != 6) throw FormatError(source + ":" + std::to_string(lineno) + ": expected 6 fields");
    FoldResult r;
    r.dataset = f[0];
    r.method = f[1];
    r.fold = static_cast<int>(detail::parse_double(f[2], lineno, 3, source));
    if (f[3] == "error") {
      r.f1_macro = NAN;
      r.error = "error";
    } else {
      r.f1_macro = detail::parse_double(f[3], lineno, 4, source);
    }
    r.train_ms = static_cast<long>(detail::parse_double(f[4], lineno, 5, source));
    r.predict_ms = static_cast<long>(detail::parse_double(f[5], lineno, 6, source));
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<FoldResult> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return read_results_csv(in, path.string());
}

/// Per-dataset ranks: `dataset,<method>...`.
inline void write_ranks_csv(const RankTable& t, std::ostream& out) {
  out << "dataset";
  for (const auto& m : t.methods) out << ',' << m;
  out << '\n';
  for (std::size_t d = 0; d < t.datasets.size(); ++d) {
    out << t.datasets[d];
    for (double r : t.ranks[d]) out << ',' << detail::format_double(r);
    out << '\n';
  }
}

}  // namespace hcts
