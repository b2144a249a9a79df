// Command-line workbench: validate | dissim | hierarchy | bench | stats | synth

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <hcts/hcts.hpp>

namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

hcts::TimeSeriesDataset load_inputs(const std::vector<std::string>& inputs) {
  if (inputs.size() == 1) return hcts::load_dataset_source(inputs.front());
  std::vector<fs::path> files(inputs.begin(), inputs.end());
  return hcts::load_ucr_files(files, {.min_classes = 3, .znormalize = true});
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hcts::FormatError("cannot write '" + path.string() + "'");
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw hcts::FormatError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_validate(const std::vector<std::string>& inputs) {
  const auto ds = load_inputs(inputs);
  std::cout << ds.name << ": c=" << ds.num_classes << " N=" << ds.size() << " L=" << ds.length() << "\n";
  const auto counts = hcts::class_counts(ds);
  for (std::size_t k = 0; k < counts.size(); ++k)
    std::cout << "  class " << k << " (label " << ds.class_names[k] << "): " << counts[k] << "\n";
  return kOk;
}

int cmd_dissim(const std::vector<std::string>& inputs, const std::string& measure, std::uint64_t seed, int bins,
               bool sqrt_metric, std::size_t jobs, const fs::path& out) {
  const auto ds = load_inputs(inputs);
  hcts::DissimConfig cfg;
  cfg.seed = seed;
  cfg.jobs = jobs;
  cfg.jsd.bins = bins;
  cfg.jsd.sqrt_metric = sqrt_metric;
  const auto d = hcts::build_dissimilarity(ds, hcts::parse_measure(measure), cfg);
  hcts::check_invariants(d);
  write_text(out, hcts::to_json(d).dump(2) + "\n");
  std::cerr << "wrote " << out.string() << " (" << d.size() << "x" << d.size() << ", " << hcts::to_string(d.measure) << ")\n";
  return kOk;
}

int cmd_hierarchy(const fs::path& matrix, const fs::path& out, const std::string& newick) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(read_text(matrix));
  } catch (const nlohmann::json::parse_error& e) {
    throw hcts::ParseError(matrix.string() + ": invalid JSON: " + e.what());
  }
  const auto tree = hcts::build_hierarchy(hcts::dissimilarity_from_json(j));
  write_text(out, hcts::tree_to_json(tree) + "\n");
  if (!newick.empty()) write_text(newick, hcts::tree_to_newick(tree) + "\n");
  std::cerr << "wrote " << out.string() << " (" << hcts::count_leaves(tree) << " leaves)\n";
  return kOk;
}

int cmd_bench(const fs::path& config_path, const std::string& out_override, std::size_t jobs_override) {
  auto cfg = hcts::load_run_config(config_path);
  if (!out_override.empty()) cfg.output = out_override;
  if (jobs_override > 0) cfg.jobs = jobs_override;
  std::vector<hcts::TimeSeriesDataset> datasets;
  std::vector<std::string> failed;
  for (const auto& entry : cfg.datasets) {
    try {
      datasets.push_back(hcts::load_dataset_source(entry, config_path.parent_path()));
      std::cerr << "loaded " << datasets.back().name << ": c=" << datasets.back().num_classes
                << " N=" << datasets.back().size() << " L=" << datasets.back().length() << "\n";
    } catch (const hcts::Error& e) {
      std::cerr << "skipping dataset '" << entry << "': " << e.what() << "\n";
      failed.push_back(entry);
    }
  }
  const auto results = hcts::run_benchmark(cfg, datasets, [](const std::string& msg) { std::cerr << msg << "\n"; });
  const fs::path out_dir(cfg.output);
  fs::create_directories(out_dir);
  hcts::write_results_csv(results, out_dir / "results.csv");
  std::size_t ok = 0;
  for (const auto& r : results) ok += r.ok();
  std::cerr << "wrote " << (out_dir / "results.csv").string() << " (" << results.size() << " rows, "
            << results.size() - ok << " failed)\n";
  return ok == 0 ? kData : kOk;
}

int cmd_stats(const fs::path& results_path, double alpha, const fs::path& out_dir) {
  const auto results = hcts::read_results_csv(results_path);
  const auto table = hcts::average_ranks(results);
  const auto report = hcts::analyze(table, alpha);
  fs::create_directories(out_dir);
  std::ostringstream ranks;
  hcts::write_ranks_csv(table, ranks);
  write_text(out_dir / "ranks.csv", ranks.str());
  write_text(out_dir / "report.json", hcts::to_json(report).dump(2) + "\n");
  write_text(out_dir / "cd_diagram.svg", hcts::cd_diagram_svg(report));
  std::cout << "Friedman chi2=" << report.friedman_stat << " p=" << report.friedman_p << " (k=" << report.methods.size()
            << ", N=" << report.datasets.size() << ")\n";
  for (std::size_t m = 0; m < report.methods.size(); ++m)
    std::cout << "  " << report.methods[m] << " avg rank " << report.avg_ranks[m] << "\n";
  return kOk;
}

int cmd_synth(const fs::path& out_dir, std::uint64_t seed, int depth, int length, int samples, double sigma) {
  hcts::PlantedSpec spec = hcts::separable_preset(seed);
  if (depth != spec.depth) {
    spec.depth = depth;
    spec.level_offsets.clear();
    for (int l = 0; l < depth; ++l) spec.level_offsets.push_back(3.0 / static_cast<double>(1 << l));
  }
  spec.length = length;
  spec.samples_per_class = samples;
  spec.noise_sigma = sigma;
  const auto planted = hcts::generate_planted(spec);
  fs::create_directories(out_dir);
  const auto tsv = out_dir / (planted.dataset.name + "_TRAIN.tsv");
  hcts::write_ucr_tsv(planted.dataset, tsv);
  write_text(out_dir / (planted.dataset.name + "_tree.json"), hcts::tree_to_json(planted.tree) + "\n");
  std::cerr << "wrote " << tsv.string() << " (" << planted.dataset.num_classes << " classes, " << planted.dataset.size()
            << " series)\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned class hierarchies for time series classification"};
  app.require_subcommand(1);

  std::vector<std::string> datasets;
  std::string measure = "tsd", out, newick, config, matrix, results;
  std::uint64_t seed = 0;
  int bins = hcts::kDefaultJsdBins, depth = 3, length = 128, samples = 30;
  double alpha = 0.05, sigma = 0.25;
  std::size_t jobs = 0;
  bool sqrt_metric = false;

  auto* validate = app.add_subcommand("validate", "Load a dataset and report its shape");
  validate->add_option("--dataset,dataset", datasets, "UCR file(s), archive directory or synth:separable[:seed]")->required();

  auto* dissim = app.add_subcommand("dissim", "Compute a class dissimilarity matrix");
  dissim->add_option("--dataset", datasets, "UCR file(s), archive directory or synth preset")->required();
  dissim->add_option("--measure", measure, "jsd | tsd | cbd")->check(CLI::IsMember({"jsd", "tsd", "cbd"}));
  dissim->add_option("--seed", seed);
  dissim->add_option("--bins", bins, "histogram bins for jsd");
  dissim->add_flag("--sqrt", sqrt_metric, "report sqrt(JSD)");
  dissim->add_option("--jobs", jobs);
  dissim->add_option("--out", out, "output JSON file")->required();

  auto* hierarchy = app.add_subcommand("hierarchy", "Build a class hierarchy from a matrix");
  hierarchy->add_option("--matrix,matrix", matrix, "dissimilarity matrix JSON")->required();
  hierarchy->add_option("--out", out, "output tree JSON")->required();
  hierarchy->add_option("--newick", newick, "also write Newick text here");

  auto* bench = app.add_subcommand("bench", "Run the cross-validated benchmark grid");
  bench->add_option("--config,config", config, "key = value run configuration")->required();
  bench->add_option("--out", out, "output directory (overrides the config)");
  bench->add_option("--jobs", jobs);

  auto* stats = app.add_subcommand("stats", "Ranks, Friedman, Wilcoxon-Holm and CD diagram");
  stats->add_option("--results,results", results, "results CSV")->required();
  stats->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));
  stats->add_option("--out", out, "output directory")->required();

  auto* synth = app.add_subcommand("synth", "Write a planted-hierarchy dataset");
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--seed", seed);
  synth->add_option("--depth", depth);
  synth->add_option("--length", length);
  synth->add_option("--samples", samples);
  synth->add_option("--sigma", sigma);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(datasets);
    if (*dissim) return cmd_dissim(datasets, measure, seed, bins, sqrt_metric, jobs ? jobs : hcts::default_jobs(), out);
    if (*hierarchy) return cmd_hierarchy(matrix, out, newick);
    if (*bench) return cmd_bench(config, out, jobs);
    if (*stats) return cmd_stats(results, alpha, out);
    if (*synth) return cmd_synth(out, seed, depth, length, samples, sigma);
  } catch (const hcts::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
