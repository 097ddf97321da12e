// Command-line front end: pairwise scoring, HAL building, featurization,
// optimization runs, and report rendering over one TOML config.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stsim/config.hpp"
#include "stsim/features.hpp"
#include "stsim/pipeline.hpp"
#include "stsim/vector_space.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

struct SimArgs {
  std::string algo, a, b;
  std::string config;
};

struct HalArgs {
  std::string corpus, out;
  int window = 0;
  int min_count = 2;
  std::size_t max_vocab = 50000;
};

struct FeaturizeArgs {
  std::string config, dataset, out;
  bool lemmatized = false;
  int threads = 1;
};

struct OptimizeArgs {
  std::string config, model, dataset;
  bool lemmatized = false;
  bool baselines = true;
  int threads = 1;
};

struct ReportArgs {
  std::string runs_dir;
  std::string format = "markdown";
  std::string out;
};

/// A dataset argument names either a [datasets] entry or a file on disk.
std::filesystem::path resolve_dataset(const stsim::RunConfig& cfg, const std::string& name) {
  if (auto it = cfg.datasets.find(name); it != cfg.datasets.end()) return it->second;
  std::filesystem::path p(name);
  if (std::filesystem::exists(p)) return p;
  throw stsim::ConfigError("dataset '" + name +
                           "' is neither a [datasets] entry nor an existing file");
}

std::string dataset_label(const stsim::RunConfig& cfg, const std::string& name) {
  if (cfg.datasets.count(name)) return name;
  return std::filesystem::path(name).stem().string();
}

int cmd_sim(const SimArgs& args) {
  stsim::LoadedResources owned;
  if (!args.config.empty()) owned = stsim::load_resources(stsim::RunConfig::load(args.config));
  stsim::Resources res = owned.view();

  std::vector<stsim::FeatureSpec> specs = stsim::default_registry(res);
  for (const auto& spec : specs) {
    for (std::size_t c = 0; c < spec.configs.size(); ++c) {
      if (spec.column_id(c) != args.algo) continue;
      stsim::SentencePair pair;
      pair.id = "cli";
      pair.a = stsim::make_sentence(args.a);
      pair.b = stsim::make_sentence(args.b);
      stsim::PairContext ctx(pair, false);
      stsim::SimScore score = spec.configs[c].score(ctx, res);
      if (score.degenerate)
        std::fprintf(stderr, "note: score is degenerate (out-of-vocabulary input)\n");
      std::printf("%.4f\n", score.value);
      return kOk;
    }
  }

  std::fprintf(stderr, "unknown algorithm '%s'; valid ids:\n", args.algo.c_str());
  for (const auto& spec : specs)
    for (std::size_t c = 0; c < spec.configs.size(); ++c)
      std::fprintf(stderr, "  %s\n", spec.column_id(c).c_str());
  if (args.config.empty())
    std::fprintf(stderr, "(resource-backed algorithms need --config)\n");
  return kUsageError;
}

int cmd_hal_build(const HalArgs& args) {
  stsim::CooccurrenceModel model =
      stsim::build_hal(args.corpus, args.window, args.min_count, args.max_vocab);
  model.save(args.out);
  std::printf("HAL model: %zu tokens, window %d\nwrote %s\n", model.tokens.size(), model.window,
              args.out.c_str());
  return kOk;
}

int cmd_featurize(const FeaturizeArgs& args) {
  stsim::RunConfig cfg = stsim::RunConfig::load(args.config);
  std::filesystem::path data_path = resolve_dataset(cfg, args.dataset);

  stsim::LoadedResources owned = stsim::load_resources(cfg);
  stsim::Resources res = owned.view();
  stsim::Dataset dataset = stsim::load_dataset(data_path, cfg.dataset_format, cfg.scale_max,
                                               dataset_label(cfg, args.dataset));
  if (args.lemmatized) {
    if (!owned.lemmas)
      throw stsim::ConfigError("--lemmatized requires [resources].lemma_map in the config");
    stsim::lemmatize_dataset(dataset, *owned.lemmas);
  }

  std::vector<stsim::FeatureSpec> specs = stsim::default_registry(res);
  std::optional<stsim::FeatureStore> store;
  if (!cfg.store_dir.empty()) store.emplace(cfg.store_dir);
  stsim::FeatureMatrix matrix = stsim::build_matrix(dataset, specs, args.lemmatized, res,
                                                    store ? &*store : nullptr, args.threads);
  stsim::export_csv(matrix, args.out);
  std::printf("wrote %zu rows x %zu feature columns to %s\n", matrix.values.rows,
              matrix.values.cols, args.out.c_str());
  return kOk;
}

int cmd_optimize(const OptimizeArgs& args) {
  stsim::RunConfig cfg = stsim::RunConfig::load(args.config);
  stsim::ModelKind::Family family = stsim::ModelKind::family_from(args.model);
  std::filesystem::path data_path = resolve_dataset(cfg, args.dataset);

  stsim::RunOutcome outcome =
      stsim::run_optimization(cfg, family, dataset_label(cfg, args.dataset), data_path,
                              args.lemmatized, args.threads, args.baselines);

  std::printf("model: %s\n", outcome.kind.describe().c_str());
  std::printf("selected features: %zu\n", outcome.best.selected.size());
  std::printf("best cv fitness: %.6f\n", outcome.abc.best_fitness);
  if (outcome.entry.undefined)
    std::printf("holdout pearson: undefined\n");
  else
    std::printf("holdout pearson: %.6f\n", outcome.entry.pearson);
  std::printf("run artifact: %s\n", outcome.run_dir.c_str());
  return kOk;
}

int cmd_report(const ReportArgs& args) {
  stsim::ReportFormat format = stsim::report_format_from(args.format);
  std::vector<stsim::ReportEntry> entries = stsim::collect_entries(args.runs_dir);
  std::string text = stsim::render_report(entries, format);
  if (args.out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    std::ofstream out(args.out);
    if (!out) throw std::runtime_error("cannot write report: " + args.out);
    out << text;
    std::printf("wrote %s\n", args.out.c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantic textual similarity toolkit"};
  app.require_subcommand(1);

  SimArgs sim_args;
  CLI::App* sim = app.add_subcommand("sim", "score one sentence pair with one algorithm");
  sim->add_option("--algo", sim_args.algo, "feature column id, e.g. levenshtein")->required();
  sim->add_option("--a", sim_args.a, "first sentence")->required();
  sim->add_option("--b", sim_args.b, "second sentence")->required();
  sim->add_option("--config", sim_args.config, "config providing optional resources");

  HalArgs hal_args;
  CLI::App* hal = app.add_subcommand("hal-build", "build a co-occurrence vector model");
  hal->add_option("--corpus", hal_args.corpus, "plain text corpus, one context per line")
      ->required();
  hal->add_option("--out", hal_args.out, "output model path")->required();
  hal->add_option("--window", hal_args.window, "co-occurrence window size")->required();
  hal->add_option("--min-count", hal_args.min_count, "minimum token frequency");
  hal->add_option("--max-vocab", hal_args.max_vocab, "vocabulary size cap");

  FeaturizeArgs feat_args;
  CLI::App* feat = app.add_subcommand("featurize", "export the feature matrix as CSV");
  feat->add_option("--config", feat_args.config, "run config")->required();
  feat->add_option("--dataset", feat_args.dataset, "dataset name or path")->required();
  feat->add_option("--out", feat_args.out, "output CSV path")->required();
  feat->add_flag("--lemmatized", feat_args.lemmatized, "score lemmatized word tokens");
  feat->add_option("--threads", feat_args.threads, "worker threads");

  OptimizeArgs opt_args;
  CLI::App* opt = app.add_subcommand("optimize", "run feature selection and model tuning");
  opt->add_option("--config", opt_args.config, "run config")->required();
  opt->add_option("--model", opt_args.model, "linear, ridge, tree, forest, or boosting")
      ->required();
  opt->add_option("--dataset", opt_args.dataset, "dataset name or path")->required();
  opt->add_flag("--lemmatized", opt_args.lemmatized, "score lemmatized word tokens");
  opt->add_flag("--baselines,!--no-baselines", opt_args.baselines,
                "include per-feature holdout baselines in the artifact");
  opt->add_option("--threads", opt_args.threads, "worker threads");

  ReportArgs rep_args;
  CLI::App* rep = app.add_subcommand("report", "render a table from run artifacts");
  rep->add_option("--runs-dir", rep_args.runs_dir, "directory holding run artifacts")->required();
  rep->add_option("--format", rep_args.format, "markdown or csv");
  rep->add_option("--out", rep_args.out, "write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*sim) return cmd_sim(sim_args);
    if (*hal) return cmd_hal_build(hal_args);
    if (*feat) return cmd_featurize(feat_args);
    if (*opt) return cmd_optimize(opt_args);
    if (*rep) return cmd_report(rep_args);
  } catch (const stsim::StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  } catch (const stsim::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
  return kUsageError;
}
