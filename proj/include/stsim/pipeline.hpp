#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stsim/bee_colony.hpp"
#include "stsim/config.hpp"
#include "stsim/evaluation.hpp"
#include "stsim/features.hpp"
#include "stsim/regression.hpp"

namespace stsim {

/// Failure wrapper naming the pipeline stage that broke.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("stage " + stage + " failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

namespace detail {

template <typename F>
auto run_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace detail

/// Owns every optional resource the feature registry can reference.
struct LoadedResources {
  std::optional<LemmaMap> lemmas;
  std::optional<Taxonomy> taxonomy;
  std::optional<WordVectors> hal;
  std::optional<WordVectors> file_vectors;
  std::unique_ptr<EmbeddingClient> embedder;

  Resources view() {
    Resources r;
    if (hal) r.hal_vectors = &*hal;
    if (file_vectors) r.word_vectors = &*file_vectors;
    if (taxonomy) r.taxonomy = &*taxonomy;
    if (embedder) r.embedder = embedder.get();
    return r;
  }
};

inline LoadedResources load_resources(const RunConfig& cfg) {
  LoadedResources r;
  if (!cfg.lemma_map.empty()) r.lemmas = load_lemma_map(cfg.lemma_map);
  if (!cfg.taxonomy.empty()) r.taxonomy = Taxonomy::load(cfg.taxonomy);
  if (!cfg.hal_model.empty()) r.hal = CooccurrenceModel::load(cfg.hal_model).to_word_vectors();
  if (!cfg.word_vectors.empty()) r.file_vectors = load_word_vectors(cfg.word_vectors);
  if (cfg.embed_enabled) r.embedder = std::make_unique<EmbeddingClient>(cfg.embed);
  return r;
}

/// Row slice of a feature table, keeping specs and column layout.
inline FeatureTable table_rows(const FeatureTable& t, const std::vector<std::size_t>& rows) {
  FeatureTable out;
  out.specs = t.specs;
  out.spec_offset = t.spec_offset;
  out.column_ids = t.column_ids;
  out.values = Matrix(rows.size(), t.values.cols);
  out.degenerate.assign(rows.size() * t.values.cols, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t r = rows[i];
    for (std::size_t c = 0; c < t.values.cols; ++c) {
      out.values.at(i, c) = t.values.at(r, c);
      out.degenerate[i * t.values.cols + c] = t.degenerate[r * t.values.cols + c];
    }
    out.gold.push_back(t.gold[r]);
    out.pair_ids.push_back(t.pair_ids[r]);
  }
  return out;
}

inline nlohmann::json entry_to_json(const ReportEntry& e) {
  return nlohmann::json{{"name", e.name},           {"block", e.block},
                        {"pearson", e.pearson},     {"undefined", e.undefined},
                        {"selected", e.selected_columns}, {"hyperparams", e.hyperparams}};
}

inline ReportEntry entry_from_json(const nlohmann::json& j) {
  ReportEntry e;
  e.name = j.at("name").get<std::string>();
  e.block = j.at("block").get<std::string>();
  e.pearson = j.at("pearson").get<double>();
  e.undefined = j.at("undefined").get<bool>();
  e.selected_columns = j.at("selected").get<std::vector<std::string>>();
  e.hyperparams = j.at("hyperparams").get<std::string>();
  return e;
}

struct RunOutcome {
  std::filesystem::path run_dir;
  AbcResult abc;
  DecodedSolution best;
  ModelKind kind;
  TrainedModel model;
  ReportEntry entry;
  std::vector<ReportEntry> baselines;
  double wall_time_s = 0.0;
};

/// Per-column holdout correlations, one report row per feature column.
inline std::vector<ReportEntry> single_feature_baselines(const FeatureTable& holdout) {
  std::vector<ReportEntry> out;
  std::vector<double> column(holdout.values.rows);
  for (std::size_t s = 0; s < holdout.specs.size(); ++s) {
    for (std::size_t c = 0; c + holdout.spec_offset[s] < holdout.spec_offset[s + 1]; ++c) {
      std::size_t col = holdout.column_index(s, c);
      for (std::size_t r = 0; r < holdout.values.rows; ++r)
        column[r] = holdout.values.at(r, col);
      PearsonResult p = pearson(column, holdout.gold);
      ReportEntry e;
      e.name = holdout.column_ids[col];
      e.block = family_id(holdout.specs[s].family);
      e.pearson = p.r;
      e.undefined = p.undefined;
      out.push_back(std::move(e));
    }
  }
  return out;
}

/// Full optimization pipeline: load, split, featurize, search, finalize,
/// persist. The run artifact (run.json, model.json) depends only on config
/// and seed; wall time goes to a separate meta.json sidecar.
inline RunOutcome run_optimization(const RunConfig& cfg, ModelKind::Family family,
                                   const std::string& dataset_name,
                                   const std::filesystem::path& dataset_path, bool lemmatized,
                                   int threads = 1, bool with_baselines = false) {
  auto t0 = std::chrono::steady_clock::now();
  RunOutcome out;

  LoadedResources resources = detail::run_stage("resources", [&] { return load_resources(cfg); });

  Dataset dataset = detail::run_stage("dataset", [&] {
    Dataset d = load_dataset(dataset_path, cfg.dataset_format, cfg.scale_max, dataset_name);
    if (d.pairs.empty()) throw std::runtime_error("dataset has no pairs");
    if (lemmatized) {
      if (!resources.lemmas)
        throw std::runtime_error("lemmatized run requires a lemma map in the config");
      lemmatize_dataset(d, *resources.lemmas);
    }
    return d;
  });

  std::vector<double> gold;
  for (const auto& p : dataset.pairs) gold.push_back(p.gold);
  SplitResult split = detail::run_stage("split", [&] {
    return stratified_split(gold, cfg.train_fraction, cfg.strata_bins, derive_seed(cfg.seed, 1));
  });

  Resources res = resources.view();
  std::vector<FeatureSpec> specs = default_registry(res);
  FeatureTable train, holdout;
  detail::run_stage("features", [&] {
    std::optional<FeatureStore> store;
    if (!cfg.store_dir.empty()) store.emplace(cfg.store_dir);
    FeatureTable full =
        build_table(dataset, specs, lemmatized, res, store ? &*store : nullptr, threads);
    train = table_rows(full, split.train);
    holdout = table_rows(full, split.holdout);
    return 0;
  });

  FitnessSetup setup;
  setup.table = &train;
  setup.family = family;
  setup.space = default_search_space(family, specs);
  setup.seed = derive_seed(cfg.seed, 4);
  out.abc = detail::run_stage("optimize", [&] {
    setup.plan = stratified_kfold(train.gold, cfg.cv_folds, cfg.strata_bins,
                                  derive_seed(cfg.seed, 2));
    AbcConfig abc = cfg.abc;
    abc.seed = derive_seed(cfg.seed, 3);
    return optimize(abc, setup.space.dimension(), make_cv_fitness(setup));
  });

  detail::run_stage("finalize", [&] {
    out.best = decode(out.abc.best_position, setup.space);
    out.kind = make_kind(family, out.best.hyper);
    std::string name = out.kind.id() + (lemmatized ? "+lem" : "") + "+abc";
    out.entry = finalize(out.kind, out.best.selected, train, holdout,
                         derive_seed(cfg.seed, 5), name);
    std::vector<std::string> ids;
    for (auto [s, c] : out.best.selected) ids.push_back(train.specs[s].column_id(c));
    out.model = fit(out.kind, train.submatrix(out.best.selected), train.gold, ids,
                    derive_seed(cfg.seed, 5));
    if (with_baselines) out.baselines = single_feature_baselines(holdout);
    return 0;
  });

  detail::run_stage("artifacts", [&] {
    if (cfg.output_dir.empty())
      throw std::runtime_error("config [run].output_dir is required to write artifacts");
    std::string run_name = dataset_name + "_" + out.kind.id() + (lemmatized ? "_lem" : "") +
                           "_s" + std::to_string(cfg.seed);
    out.run_dir = cfg.output_dir / run_name;
    std::filesystem::create_directories(out.run_dir);

    nlohmann::json entries = nlohmann::json::array();
    entries.push_back(entry_to_json(out.entry));
    for (const auto& b : out.baselines) entries.push_back(entry_to_json(b));

    nlohmann::json selection = nlohmann::json::array();
    for (auto [s, c] : out.best.selected)
      selection.push_back({{"feature", specs[s].id}, {"column", specs[s].column_id(c)}});

    nlohmann::json run{{"version", 1},
                       {"dataset", dataset_name},
                       {"model_family", out.kind.id()},
                       {"lemmatized", lemmatized},
                       {"seed", cfg.seed},
                       {"abc",
                        {{"sources", cfg.abc.n_sources},
                         {"onlookers", cfg.abc.n_onlookers},
                         {"iterations", cfg.abc.iterations},
                         {"limit", cfg.abc.limit}}},
                       {"cv_folds", cfg.cv_folds},
                       {"train_fraction", cfg.train_fraction},
                       {"history", out.abc.history},
                       {"evaluations", out.abc.evaluations},
                       {"scout_resets", out.abc.scout_resets},
                       {"best_fitness", out.abc.best_fitness},
                       {"selection", selection},
                       {"model_params", out.kind.describe()},
                       {"holdout_pearson", out.entry.pearson},
                       {"holdout_undefined", out.entry.undefined},
                       {"entries", entries}};
    std::ofstream run_file(out.run_dir / "run.json");
    if (!run_file)
      throw std::runtime_error("cannot write " + (out.run_dir / "run.json").string());
    run_file << run.dump(2) << '\n';

    save_model(out.model, out.run_dir / "model.json");

    out.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json meta{{"wall_time_s", out.wall_time_s}};
    std::ofstream meta_file(out.run_dir / "meta.json");
    meta_file << meta.dump(2) << '\n';
    return 0;
  });

  return out;
}

/// Gathers report entries from every run.json below the directory.
inline std::vector<ReportEntry> collect_entries(const std::filesystem::path& runs_dir) {
  std::vector<ReportEntry> entries;
  if (!std::filesystem::exists(runs_dir)) return entries;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(runs_dir))
    if (e.is_regular_file() && e.path().filename() == "run.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    nlohmann::json j;
    try {
      in >> j;
      for (const auto& ej : j.at("entries")) entries.push_back(entry_from_json(ej));
    } catch (const std::exception& e) {
      throw std::runtime_error("bad run artifact " + f.string() + ": " + e.what());
    }
  }
  return entries;
}

}  // namespace stsim
