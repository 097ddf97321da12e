#include "stsim/pipeline.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <string>

#include "stsim/synthetic.hpp"
#include "support/util.hpp"

using stsim::RunConfig;
using stsim::RunOutcome;
using stsim::StageError;

namespace {

// Twenty pairs with word overlap roughly tracking gold, enough for a split
// into 16 train and 4 holdout rows.
std::string tiny_dataset() {
  std::string out;
  const char* words[] = {"jeden", "dva", "tri", "styri", "pat",
                         "sest",  "sedem", "osem", "devat", "desat"};
  for (int i = 0; i < 20; ++i) {
    int shared = i % 5;
    std::string a, b;
    for (int k = 0; k < 4; ++k) a += std::string(words[k]) + (k < 3 ? " " : "");
    for (int k = 0; k < shared; ++k) b += std::string(words[k]) + " ";
    for (int k = shared; k < 4; ++k) b += std::string(words[5 + k]) + (k < 3 ? " " : "");
    char line[160];
    std::snprintf(line, sizeof line, "%.1f\t%s\t%s\n", 1.0 + shared, a.c_str(), b.c_str());
    out += line;
  }
  return out;
}

RunConfig tiny_config(const testutil::TmpDir& dir) {
  RunConfig cfg;
  cfg.seed = 11;
  cfg.output_dir = dir.file("runs");
  cfg.train_fraction = 0.8;
  cfg.cv_folds = 3;
  cfg.strata_bins = 5;
  cfg.abc.n_sources = 6;
  cfg.abc.iterations = 5;
  cfg.abc.limit = 5;
  return cfg;
}

TEST(TableRows, SlicesRowsKeepingColumnsAndMetadata) {
  stsim::FeatureTable t;
  stsim::FeatureSpec spec;
  spec.id = "f";
  spec.configs.push_back({"", nullptr});
  t.specs = {spec};
  t.spec_offset = {0, 1};
  t.column_ids = {"f"};
  t.values = stsim::Matrix(4, 1);
  for (std::size_t r = 0; r < 4; ++r) t.values.at(r, 0) = 10.0 * static_cast<double>(r);
  t.degenerate = {0, 1, 0, 0};
  t.gold = {0.0, 1.0, 2.0, 3.0};
  t.pair_ids = {"a", "b", "c", "d"};

  stsim::FeatureTable s = stsim::table_rows(t, {3, 1});
  ASSERT_EQ(s.values.rows, 2u);
  EXPECT_EQ(s.values.at(0, 0), 30.0);
  EXPECT_EQ(s.values.at(1, 0), 10.0);
  EXPECT_EQ(s.degenerate[1], 1);
  EXPECT_EQ(s.gold, (std::vector<double>{3.0, 1.0}));
  EXPECT_EQ(s.pair_ids, (std::vector<std::string>{"d", "b"}));
  EXPECT_EQ(s.column_ids, t.column_ids);
}

TEST(RunOptimization, ProducesArtifactsAndReportEntries) {
  testutil::TmpDir dir;
  auto data = testutil::write_file(dir.file("pairs.tsv"), tiny_dataset());
  RunConfig cfg = tiny_config(dir);

  RunOutcome out = stsim::run_optimization(cfg, stsim::ModelKind::Family::linear, "tiny", data,
                                           false, 1, true);
  EXPECT_EQ(out.entry.block, "ml");
  EXPECT_EQ(out.entry.name, "linear+abc");
  EXPECT_FALSE(out.best.selected.empty());
  EXPECT_GT(out.abc.best_fitness, 0.0);
  EXPECT_GT(out.wall_time_s, 0.0);

  ASSERT_TRUE(std::filesystem::exists(out.run_dir / "run.json"));
  ASSERT_TRUE(std::filesystem::exists(out.run_dir / "model.json"));
  ASSERT_TRUE(std::filesystem::exists(out.run_dir / "meta.json"));
  EXPECT_EQ(out.run_dir.filename().string(), "tiny_linear_s11");

  std::ifstream in(out.run_dir / "run.json");
  nlohmann::json j;
  in >> j;
  EXPECT_EQ(j.at("dataset"), "tiny");
  EXPECT_EQ(j.at("seed"), 11);
  EXPECT_EQ(j.at("history").size(), 5u);
  // one optimized entry plus a baseline per feature column (14 resource-free
  // specs spread over 29 columns)
  EXPECT_EQ(j.at("entries").size(), 30u);

  stsim::TrainedModel model = stsim::load_model(out.run_dir / "model.json");
  EXPECT_EQ(model.feature_ids.size(), out.best.selected.size());
}

TEST(RunOptimization, SameSeedGivesByteIdenticalArtifacts) {
  testutil::TmpDir dir;
  auto data = testutil::write_file(dir.file("pairs.tsv"), tiny_dataset());
  RunConfig cfg = tiny_config(dir);

  RunOutcome a = stsim::run_optimization(cfg, stsim::ModelKind::Family::ridge, "tiny", data,
                                         false, 1, false);
  std::string run_a = testutil::read_file(a.run_dir / "run.json");
  std::string model_a = testutil::read_file(a.run_dir / "model.json");

  RunOutcome b = stsim::run_optimization(cfg, stsim::ModelKind::Family::ridge, "tiny", data,
                                         false, 1, false);
  EXPECT_EQ(a.run_dir, b.run_dir);
  EXPECT_EQ(testutil::read_file(b.run_dir / "run.json"), run_a);
  EXPECT_EQ(testutil::read_file(b.run_dir / "model.json"), model_a);

  cfg.seed = 12;
  RunOutcome c = stsim::run_optimization(cfg, stsim::ModelKind::Family::ridge, "tiny", data,
                                         false, 1, false);
  EXPECT_NE(c.run_dir, a.run_dir);
  EXPECT_NE(testutil::read_file(c.run_dir / "run.json"), run_a);
}

TEST(RunOptimization, FailuresNameTheirStage) {
  testutil::TmpDir dir;
  RunConfig cfg = tiny_config(dir);

  try {
    stsim::run_optimization(cfg, stsim::ModelKind::Family::linear, "tiny",
                            dir.file("missing.tsv"), false, 1, false);
    FAIL() << "missing dataset accepted";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "dataset");
    EXPECT_NE(std::string(e.what()).find("stage dataset failed"), std::string::npos);
  }

  auto data = testutil::write_file(dir.file("pairs.tsv"), tiny_dataset());
  try {
    stsim::run_optimization(cfg, stsim::ModelKind::Family::linear, "tiny", data, true, 1, false);
    FAIL() << "lemmatized run without lemma map accepted";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "dataset");
  }

  cfg.output_dir.clear();
  try {
    stsim::run_optimization(cfg, stsim::ModelKind::Family::linear, "tiny", data, false, 1, false);
    FAIL() << "missing output dir accepted";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "artifacts");
  }
}

TEST(CollectEntries, GathersRunsRecursivelyAndValidatesJson) {
  testutil::TmpDir dir;
  EXPECT_TRUE(stsim::collect_entries(dir.file("absent")).empty());

  auto data = testutil::write_file(dir.file("pairs.tsv"), tiny_dataset());
  RunConfig cfg = tiny_config(dir);
  stsim::run_optimization(cfg, stsim::ModelKind::Family::linear, "tiny", data, false, 1, false);
  cfg.seed = 21;
  stsim::run_optimization(cfg, stsim::ModelKind::Family::ridge, "tiny", data, false, 1, false);

  std::vector<stsim::ReportEntry> entries = stsim::collect_entries(dir.file("runs"));
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].block, "ml");
  EXPECT_EQ(entries[1].block, "ml");

  std::filesystem::create_directories(dir.file("runs/broken"));
  testutil::write_file(dir.file("runs/broken/run.json"), "not json");
  try {
    stsim::collect_entries(dir.file("runs"));
    FAIL() << "broken artifact accepted";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
  }
}

TEST(ReportEntryJson, RoundTripsEveryField) {
  stsim::ReportEntry e;
  e.name = "boosting+abc";
  e.block = "ml";
  e.pearson = 0.912345;
  e.undefined = false;
  e.selected_columns = {"levenshtein", "jaccard-word"};
  e.hyperparams = "boosting(n_estimators=50)";
  stsim::ReportEntry r = stsim::entry_from_json(stsim::entry_to_json(e));
  EXPECT_EQ(r.name, e.name);
  EXPECT_EQ(r.block, e.block);
  EXPECT_EQ(r.pearson, e.pearson);
  EXPECT_EQ(r.undefined, e.undefined);
  EXPECT_EQ(r.selected_columns, e.selected_columns);
  EXPECT_EQ(r.hyperparams, e.hyperparams);
}

// Bundled dataset checks. The tracked file must equal a fresh regeneration
// with the published arguments, and its construction must leave mass on both
// clip plateaus.

TEST(SyntheticDataset, RegenerationIsByteIdentical) {
  testutil::TmpDir dir;
  stsim::write_synthetic_dataset(dir.file("fresh.tsv"), 200, 42);
  std::string fresh = testutil::read_file(dir.file("fresh.tsv"));
  std::string bundled = testutil::read_file(std::filesystem::path(STSIM_DATA_DIR) /
                                            "synthetic_sts.tsv");
  ASSERT_FALSE(bundled.empty());
  EXPECT_EQ(fresh, bundled);
}

TEST(SyntheticDataset, GoldScoresAreClippedToScale) {
  auto rows = stsim::synthetic_pairs(200, 42);
  ASSERT_EQ(rows.size(), 200u);
  int at_floor = 0, at_ceil = 0;
  for (const auto& row : rows) {
    EXPECT_GE(row.gold, 0.0);
    EXPECT_LE(row.gold, 5.0);
    EXPECT_FALSE(row.a.empty());
    EXPECT_FALSE(row.b.empty());
    if (row.gold == 0.0) ++at_floor;
    if (row.gold == 5.0) ++at_ceil;
  }
  EXPECT_GT(at_floor, 10);
  EXPECT_GT(at_ceil, 5);
}

TEST(SyntheticDataset, LoadsThroughTheStandardReader) {
  testutil::TmpDir dir;
  stsim::write_synthetic_dataset(dir.file("d.tsv"), 50, 7);
  stsim::Dataset ds = stsim::load_dataset(dir.file("d.tsv"),
                                          stsim::DatasetFormat::sts_benchmark_tsv);
  ASSERT_EQ(ds.pairs.size(), 50u);
  EXPECT_EQ(ds.pairs[0].id, "1");
  EXPECT_FALSE(ds.pairs[0].a.tokens.empty());
}

}  // namespace
