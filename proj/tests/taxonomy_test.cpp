#include "stsim/taxonomy.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "stsim/rng.hpp"
#include "support/oracles.hpp"
#include "support/util.hpp"

using namespace stsim;
using testutil::TmpDir;
using testutil::write_file;

namespace {

Taxonomy toy() {
  return Taxonomy::from_edges(
      {{"animal", "root"}, {"dog", "animal"}, {"cat", "animal"}},
      {{"dog", "dog"}, {"cat", "cat"}, {"animal", "animal"}, {"pet", "dog"}, {"pet", "cat"}});
}

}  // namespace

TEST(Taxonomy, ToyDepthsAndRoot) {
  Taxonomy t = toy();
  EXPECT_EQ(t.node_count(), 4);
  EXPECT_EQ(t.id_of(t.root()), "root");
  EXPECT_EQ(t.depth(t.require("root")), 1);
  EXPECT_EQ(t.depth(t.require("animal")), 2);
  EXPECT_EQ(t.depth(t.require("dog")), 3);
  EXPECT_EQ(t.max_depth(), 3);
}

TEST(Taxonomy, PinnedSynsetSimilarities) {
  Taxonomy t = toy();
  EXPECT_NEAR(synset_similarity(KnowMetricKind::path, t, "dog", "cat"), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(synset_similarity(KnowMetricKind::wu_palmer, t, "dog", "cat"), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(synset_similarity(KnowMetricKind::leacock_chodorow, t, "dog", "cat"), 0.3869, 1e-3);
  // Identical synsets: path 1, wu-palmer 1, lch 1 (own maximum).
  for (auto k : {KnowMetricKind::path, KnowMetricKind::wu_palmer,
                 KnowMetricKind::leacock_chodorow})
    EXPECT_NEAR(synset_similarity(k, t, "dog", "dog"), 1.0, 1e-12) << know_metric_id(k);
  EXPECT_THROW(synset_similarity(KnowMetricKind::path, t, "dog", "unicorn"), std::runtime_error);
}

TEST(Taxonomy, LoadFileWithSectionsAndComments) {
  TmpDir tmp;
  auto path = write_file(tmp.file("tax.tsv"),
                         "# toy hierarchy\n"
                         "[edges]\n"
                         "animal\troot\n"
                         "dog\tanimal   # trailing comment\n"
                         "cat\tanimal\n"
                         "\n"
                         "[words]\n"
                         "dog\tdog\n"
                         "cat\tcat\n");
  Taxonomy t = Taxonomy::load(path);
  EXPECT_EQ(t.node_count(), 4);
  EXPECT_NEAR(synset_similarity(KnowMetricKind::path, t, "dog", "cat"), 1.0 / 3.0, 1e-12);
  ASSERT_NE(t.synsets_of("dog"), nullptr);

  auto bad = write_file(tmp.file("bad.tsv"), "dog\tanimal\n");
  EXPECT_THROW(Taxonomy::load(bad), std::runtime_error);  // line before any section
  auto noline = write_file(tmp.file("bad2.tsv"), "[edges]\nno-tab-here\n");
  EXPECT_THROW(Taxonomy::load(noline), std::runtime_error);
  EXPECT_THROW(Taxonomy::load(tmp.file("missing.tsv")), std::runtime_error);
}

TEST(Taxonomy, MultipleRootsGetVirtualRoot) {
  Taxonomy t = Taxonomy::from_edges({{"a", "r1"}, {"b", "r2"}}, {});
  // r1 and r2 are both parentless, so a synthetic root is added above them.
  EXPECT_EQ(t.node_count(), 5);
  EXPECT_EQ(t.depth(t.root()), 1);
  EXPECT_EQ(t.depth(t.require("r1")), 2);
  EXPECT_EQ(t.depth(t.require("a")), 3);
  // Cross-tree paths go through the synthetic root.
  EXPECT_EQ(t.undirected_path_edges(t.require("a"), t.require("b")), 4);
}

TEST(Taxonomy, RejectsCyclesAndSelfLoops) {
  EXPECT_THROW(Taxonomy::from_edges({{"a", "a"}}, {}), std::runtime_error);
  EXPECT_THROW(Taxonomy::from_edges({{"a", "b"}, {"b", "c"}, {"c", "a"}}, {}),
               std::runtime_error);
  EXPECT_THROW(Taxonomy::from_edges({}, {}), std::runtime_error);
  EXPECT_THROW(Taxonomy::from_edges({{"a", "root"}}, {{"word", "nope"}}), std::runtime_error);
}

TEST(Taxonomy, DiamondUsesShortestRootPathForDepth) {
  // d has parents b (depth 2) and c (depth 3); its depth is the shorter 3.
  Taxonomy t = Taxonomy::from_edges(
      {{"b", "root"}, {"c2", "root"}, {"c", "c2"}, {"d", "b"}, {"d", "c"}}, {});
  EXPECT_EQ(t.depth(t.require("d")), 3);
  EXPECT_EQ(t.max_depth(), 3);
}

TEST(Taxonomy, RandomDagsMatchShortestPathOracle) {
  Rng rng(20230505);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng.below(19));
    std::vector<std::pair<int, int>> int_edges;
    std::vector<std::pair<std::string, std::string>> edges;
    for (int i = 1; i < n; ++i) {
      int n_parents = 1 + static_cast<int>(rng.below(2));
      std::vector<int> pool;
      for (int p = 0; p < i; ++p) pool.push_back(p);
      rng.shuffle(pool);
      if (n_parents > i) n_parents = i;
      for (int k = 0; k < n_parents; ++k) {
        int_edges.emplace_back(i, pool[static_cast<std::size_t>(k)]);
        edges.emplace_back("s" + std::to_string(i),
                           "s" + std::to_string(pool[static_cast<std::size_t>(k)]));
      }
    }
    Taxonomy t = Taxonomy::from_edges(edges, {});
    ASSERT_EQ(t.node_count(), n) << trial;
    ASSERT_EQ(t.id_of(t.root()), "s0") << trial;

    oracle::TaxonomyOracle ref(n, int_edges, 0);
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = t.require("s" + std::to_string(i));

    int max_depth = 0;
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(t.depth(idx[static_cast<std::size_t>(i)]), ref.depth[static_cast<std::size_t>(i)])
          << trial << " node " << i;
      max_depth = std::max(max_depth, ref.depth[static_cast<std::size_t>(i)]);
    }
    EXPECT_EQ(t.max_depth(), max_depth) << trial;

    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        int e = ref.undirected[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        int ti = idx[static_cast<std::size_t>(i)], tj = idx[static_cast<std::size_t>(j)];
        EXPECT_EQ(t.undirected_path_edges(ti, tj), e) << trial;
        EXPECT_NEAR(synset_similarity(KnowMetricKind::path, t, ti, tj),
                    1.0 / (1.0 + static_cast<double>(e)), 1e-12)
            << trial;
        int lcs_depth = ref.depth[static_cast<std::size_t>(ref.lcs(i, j))];
        EXPECT_EQ(t.depth(t.least_common_subsumer(ti, tj)), lcs_depth) << trial;
        EXPECT_NEAR(synset_similarity(KnowMetricKind::wu_palmer, t, ti, tj),
                    2.0 * lcs_depth /
                        static_cast<double>(ref.depth[static_cast<std::size_t>(i)] +
                                            ref.depth[static_cast<std::size_t>(j)]),
                    1e-12)
            << trial;
        double two_d = 2.0 * static_cast<double>(max_depth);
        EXPECT_NEAR(synset_similarity(KnowMetricKind::leacock_chodorow, t, ti, tj),
                    -std::log((e + 1) / two_d) / std::log(two_d), 1e-12)
            << trial;
      }
    }
  }
}

TEST(WordSimilarity, SynsetPairsAndUnmappedRules) {
  Taxonomy t = toy();
  // "pet" maps to both dog and cat; max over synset pairs gives 1 vs dog.
  auto s = word_similarity(KnowMetricKind::path, t, "pet", "dog");
  ASSERT_TRUE(s.has_value());
  EXPECT_DOUBLE_EQ(*s, 1.0);
  // Unmapped identical words count as similarity 1.
  auto same = word_similarity(KnowMetricKind::path, t, "xyz", "xyz");
  ASSERT_TRUE(same.has_value());
  EXPECT_DOUBLE_EQ(*same, 1.0);
  // Unmapped vs mapped is undefined.
  EXPECT_FALSE(word_similarity(KnowMetricKind::path, t, "xyz", "dog").has_value());
  EXPECT_FALSE(word_similarity(KnowMetricKind::path, t, "dog", "xyz").has_value());
}

TEST(KnowSentenceSimilarity, HandComputedCases) {
  Taxonomy t = toy();
  std::vector<std::string> a = {"dog", "cat"}, b = {"animal", "dog"};
  // Per-token best matches are 1 and 1/2 in both directions.
  auto best = sentence_similarity({KnowMetricKind::path, KnowAggregation::best_match}, t, a, b);
  EXPECT_FALSE(best.degenerate);
  EXPECT_NEAR(best.value, 0.75, 1e-12);
  auto maxp = sentence_similarity({KnowMetricKind::path, KnowAggregation::max_pair}, t, a, b);
  EXPECT_FALSE(maxp.degenerate);
  EXPECT_DOUBLE_EQ(maxp.value, 1.0);
}

TEST(KnowSentenceSimilarity, UndefinedTokensIgnoredOrDegenerate) {
  Taxonomy t = toy();
  // Unknown tokens drop out of the mean when a defined pair exists.
  std::vector<std::string> a = {"dog", "qqq"}, b = {"cat"};
  auto s = sentence_similarity({KnowMetricKind::path, KnowAggregation::best_match}, t, a, b);
  EXPECT_FALSE(s.degenerate);
  EXPECT_NEAR(s.value, 1.0 / 3.0, 1e-12);
  // No defined pair at all.
  std::vector<std::string> u = {"qqq"}, v = {"zzz"};
  for (auto agg : {KnowAggregation::best_match, KnowAggregation::max_pair}) {
    auto d = sentence_similarity({KnowMetricKind::path, agg}, t, u, v);
    EXPECT_EQ(d.value, 0.0);
    EXPECT_TRUE(d.degenerate);
  }
  // Empty sentences are degenerate as well.
  auto e = sentence_similarity({KnowMetricKind::path, KnowAggregation::best_match}, t, {}, {});
  EXPECT_TRUE(e.degenerate);
}
