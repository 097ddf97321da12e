#include "stsim/vector_space.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "stsim/rng.hpp"
#include "support/oracles.hpp"
#include "support/util.hpp"

using namespace stsim;
using testutil::TmpDir;
using testutil::write_file;

namespace {

WordVectors toy_vectors() {
  // "one" -> (1, 0), "two" -> (0, 1), "both" -> (1, 1)
  WordVectors wv;
  wv.dim = 2;
  wv.vocab = {{"one", 0}, {"two", 1}, {"both", 2}};
  wv.matrix = {1, 0, 0, 1, 1, 1};
  return wv;
}

std::vector<std::vector<std::string>> random_corpus(Rng& rng, std::size_t max_tokens) {
  std::vector<std::vector<std::string>> lines;
  std::size_t total = 0;
  std::size_t n_lines = 1 + rng.below(4);
  for (std::size_t l = 0; l < n_lines && total < max_tokens; ++l) {
    std::vector<std::string> line;
    std::size_t len = rng.below(max_tokens / n_lines + 1);
    for (std::size_t i = 0; i < len && total < max_tokens; ++i, ++total)
      line.push_back(std::string(1, static_cast<char>('a' + rng.below(5))));
    lines.push_back(std::move(line));
  }
  return lines;
}

std::string corpus_text(const std::vector<std::vector<std::string>>& lines) {
  std::ostringstream os;
  for (const auto& line : lines) {
    for (std::size_t i = 0; i < line.size(); ++i) os << (i ? " " : "") << line[i];
    os << "\n";
  }
  return os.str();
}

}  // namespace

TEST(VectorSimilarity, CosineMapsToUnitInterval) {
  std::vector<double> x{1, 0}, y{0, 1}, z{1, 1}, neg{-1, 0};
  EXPECT_DOUBLE_EQ(vector_similarity(VectorMetric::cosine(), x, x).value, 1.0);
  EXPECT_DOUBLE_EQ(vector_similarity(VectorMetric::cosine(), x, y).value, 0.5);
  EXPECT_DOUBLE_EQ(vector_similarity(VectorMetric::cosine(), x, neg).value, 0.0);
  EXPECT_NEAR(vector_similarity(VectorMetric::cosine(), x, z).value,
              (1.0 + 1.0 / std::sqrt(2.0)) / 2.0, 1e-12);
}

TEST(VectorSimilarity, ZeroVectorCosineIsDegenerate) {
  std::vector<double> zero{0, 0}, x{1, 0};
  auto s = vector_similarity(VectorMetric::cosine(), zero, x);
  EXPECT_EQ(s.value, 0.0);
  EXPECT_TRUE(s.degenerate);
  // Distance metrics handle zero vectors normally.
  auto e = vector_similarity(VectorMetric::euclidean(), zero, x);
  EXPECT_FALSE(e.degenerate);
  EXPECT_DOUBLE_EQ(e.value, 0.5);
}

TEST(VectorSimilarity, DistanceMetrics) {
  std::vector<double> a{0, 0}, b{3, 4};
  EXPECT_DOUBLE_EQ(vector_similarity(VectorMetric::euclidean(), a, b).value, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(vector_similarity(VectorMetric::manhattan(), a, b).value, 1.0 / 8.0);
  double d3 = std::pow(27.0 + 64.0, 1.0 / 3.0);
  EXPECT_NEAR(vector_similarity(VectorMetric::minkowski(3), a, b).value, 1.0 / (1.0 + d3), 1e-12);
  // Order 2 coincides with euclidean, order 1 with manhattan.
  EXPECT_NEAR(vector_similarity(VectorMetric::minkowski(2), a, b).value, 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(vector_similarity(VectorMetric::minkowski(1), a, b).value, 1.0 / 8.0, 1e-12);
  EXPECT_THROW(VectorMetric::minkowski(0.5), std::invalid_argument);
}

TEST(VectorSimilarity, DimensionMismatchThrows) {
  std::vector<double> a{1, 2}, b{1, 2, 3};
  EXPECT_THROW(vector_similarity(VectorMetric::cosine(), a, b), std::invalid_argument);
}

TEST(VectorMetricLabels, Stable) {
  EXPECT_EQ(VectorMetric::cosine().label(), "cos");
  EXPECT_EQ(VectorMetric::euclidean().label(), "euc");
  EXPECT_EQ(VectorMetric::manhattan().label(), "man");
  EXPECT_EQ(VectorMetric::minkowski(3).label(), "mink3");
}

TEST(SentenceSimilarity, MeanVectorHandCase) {
  WordVectors wv = toy_vectors();
  std::vector<std::string> one_two{"one", "two"}, both{"both"}, one{"one"};
  // mean("one","two") = (0.5,0.5), mean("both") = (1,1): cosine 1 -> 1.0.
  auto s = sentence_similarity(wv, VectorMetric::cosine(), Aggregation::mean_vector,
                               one_two, both);
  EXPECT_FALSE(s.degenerate);
  EXPECT_NEAR(s.value, 1.0, 1e-12);
  // Unknown tokens are skipped, not zero-filled.
  std::vector<std::string> with_unknown{"one", "unknown"};
  auto t = sentence_similarity(wv, VectorMetric::cosine(), Aggregation::mean_vector,
                               with_unknown, one);
  EXPECT_NEAR(t.value, 1.0, 1e-12);
}

TEST(SentenceSimilarity, BestMatchHandCase) {
  WordVectors wv = toy_vectors();
  std::vector<std::string> one_two{"one", "two"}, one{"one"};
  // a={one,two} vs b={one}: forward direction averages best matches
  // (1.0 for "one", 0.5 for "two") = 0.75; reverse = 1.0; mean = 0.875.
  auto s = sentence_similarity(wv, VectorMetric::cosine(), Aggregation::best_match,
                               one_two, one);
  EXPECT_FALSE(s.degenerate);
  EXPECT_NEAR(s.value, 0.875, 1e-12);
}

TEST(SentenceSimilarity, OutOfVocabularySentenceIsDegenerate) {
  WordVectors wv = toy_vectors();
  std::vector<std::string> nope{"nope"}, one{"one"};
  for (auto agg : {Aggregation::mean_vector, Aggregation::best_match}) {
    auto s = sentence_similarity(wv, VectorMetric::cosine(), agg, nope, one);
    EXPECT_EQ(s.value, 0.0);
    EXPECT_TRUE(s.degenerate);
  }
}

TEST(Hal, TinyCorpusPinnedWeight) {
  TmpDir tmp;
  auto path = write_file(tmp.file("c.txt"), "a b\n");
  auto model = build_hal(path, 2, 1, 100);
  ASSERT_EQ(model.tokens.size(), 2u);
  std::uint32_t a = model.vocab.at("a"), b = model.vocab.at("b");
  EXPECT_DOUBLE_EQ(model.rows[a].at(b), 2.0);  // distance 1, window 2
  EXPECT_DOUBLE_EQ(model.cols[b].at(a), 2.0);
  EXPECT_TRUE(model.rows[b].empty());
}

TEST(Hal, MatchesWindowEnumeratorOnSeededCorpora) {
  Rng rng(314159);
  TmpDir tmp;
  for (int trial = 0; trial < 20; ++trial) {
    auto lines = random_corpus(rng, 50);
    auto path = write_file(tmp.file("corpus" + std::to_string(trial) + ".txt"),
                           corpus_text(lines));
    int window = 1 + static_cast<int>(rng.below(4));
    int min_count = 1 + static_cast<int>(rng.below(2));
    std::size_t max_vocab = 3 + rng.below(4);

    bool any_token = false;
    for (const auto& l : lines) any_token |= !l.empty();
    if (!any_token) {
      EXPECT_THROW(build_hal(path, window, min_count, max_vocab), std::runtime_error);
      continue;
    }
    auto model = build_hal(path, window, min_count, max_vocab);
    auto ref = oracle::hal_counts(lines, static_cast<std::size_t>(window),
                                  static_cast<std::size_t>(min_count), max_vocab);
    ASSERT_EQ(model.tokens, ref.vocab) << trial;
    std::size_t cells = 0;
    for (std::uint32_t t = 0; t < model.tokens.size(); ++t)
      for (const auto& [c, w] : model.rows[t]) {
        auto it = ref.forward.find({model.tokens[t], model.tokens[c]});
        ASSERT_TRUE(it != ref.forward.end()) << trial;
        EXPECT_DOUBLE_EQ(w, it->second) << trial;
        ++cells;
      }
    EXPECT_EQ(cells, ref.forward.size()) << trial;
    // Column store mirrors the row store.
    for (std::uint32_t t = 0; t < model.tokens.size(); ++t)
      for (const auto& [c, w] : model.rows[t])
        EXPECT_DOUBLE_EQ(model.cols[c].at(t), w) << trial;
  }
}

TEST(Hal, WindowsDoNotCrossLines) {
  TmpDir tmp;
  auto path = write_file(tmp.file("c.txt"), "a b\nb a\n");
  auto model = build_hal(path, 5, 1, 10);
  std::uint32_t a = model.vocab.at("a"), b = model.vocab.at("b");
  EXPECT_DOUBLE_EQ(model.rows[a].at(b), 5.0);
  EXPECT_DOUBLE_EQ(model.rows[b].at(a), 5.0);
}

TEST(Hal, DroppedTokensStillOccupyPositions) {
  // "z" falls under min_count but the a..b distance stays 2.
  TmpDir tmp;
  auto path = write_file(tmp.file("c.txt"), "a z b a b\n");
  auto model = build_hal(path, 3, 2, 10);
  EXPECT_EQ(model.vocab.count("z"), 0u);
  std::uint32_t a = model.vocab.at("a"), b = model.vocab.at("b");
  // pairs: a..b at distance 2 (w=2), a..a distance 3 (w=1), a..b distance 1
  // (w=3) from positions 3-4, b..a distance 1 (w=3).
  EXPECT_DOUBLE_EQ(model.rows[a].at(b), 5.0);
  EXPECT_DOUBLE_EQ(model.rows[b].at(a), 3.0);
  EXPECT_DOUBLE_EQ(model.rows[a].at(a), 1.0);
}

TEST(Hal, VocabularyRankingAndTruncation) {
  TmpDir tmp;
  auto path = write_file(tmp.file("c.txt"), "c c c b b a a d\n");
  auto model = build_hal(path, 2, 1, 3);
  // Frequency desc, ties alphabetical, capped at 3.
  EXPECT_EQ(model.tokens, (std::vector<std::string>{"c", "a", "b"}));
}

TEST(Hal, RejectsBadInputs) {
  TmpDir tmp;
  auto empty = write_file(tmp.file("empty.txt"), "\n\n");
  EXPECT_THROW(build_hal(empty, 2, 1, 10), std::runtime_error);
  auto ok = write_file(tmp.file("ok.txt"), "a b\n");
  EXPECT_THROW(build_hal(ok, 0, 1, 10), std::invalid_argument);
  EXPECT_THROW(build_hal(tmp.file("missing.txt"), 2, 1, 10), std::runtime_error);
}

TEST(Hal, SaveLoadRoundTripBitExact) {
  Rng rng(271828);
  TmpDir tmp;
  auto lines = random_corpus(rng, 40);
  auto path = write_file(tmp.file("c.txt"), corpus_text(lines) + "a b c a b c\n");
  auto model = build_hal(path, 3, 1, 50);
  auto saved = tmp.file("model.hal");
  model.save(saved);
  auto loaded = CooccurrenceModel::load(saved);
  EXPECT_TRUE(model.same_as(loaded));

  // Second save of the loaded model produces identical bytes.
  auto saved2 = tmp.file("model2.hal");
  loaded.save(saved2);
  EXPECT_EQ(testutil::read_file(saved), testutil::read_file(saved2));

  EXPECT_THROW(CooccurrenceModel::load(tmp.file("missing.hal")), std::runtime_error);
  write_file(tmp.file("junk.hal"), "not a model");
  EXPECT_THROW(CooccurrenceModel::load(tmp.file("junk.hal")), std::runtime_error);
}

TEST(Hal, ToWordVectorsLayout) {
  TmpDir tmp;
  auto path = write_file(tmp.file("c.txt"), "a b\n");
  auto model = build_hal(path, 2, 1, 10);
  WordVectors wv = model.to_word_vectors();
  EXPECT_EQ(wv.source, VectorSource::hal);
  ASSERT_EQ(wv.dim, 4u);  // 2 * |vocab|
  std::size_t a = wv.vocab.at("a"), b = wv.vocab.at("b");
  auto va = wv.vector_of(a);
  auto vb = wv.vector_of(b);
  // a's row half holds weight 2 at b's column; its column half is empty.
  EXPECT_DOUBLE_EQ(va[b], 2.0);
  EXPECT_DOUBLE_EQ(va[2 + a], 0.0);
  // b's row half is empty; its column half holds weight 2 at a's column.
  EXPECT_DOUBLE_EQ(vb[a], 0.0);
  EXPECT_DOUBLE_EQ(vb[2 + a], 2.0);
}

TEST(WordVectorFile, LoadsWithAndWithoutHeader) {
  TmpDir tmp;
  auto with = write_file(tmp.file("w.vec"), "2 3\nfoo 1 2 3\nbar 4 5 6\n");
  WordVectors a = load_word_vectors(with);
  EXPECT_EQ(a.dim, 3u);
  ASSERT_EQ(a.vocab.size(), 2u);
  EXPECT_DOUBLE_EQ(a.vector_of(a.vocab.at("bar"))[2], 6.0);
  EXPECT_EQ(a.source, VectorSource::file);

  auto without = write_file(tmp.file("n.vec"), "foo 1 2 3\nbar 4 5 6\n");
  WordVectors b = load_word_vectors(without);
  EXPECT_EQ(b.dim, 3u);
  EXPECT_EQ(b.vocab.size(), 2u);
}

TEST(WordVectorFile, DuplicateTokenLastWins) {
  TmpDir tmp;
  auto path = write_file(tmp.file("w.vec"), "foo 1 1\nfoo 2 2\n");
  WordVectors wv = load_word_vectors(path);
  EXPECT_EQ(wv.vocab.size(), 1u);
  EXPECT_DOUBLE_EQ(wv.vector_of(wv.vocab.at("foo"))[0], 2.0);
}

TEST(WordVectorFile, ErrorsNameLines) {
  TmpDir tmp;
  auto path = write_file(tmp.file("w.vec"), "foo 1 2\nbar 1 2 3\n");
  try {
    load_word_vectors(path);
    FAIL() << "expected throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_word_vectors(write_file(tmp.file("e.vec"), "")), std::runtime_error);
  EXPECT_THROW(load_word_vectors(write_file(tmp.file("b.vec"), "foo one two\n")),
               std::runtime_error);
}
