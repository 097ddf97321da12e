#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stsim/common.hpp"
#include "stsim/embedding_client.hpp"
#include "stsim/string_metrics.hpp"
#include "stsim/taxonomy.hpp"
#include "stsim/term_metrics.hpp"
#include "stsim/text.hpp"
#include "stsim/vector_space.hpp"

namespace stsim {

/// Non-owning handles to the loaded models a feature registry can draw on.
/// Absent resources simply exclude the families that need them.
struct Resources {
  const WordVectors* hal_vectors = nullptr;
  const WordVectors* word_vectors = nullptr;
  const Taxonomy* taxonomy = nullptr;
  EmbeddingClient* embedder = nullptr;
};

enum class Family { char_based, term, vec, know, embed };

inline std::string family_id(Family f) {
  switch (f) {
    case Family::char_based: return "char";
    case Family::term: return "term";
    case Family::vec: return "vec";
    case Family::know: return "know";
    case Family::embed: return "embed";
  }
  return "";
}

/// One sentence pair with its derived forms (normalized character streams,
/// word tokens, char n-grams) computed once and shared by every feature
/// column. Immutable after construction, safe to read from many threads.
class PairContext {
 public:
  PairContext(const SentencePair& pair, bool lemmatized)
      : pair_(&pair),
        lemmatized_(lemmatized),
        stream_a_(char_stream(pair.a.raw)),
        stream_b_(char_stream(pair.b.raw)) {
    for (int n = 2; n <= 3; ++n) {
      ngrams_a_[n - 2] = tokenize(pair.a.raw, TokenMode::char_ngram(n));
      ngrams_b_[n - 2] = tokenize(pair.b.raw, TokenMode::char_ngram(n));
    }
  }

  const SentencePair& pair() const { return *pair_; }
  const std::u32string& stream_a() const { return stream_a_; }
  const std::u32string& stream_b() const { return stream_b_; }
  const std::vector<std::string>& words_a() const { return pair_->a.effective_tokens(lemmatized_); }
  const std::vector<std::string>& words_b() const { return pair_->b.effective_tokens(lemmatized_); }

  /// n in {2,3}; lemmatization never applies to character n-grams.
  const std::vector<std::string>& ngrams_a(int n) const { return ngrams_a_[check_n(n)]; }
  const std::vector<std::string>& ngrams_b(int n) const { return ngrams_b_[check_n(n)]; }

 private:
  static std::size_t check_n(int n) {
    if (n < 2 || n > 3) throw std::invalid_argument("cached n-grams cover n in 2..3");
    return static_cast<std::size_t>(n - 2);
  }

  const SentencePair* pair_;
  bool lemmatized_;
  std::u32string stream_a_, stream_b_;
  std::vector<std::string> ngrams_a_[2], ngrams_b_[2];
};

/// One parameter configuration of a feature: a short label unique within its
/// spec and the scoring function itself.
struct FeatureConfig {
  std::string label;  // empty for single-config specs
  std::function<SimScore(const PairContext&, const Resources&)> score;
};

/// A registered traditional algorithm: stable id, family, and its ordered
/// parameter configurations. The optimizer's gene for this feature picks
/// both selection and the active config.
struct FeatureSpec {
  std::string id;
  Family family = Family::char_based;
  std::vector<FeatureConfig> configs;
  std::size_t active_config = 0;

  std::string column_id(std::size_t config) const {
    const std::string& label = configs.at(config).label;
    return label.empty() ? id : id + "-" + label;
  }
  std::string active_column_id() const { return column_id(active_config); }
};

inline void validate_registry(const std::vector<FeatureSpec>& specs) {
  std::unordered_set<std::string> seen;
  for (const auto& s : specs) {
    if (s.configs.empty()) throw std::invalid_argument("feature " + s.id + " has no configs");
    if (s.active_config >= s.configs.size())
      throw std::invalid_argument("feature " + s.id + " active config out of range");
    if (!seen.insert(s.id).second)
      throw std::invalid_argument("duplicate feature id " + s.id);
    std::unordered_set<std::string> labels;
    for (const auto& c : s.configs)
      if (!labels.insert(c.label).second)
        throw std::invalid_argument("feature " + s.id + " has duplicate config label '" +
                                    c.label + "'");
  }
}

namespace detail {

inline SimScore plain(double v) { return {v, false}; }

inline FeatureSpec char_spec(std::string id, CharMetric metric) {
  FeatureSpec s;
  s.id = std::move(id);
  s.family = Family::char_based;
  s.configs.push_back({"", [metric](const PairContext& ctx, const Resources&) {
                         return plain(char_similarity(metric, ctx.stream_a(), ctx.stream_b()));
                       }});
  return s;
}

inline FeatureSpec term_spec(std::string id, TermMetricKind kind) {
  FeatureSpec s;
  s.id = std::move(id);
  s.family = Family::term;
  s.configs.push_back({"word", [kind](const PairContext& ctx, const Resources&) {
                         return plain(term_similarity(kind, ctx.words_a(), ctx.words_b()));
                       }});
  for (int n = 2; n <= 3; ++n)
    s.configs.push_back(
        {"char" + std::to_string(n), [kind, n](const PairContext& ctx, const Resources&) {
           return plain(term_similarity(kind, ctx.ngrams_a(n), ctx.ngrams_b(n)));
         }});
  return s;
}

inline std::vector<std::pair<std::string, VectorMetric>> vector_metric_set() {
  return {{"cos", VectorMetric::cosine()},
          {"euc", VectorMetric::euclidean()},
          {"man", VectorMetric::manhattan()},
          {"mink3", VectorMetric::minkowski(3.0)}};
}

inline FeatureSpec vec_spec(std::string id, const WordVectors* Resources::*member) {
  FeatureSpec s;
  s.id = std::move(id);
  s.family = Family::vec;
  for (auto agg : {Aggregation::mean_vector, Aggregation::best_match}) {
    for (const auto& [mlabel, metric] : vector_metric_set()) {
      std::string label = aggregation_label(agg) + "-" + mlabel;
      s.configs.push_back({label, [member, agg, metric](const PairContext& ctx,
                                                        const Resources& res) {
                             return sentence_similarity(*(res.*member), metric, agg,
                                                        ctx.words_a(), ctx.words_b());
                           }});
    }
  }
  return s;
}

inline FeatureSpec know_spec(std::string id, KnowMetricKind kind) {
  FeatureSpec s;
  s.id = std::move(id);
  s.family = Family::know;
  s.configs.push_back({"best", [kind](const PairContext& ctx, const Resources& res) {
                         return sentence_similarity({kind, KnowAggregation::best_match},
                                                    *res.taxonomy, ctx.words_a(), ctx.words_b());
                       }});
  s.configs.push_back({"maxpair", [kind](const PairContext& ctx, const Resources& res) {
                         return sentence_similarity({kind, KnowAggregation::max_pair},
                                                    *res.taxonomy, ctx.words_a(), ctx.words_b());
                       }});
  return s;
}

inline FeatureSpec embed_spec() {
  FeatureSpec s;
  s.id = "embedding";
  s.family = Family::embed;
  for (const auto& [mlabel, metric] : vector_metric_set()) {
    s.configs.push_back({mlabel, [metric](const PairContext& ctx, const Resources& res) {
                           auto vecs = res.embedder->embed({ctx.pair().a.raw, ctx.pair().b.raw});
                           return vector_similarity(metric, vecs[0], vecs[1]);
                         }});
  }
  return s;
}

}  // namespace detail

/// The standard feature inventory. Families whose resources are absent are
/// left out. Config lists: Jaro-Winkler prefix weights {0.1, 0.2}; alignment
/// score triples (match, mismatch, gap) in {(1,-1,-1), (1,-1,-2), (2,-1,-1)};
/// term metrics in word / char2 / char3 mode; knowledge metrics with
/// best-match / max-pair aggregation; vector features over both aggregations
/// and four distance metrics; sentence embeddings over the same four metrics.
inline std::vector<FeatureSpec> default_registry(const Resources& res) {
  std::vector<FeatureSpec> specs;

  specs.push_back(detail::char_spec("hamming", CharMetric::hamming()));
  specs.push_back(detail::char_spec("levenshtein", CharMetric::levenshtein()));
  specs.push_back(detail::char_spec("damerau-levenshtein", CharMetric::damerau_levenshtein()));
  specs.push_back(detail::char_spec("jaro", CharMetric::jaro()));
  {
    FeatureSpec jw;
    jw.id = "jaro-winkler";
    jw.family = Family::char_based;
    for (double w : {0.1, 0.2}) {
      auto metric = CharMetric::jaro_winkler({w, 4});
      jw.configs.push_back({"p" + std::to_string(static_cast<int>(w * 100)),
                            [metric](const PairContext& ctx, const Resources&) {
                              return detail::plain(
                                  char_similarity(metric, ctx.stream_a(), ctx.stream_b()));
                            }});
    }
    specs.push_back(std::move(jw));
  }
  for (const char* id : {"needleman-wunsch", "smith-waterman"}) {
    FeatureSpec al;
    al.id = id;
    al.family = Family::char_based;
    bool global = al.id == "needleman-wunsch";
    for (AlignParams p : {AlignParams{1, -1, -1}, AlignParams{1, -1, -2}, AlignParams{2, -1, -1}}) {
      auto metric = global ? CharMetric::needleman_wunsch(p) : CharMetric::smith_waterman(p);
      char label[32];
      std::snprintf(label, sizeof label, "m%dx%dg%d", static_cast<int>(p.match),
                    static_cast<int>(-p.mismatch), static_cast<int>(-p.gap));
      al.configs.push_back({label, [metric](const PairContext& ctx, const Resources&) {
                              return detail::plain(
                                  char_similarity(metric, ctx.stream_a(), ctx.stream_b()));
                            }});
    }
    specs.push_back(std::move(al));
  }
  specs.push_back(detail::char_spec("lcsseq", CharMetric::lcs_seq()));
  specs.push_back(detail::char_spec("lcsstr", CharMetric::lcs_str()));

  for (auto kind : {TermMetricKind::jaccard, TermMetricKind::sorensen_dice,
                    TermMetricKind::overlap, TermMetricKind::cosine_tf, TermMetricKind::ochiai})
    specs.push_back(detail::term_spec(term_metric_id(kind), kind));

  if (res.hal_vectors) specs.push_back(detail::vec_spec("hal", &Resources::hal_vectors));
  if (res.word_vectors) specs.push_back(detail::vec_spec("vectors", &Resources::word_vectors));

  if (res.taxonomy)
    for (auto kind : {KnowMetricKind::path, KnowMetricKind::wu_palmer,
                      KnowMetricKind::leacock_chodorow})
      specs.push_back(detail::know_spec(know_metric_id(kind), kind));

  if (res.embedder) specs.push_back(detail::embed_spec());

  validate_registry(specs);
  return specs;
}

// ---------------------------------------------------------------------------
// On-disk memo store for computed feature cells.

/// Append-only store of feature values, one TSV file per feature column,
/// keyed by pair id. Distinct columns may be written concurrently; a later
/// entry for the same pair id overrides an earlier one on load.
class FeatureStore {
 public:
  struct Entry {
    double value = 0.0;
    bool degenerate = false;
  };

  explicit FeatureStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::unordered_map<std::string, Entry> load_column(const std::string& column_id) const {
    std::unordered_map<std::string, Entry> out;
    std::ifstream in(column_path(column_id));
    if (!in) return out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto t1 = line.find('\t');
      auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
      if (t2 == std::string::npos)
        throw std::runtime_error("bad feature store line " + std::to_string(lineno) + " in " +
                                 column_path(column_id).string());
      Entry e;
      e.value = std::stod(line.substr(t1 + 1, t2 - t1 - 1));
      e.degenerate = line.substr(t2 + 1) == "D";
      out[line.substr(0, t1)] = e;
    }
    return out;
  }

  void append_column(const std::string& column_id,
                     const std::vector<std::pair<std::string, Entry>>& fresh) const {
    if (fresh.empty()) return;
    std::ofstream out(column_path(column_id), std::ios::app);
    if (!out)
      throw std::runtime_error("cannot write feature store column " +
                               column_path(column_id).string());
    char buf[64];
    for (const auto& [pair_id, e] : fresh) {
      std::snprintf(buf, sizeof buf, "%.17g", e.value);
      out << pair_id << '\t' << buf << '\t' << (e.degenerate ? "D" : "-") << '\n';
    }
  }

 private:
  std::filesystem::path column_path(const std::string& column_id) const {
    return dir_ / (column_id + ".tsv");
  }

  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Feature matrices.

/// Scores for the active config of each spec: |pairs| x |specs|.
struct FeatureMatrix {
  std::vector<FeatureSpec> specs;
  std::vector<std::string> column_ids;
  Matrix values;
  std::vector<std::uint8_t> degenerate;  // row-major, parallel to values
  std::vector<double> gold;
  std::vector<std::string> pair_ids;

  bool is_degenerate(std::size_t row, std::size_t col) const {
    return degenerate[row * values.cols + col] != 0;
  }
};

/// Scores for every (spec, config) column: |pairs| x total configs. The
/// optimizer slices this instead of recomputing features.
struct FeatureTable {
  std::vector<FeatureSpec> specs;
  std::vector<std::size_t> spec_offset;  // |specs|+1, offsets into columns
  std::vector<std::string> column_ids;
  Matrix values;
  std::vector<std::uint8_t> degenerate;
  std::vector<double> gold;
  std::vector<std::string> pair_ids;

  std::size_t column_index(std::size_t spec, std::size_t config) const {
    return spec_offset[spec] + config;
  }
  std::size_t total_columns() const { return column_ids.size(); }

  /// Design matrix over the given (spec, config) choices, column order as
  /// given.
  Matrix submatrix(const std::vector<std::pair<std::size_t, std::size_t>>& choices) const {
    Matrix X(values.rows, choices.size());
    for (std::size_t r = 0; r < values.rows; ++r)
      for (std::size_t c = 0; c < choices.size(); ++c)
        X.at(r, c) = values.at(r, column_index(choices[c].first, choices[c].second));
    return X;
  }
};

namespace detail {

inline void prefetch_embeddings(const std::vector<FeatureSpec>& specs, const Dataset& dataset,
                                const Resources& res) {
  bool any_embed = false;
  for (const auto& s : specs) any_embed |= s.family == Family::embed;
  if (!any_embed || dataset.pairs.empty()) return;
  if (!res.embedder) throw std::runtime_error("embed feature requires an embedding client");
  std::vector<std::string> texts;
  texts.reserve(dataset.pairs.size() * 2);
  for (const auto& p : dataset.pairs) {
    texts.push_back(p.a.raw);
    texts.push_back(p.b.raw);
  }
  res.embedder->embed(texts);  // one batched pass warms the cache
}

inline void check_resources(const std::vector<FeatureSpec>& specs, const Resources& res) {
  for (const auto& s : specs) {
    if (s.family == Family::know && !res.taxonomy)
      throw std::runtime_error("feature " + s.id + " requires a taxonomy");
    if (s.family == Family::embed && !res.embedder)
      throw std::runtime_error("feature " + s.id + " requires an embedding client");
    if (s.id == "hal" && !res.hal_vectors)
      throw std::runtime_error("feature hal requires HAL vectors");
    if (s.id == "vectors" && !res.word_vectors)
      throw std::runtime_error("feature vectors requires loaded word vectors");
  }
}

struct ColumnJob {
  std::size_t spec = 0;
  std::size_t config = 0;
  std::size_t column = 0;
};

/// Computes one column over all pairs, via the store when provided.
inline void compute_column(const ColumnJob& job, const std::vector<FeatureSpec>& specs,
                           const std::vector<PairContext>& contexts, const Resources& res,
                           const FeatureStore* store, const std::vector<std::string>& pair_ids,
                           Matrix& values, std::vector<std::uint8_t>& degenerate) {
  const FeatureSpec& spec = specs[job.spec];
  const std::string col_id = spec.column_id(job.config);
  std::unordered_map<std::string, FeatureStore::Entry> known;
  if (store) known = store->load_column(col_id);
  std::vector<std::pair<std::string, FeatureStore::Entry>> fresh;
  for (std::size_t r = 0; r < contexts.size(); ++r) {
    FeatureStore::Entry e;
    auto it = known.find(pair_ids[r]);
    if (it != known.end()) {
      e = it->second;
    } else {
      SimScore s;
      try {
        s = spec.configs[job.config].score(contexts[r], res);
      } catch (const std::exception& ex) {
        throw std::runtime_error("feature " + col_id + " failed on pair " + pair_ids[r] + ": " +
                                 ex.what());
      }
      if (std::isnan(s.value))
        throw std::runtime_error("feature " + col_id + " produced NaN on pair " + pair_ids[r]);
      e.value = s.value;
      e.degenerate = s.degenerate;
      if (store) fresh.emplace_back(pair_ids[r], e);
    }
    values.at(r, job.column) = e.value;
    degenerate[r * values.cols + job.column] = e.degenerate ? 1 : 0;
  }
  if (store) store->append_column(col_id, fresh);
}

inline void run_jobs(const std::vector<ColumnJob>& jobs, int threads,
                     const std::function<void(const ColumnJob&)>& work) {
  int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  if (n_threads == 1) {
    for (const auto& j : jobs) work(j);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= jobs.size()) return;
          work(jobs[i]);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Scores every spec's active config over the dataset.
inline FeatureMatrix build_matrix(const Dataset& dataset, const std::vector<FeatureSpec>& specs,
                                  bool lemmatized, const Resources& res,
                                  const FeatureStore* store = nullptr, int threads = 1) {
  if (specs.empty()) throw std::invalid_argument("build_matrix requires at least one feature");
  validate_registry(specs);
  detail::check_resources(specs, res);
  detail::prefetch_embeddings(specs, dataset, res);

  FeatureMatrix m;
  m.specs = specs;
  for (const auto& s : specs) m.column_ids.push_back(s.active_column_id());
  m.values = Matrix(dataset.pairs.size(), specs.size());
  m.degenerate.assign(dataset.pairs.size() * specs.size(), 0);
  m.gold.reserve(dataset.pairs.size());
  for (const auto& p : dataset.pairs) {
    m.gold.push_back(p.gold);
    m.pair_ids.push_back(p.id);
  }

  std::vector<PairContext> contexts;
  contexts.reserve(dataset.pairs.size());
  for (const auto& p : dataset.pairs) contexts.emplace_back(p, lemmatized);

  std::vector<detail::ColumnJob> jobs;
  for (std::size_t s = 0; s < specs.size(); ++s)
    jobs.push_back({s, specs[s].active_config, s});
  detail::run_jobs(jobs, threads, [&](const detail::ColumnJob& job) {
    detail::compute_column(job, m.specs, contexts, res, store, m.pair_ids, m.values,
                           m.degenerate);
  });
  return m;
}

/// Scores every config of every spec over the dataset.
inline FeatureTable build_table(const Dataset& dataset, const std::vector<FeatureSpec>& specs,
                                bool lemmatized, const Resources& res,
                                const FeatureStore* store = nullptr, int threads = 1) {
  if (specs.empty()) throw std::invalid_argument("build_table requires at least one feature");
  validate_registry(specs);
  detail::check_resources(specs, res);
  detail::prefetch_embeddings(specs, dataset, res);

  FeatureTable t;
  t.specs = specs;
  t.spec_offset.push_back(0);
  for (const auto& s : specs) {
    for (std::size_t c = 0; c < s.configs.size(); ++c) t.column_ids.push_back(s.column_id(c));
    t.spec_offset.push_back(t.column_ids.size());
  }
  t.values = Matrix(dataset.pairs.size(), t.column_ids.size());
  t.degenerate.assign(dataset.pairs.size() * t.column_ids.size(), 0);
  for (const auto& p : dataset.pairs) {
    t.gold.push_back(p.gold);
    t.pair_ids.push_back(p.id);
  }

  std::vector<PairContext> contexts;
  contexts.reserve(dataset.pairs.size());
  for (const auto& p : dataset.pairs) contexts.emplace_back(p, lemmatized);

  std::vector<detail::ColumnJob> jobs;
  for (std::size_t s = 0; s < specs.size(); ++s)
    for (std::size_t c = 0; c < specs[s].configs.size(); ++c)
      jobs.push_back({s, c, t.column_index(s, c)});
  detail::run_jobs(jobs, threads, [&](const detail::ColumnJob& job) {
    detail::compute_column(job, t.specs, contexts, res, store, t.pair_ids, t.values,
                           t.degenerate);
  });
  return t;
}

/// CSV export: header of column ids plus `gold`, full-precision values.
inline void export_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write CSV: " + path.string());
  for (const auto& id : m.column_ids) out << id << ',';
  out << "gold\n";
  char buf[64];
  for (std::size_t r = 0; r < m.values.rows; ++r) {
    for (std::size_t c = 0; c < m.values.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m.values.at(r, c));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", m.gold[r]);
    out << buf << '\n';
  }
}

}  // namespace stsim
