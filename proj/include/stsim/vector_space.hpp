#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "stsim/common.hpp"
#include "stsim/text.hpp"

namespace stsim {

enum class VectorSource { hal, file, embedding_service };

/// Token vectors of a fixed dimension. The common container for HAL output,
/// word-vector files, and embedding-service word vectors.
struct WordVectors {
  std::unordered_map<std::string, std::size_t> vocab;
  std::size_t dim = 0;
  std::vector<double> matrix;  // row-major |vocab| x dim
  VectorSource source = VectorSource::file;

  std::span<const double> vector_of(std::size_t index) const {
    return std::span<const double>(matrix).subspan(index * dim, dim);
  }
  const std::size_t* index_of(const std::string& token) const {
    auto it = vocab.find(token);
    return it == vocab.end() ? nullptr : &it->second;
  }
};

struct VectorMetric {
  enum class Kind { cosine, euclidean, manhattan, minkowski };
  Kind kind = Kind::cosine;
  double p = 3.0;

  static VectorMetric cosine() { return {Kind::cosine, 0.0}; }
  static VectorMetric euclidean() { return {Kind::euclidean, 0.0}; }
  static VectorMetric manhattan() { return {Kind::manhattan, 0.0}; }
  static VectorMetric minkowski(double p) {
    if (p < 1.0) throw std::invalid_argument("minkowski order must be >= 1");
    return {Kind::minkowski, p};
  }
  std::string label() const {
    switch (kind) {
      case Kind::cosine: return "cos";
      case Kind::euclidean: return "euc";
      case Kind::manhattan: return "man";
      case Kind::minkowski: {
        std::ostringstream os;
        os << "mink" << p;
        return os.str();
      }
    }
    return "";
  }
};

/// Cosine is mapped to [0,1] as (1+cos)/2; distances as 1/(1+d). A zero
/// vector under cosine yields 0 with the degenerate flag set.
inline SimScore vector_similarity(const VectorMetric& metric, std::span<const double> u,
                                  std::span<const double> v) {
  if (u.size() != v.size())
    throw std::invalid_argument("vector dimension mismatch: " + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()));
  switch (metric.kind) {
    case VectorMetric::Kind::cosine: {
      double dot = 0.0, nu = 0.0, nv = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
      }
      if (nu == 0.0 || nv == 0.0) return {0.0, true};
      double c = dot / (std::sqrt(nu) * std::sqrt(nv));
      return {clamp01((1.0 + c) / 2.0), false};
    }
    case VectorMetric::Kind::euclidean: {
      double s = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
      return {1.0 / (1.0 + std::sqrt(s)), false};
    }
    case VectorMetric::Kind::manhattan: {
      double s = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) s += std::fabs(u[i] - v[i]);
      return {1.0 / (1.0 + s), false};
    }
    case VectorMetric::Kind::minkowski: {
      double s = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) s += std::pow(std::fabs(u[i] - v[i]), metric.p);
      return {1.0 / (1.0 + std::pow(s, 1.0 / metric.p)), false};
    }
  }
  return {0.0, true};
}

enum class Aggregation { mean_vector, best_match };

inline std::string aggregation_label(Aggregation a) {
  return a == Aggregation::mean_vector ? "mean" : "best";
}

/// Lifts word vectors to a sentence score. mean-vector averages in-vocabulary
/// token vectors and compares once; best-match averages per-token maxima and
/// symmetrizes over both directions. Sentences with no in-vocabulary token
/// yield 0 with the degenerate flag.
inline SimScore sentence_similarity(const WordVectors& vectors, const VectorMetric& metric,
                                    Aggregation agg, std::span<const std::string> a,
                                    std::span<const std::string> b) {
  std::vector<std::size_t> ia, ib;
  for (const auto& t : a)
    if (const auto* idx = vectors.index_of(t)) ia.push_back(*idx);
  for (const auto& t : b)
    if (const auto* idx = vectors.index_of(t)) ib.push_back(*idx);
  if (ia.empty() || ib.empty()) return {0.0, true};

  if (agg == Aggregation::mean_vector) {
    std::vector<double> ma(vectors.dim, 0.0), mb(vectors.dim, 0.0);
    for (auto i : ia) {
      auto row = vectors.vector_of(i);
      for (std::size_t d = 0; d < vectors.dim; ++d) ma[d] += row[d];
    }
    for (auto i : ib) {
      auto row = vectors.vector_of(i);
      for (std::size_t d = 0; d < vectors.dim; ++d) mb[d] += row[d];
    }
    for (std::size_t d = 0; d < vectors.dim; ++d) {
      ma[d] /= static_cast<double>(ia.size());
      mb[d] /= static_cast<double>(ib.size());
    }
    return vector_similarity(metric, ma, mb);
  }

  auto direction = [&](const std::vector<std::size_t>& from, const std::vector<std::size_t>& to) {
    double sum = 0.0;
    for (auto i : from) {
      double best = 0.0;
      for (auto j : to)
        best = std::max(best, vector_similarity(metric, vectors.vector_of(i),
                                                vectors.vector_of(j)).value);
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return {(direction(ia, ib) + direction(ib, ia)) / 2.0, false};
}

// ---------------------------------------------------------------------------
// HAL co-occurrence model.

/// Windowed, distance-weighted co-occurrence counts. For the ordered pair
/// (t, c) with c at distance d (1..window) after t, weight window - d + 1 is
/// added to rows[t][c] and to cols[c][t]. A token's vector is its row
/// concatenated with its column, dimension 2 * |vocab|.
struct CooccurrenceModel {
  std::vector<std::string> tokens;  // index -> token, frequency-ranked
  std::unordered_map<std::string, std::uint32_t> vocab;
  int window = 10;
  int min_count = 2;
  std::vector<std::map<std::uint32_t, double>> rows;
  std::vector<std::map<std::uint32_t, double>> cols;

  bool same_as(const CooccurrenceModel& o) const {
    return tokens == o.tokens && window == o.window && min_count == o.min_count &&
           rows == o.rows && cols == o.cols;
  }

  WordVectors to_word_vectors() const {
    WordVectors wv;
    wv.source = VectorSource::hal;
    wv.dim = 2 * tokens.size();
    wv.matrix.assign(tokens.size() * wv.dim, 0.0);
    for (std::uint32_t t = 0; t < tokens.size(); ++t) {
      wv.vocab[tokens[t]] = t;
      double* row = wv.matrix.data() + static_cast<std::size_t>(t) * wv.dim;
      for (const auto& [c, w] : rows[t]) row[c] = w;
      for (const auto& [c, w] : cols[t]) row[tokens.size() + c] = w;
    }
    return wv;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write HAL model: " + path.string());
    auto put_u32 = [&](std::uint32_t v) {
      unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                            static_cast<unsigned char>(v >> 16),
                            static_cast<unsigned char>(v >> 24)};
      out.write(reinterpret_cast<const char*>(b), 4);
    };
    auto put_f64 = [&](double d) {
      std::uint64_t v;
      std::memcpy(&v, &d, 8);
      unsigned char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
      out.write(reinterpret_cast<const char*>(b), 8);
    };
    out.write("HALM", 4);
    put_u32(1);  // format version
    put_u32(static_cast<std::uint32_t>(window));
    put_u32(static_cast<std::uint32_t>(min_count));
    put_u32(static_cast<std::uint32_t>(tokens.size()));
    for (const auto& t : tokens) {
      put_u32(static_cast<std::uint32_t>(t.size()));
      out.write(t.data(), static_cast<std::streamsize>(t.size()));
    }
    std::uint64_t cells = 0;
    for (const auto& r : rows) cells += r.size();
    put_u32(static_cast<std::uint32_t>(cells));
    for (std::uint32_t t = 0; t < rows.size(); ++t) {
      for (const auto& [c, w] : rows[t]) {
        put_u32(t);
        put_u32(c);
        put_f64(w);
      }
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }

  static CooccurrenceModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open HAL model: " + path.string());
    auto get_u32 = [&]() {
      unsigned char b[4];
      in.read(reinterpret_cast<char*>(b), 4);
      if (!in) throw std::runtime_error("truncated HAL model: " + path.string());
      return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
             (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    };
    auto get_f64 = [&]() {
      unsigned char b[8];
      in.read(reinterpret_cast<char*>(b), 8);
      if (!in) throw std::runtime_error("truncated HAL model: " + path.string());
      std::uint64_t v = 0;
      for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
      double d;
      std::memcpy(&d, &v, 8);
      return d;
    };
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string_view(magic, 4) != "HALM")
      throw std::runtime_error("not a HAL model file: " + path.string());
    std::uint32_t version = get_u32();
    if (version != 1)
      throw std::runtime_error("unsupported HAL model version " + std::to_string(version));
    CooccurrenceModel m;
    m.window = static_cast<int>(get_u32());
    m.min_count = static_cast<int>(get_u32());
    std::uint32_t vocab_size = get_u32();
    m.tokens.resize(vocab_size);
    for (std::uint32_t i = 0; i < vocab_size; ++i) {
      std::uint32_t len = get_u32();
      std::string t(len, '\0');
      in.read(t.data(), len);
      if (!in) throw std::runtime_error("truncated HAL model: " + path.string());
      m.vocab[t] = i;
      m.tokens[i] = std::move(t);
    }
    m.rows.resize(vocab_size);
    m.cols.resize(vocab_size);
    std::uint32_t cells = get_u32();
    for (std::uint32_t i = 0; i < cells; ++i) {
      std::uint32_t t = get_u32();
      std::uint32_t c = get_u32();
      double w = get_f64();
      if (t >= vocab_size || c >= vocab_size)
        throw std::runtime_error("corrupt HAL model cell index in " + path.string());
      m.rows[t][c] = w;
      m.cols[c][t] = w;
    }
    return m;
  }
};

/// Builds a HAL model from a plain-text corpus, one document or sentence per
/// line; windows do not cross lines. Streams the file twice: first for
/// frequency-based vocabulary selection, then for weight accumulation.
/// Dropped tokens still occupy stream positions for distance purposes.
inline CooccurrenceModel build_hal(const std::filesystem::path& corpus_path, int window,
                                   int min_count = 2, std::size_t max_vocab = 50000) {
  if (window < 1) throw std::invalid_argument("HAL window must be >= 1");
  std::ifstream in(corpus_path);
  if (!in) throw std::runtime_error("cannot open corpus: " + corpus_path.string());

  std::unordered_map<std::string, std::uint64_t> counts;
  std::string line;
  std::uint64_t total_tokens = 0;
  while (std::getline(in, line)) {
    for (auto& t : tokenize(line, TokenMode::word())) {
      ++counts[t];
      ++total_tokens;
    }
  }
  if (total_tokens == 0) throw std::runtime_error("empty corpus: " + corpus_path.string());

  std::vector<std::pair<std::string, std::uint64_t>> ranked;
  ranked.reserve(counts.size());
  for (auto& [t, c] : counts)
    if (c >= static_cast<std::uint64_t>(min_count)) ranked.emplace_back(t, c);
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });
  if (ranked.size() > max_vocab) ranked.resize(max_vocab);

  CooccurrenceModel m;
  m.window = window;
  m.min_count = min_count;
  m.tokens.reserve(ranked.size());
  for (std::uint32_t i = 0; i < ranked.size(); ++i) {
    m.vocab[ranked[i].first] = i;
    m.tokens.push_back(ranked[i].first);
  }
  m.rows.resize(m.tokens.size());
  m.cols.resize(m.tokens.size());

  in.clear();
  in.seekg(0);
  while (std::getline(in, line)) {
    auto toks = tokenize(line, TokenMode::word());
    std::vector<const std::uint32_t*> ids(toks.size());
    for (std::size_t i = 0; i < toks.size(); ++i) {
      auto it = m.vocab.find(toks[i]);
      ids[i] = it == m.vocab.end() ? nullptr : &it->second;
    }
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (!ids[i]) continue;
      for (int d = 1; d <= window && i + static_cast<std::size_t>(d) < toks.size(); ++d) {
        const auto* cid = ids[i + static_cast<std::size_t>(d)];
        if (!cid) continue;
        double w = static_cast<double>(window - d + 1);
        m.rows[*ids[i]][*cid] += w;
        m.cols[*cid][*ids[i]] += w;
      }
    }
  }
  return m;
}

/// Word-vector text file: optional `count dim` header, then `token v1 .. vd`
/// per line. Duplicate tokens keep the last entry.
inline WordVectors load_word_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open word vectors: " + path.string());
  WordVectors wv;
  wv.source = VectorSource::file;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string f;
    while (ss >> f) fields.push_back(f);
    if (first) {
      first = false;
      if (fields.size() == 2) {
        // word2vec-style header: two integers.
        auto is_uint = [](const std::string& s) {
          return !s.empty() && std::all_of(s.begin(), s.end(),
                                           [](unsigned char c) { return std::isdigit(c); });
        };
        if (is_uint(fields[0]) && is_uint(fields[1])) continue;
      }
    }
    if (fields.size() < 2)
      throw std::runtime_error("malformed vector line " + std::to_string(lineno) + " in " +
                               path.string());
    std::size_t d = fields.size() - 1;
    if (wv.dim == 0) {
      wv.dim = d;
    } else if (d != wv.dim) {
      throw std::runtime_error("inconsistent dimension " + std::to_string(d) + " (expected " +
                               std::to_string(wv.dim) + ") at line " + std::to_string(lineno) +
                               " in " + path.string());
    }
    std::vector<double> vec(d);
    for (std::size_t i = 0; i < d; ++i) {
      std::size_t pos = 0;
      try {
        vec[i] = std::stod(fields[i + 1], &pos);
      } catch (const std::exception&) {
        pos = std::string::npos;
      }
      if (pos != fields[i + 1].size() || !std::isfinite(vec[i]))
        throw std::runtime_error("non-numeric vector component at line " + std::to_string(lineno) +
                                 " in " + path.string());
    }
    auto it = wv.vocab.find(fields[0]);
    if (it != wv.vocab.end()) {
      std::copy(vec.begin(), vec.end(), wv.matrix.begin() + static_cast<std::ptrdiff_t>(it->second * wv.dim));
    } else {
      wv.vocab[fields[0]] = wv.matrix.size() / wv.dim;
      wv.matrix.insert(wv.matrix.end(), vec.begin(), vec.end());
    }
  }
  if (wv.dim == 0) throw std::runtime_error("no vectors in " + path.string());
  return wv;
}

}  // namespace stsim
