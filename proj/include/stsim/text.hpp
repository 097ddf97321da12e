#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stsim/unicode.hpp"

namespace stsim {

/// Tokenization unit: whole words, or character n-grams (n in 1..4) taken
/// from the normalized character stream.
struct TokenMode {
  enum class Kind { word, char_ngram };
  Kind kind = Kind::word;
  int n = 1;

  static TokenMode word() { return TokenMode{Kind::word, 1}; }
  static TokenMode char_ngram(int n) {
    if (n < 1 || n > 4) throw std::invalid_argument("char n-gram size must be in 1..4");
    return TokenMode{Kind::char_ngram, n};
  }
  std::string label() const {
    return kind == Kind::word ? "word" : "char" + std::to_string(n);
  }
};

struct Sentence {
  std::string raw;
  std::vector<std::string> tokens;
  std::optional<std::vector<std::string>> lemmas;

  const std::vector<std::string>& effective_tokens(bool lemmatized) const {
    return (lemmatized && lemmas) ? *lemmas : tokens;
  }
};

struct SentencePair {
  std::string id;
  Sentence a;
  Sentence b;
  double gold = 0.0;
};

struct Dataset {
  std::string name;
  double scale_max = 5.0;
  std::vector<SentencePair> pairs;
};

enum class DatasetFormat { sts_benchmark_tsv, generic_tsv };

/// Normalized character stream: NFC, lowercase, whitespace runs collapsed
/// to a single space, outer whitespace trimmed. Punctuation is kept; this
/// is the input to the character-based metrics and to char n-gram tokens.
inline std::u32string char_stream(std::string_view text) {
  std::u32string norm = normalized_codepoints(text);
  std::u32string out;
  out.reserve(norm.size());
  bool pending_space = false;
  for (char32_t cp : norm) {
    if (is_space_char(cp)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(cp);
  }
  return out;
}

/// Word mode: lowercase NFC tokens split on non-letter/non-digit runs.
/// CharNGram(n): all contiguous n-grams of the normalized character stream.
inline std::vector<std::string> tokenize(std::string_view text, TokenMode mode) {
  std::vector<std::string> out;
  if (mode.kind == TokenMode::Kind::word) {
    std::u32string norm = normalized_codepoints(text);
    std::u32string cur;
    for (char32_t cp : norm) {
      if (is_word_char(cp)) {
        cur.push_back(cp);
      } else if (!cur.empty()) {
        out.push_back(encode_utf8(cur));
        cur.clear();
      }
    }
    if (!cur.empty()) out.push_back(encode_utf8(cur));
  } else {
    std::u32string stream = char_stream(text);
    int n = mode.n;
    if (static_cast<int>(stream.size()) >= n) {
      for (std::size_t i = 0; i + n <= stream.size(); ++i) {
        out.push_back(encode_utf8(std::u32string_view(stream).substr(i, n)));
      }
    }
  }
  return out;
}

inline Sentence make_sentence(std::string raw) {
  Sentence s;
  s.tokens = tokenize(raw, TokenMode::word());
  s.raw = std::move(raw);
  return s;
}

using LemmaMap = std::unordered_map<std::string, std::string>;

/// Substitutes dictionary lemmas token-by-token; unknown tokens stay as-is.
inline Sentence apply_lemmas(Sentence s, const LemmaMap& lemma_map) {
  std::vector<std::string> lemmas;
  lemmas.reserve(s.tokens.size());
  for (const auto& tok : s.tokens) {
    auto it = lemma_map.find(tok);
    lemmas.push_back(it != lemma_map.end() ? it->second : tok);
  }
  s.lemmas = std::move(lemmas);
  return s;
}

/// Lemma dictionary TSV: `surface<TAB>lemma`, later duplicates override.
inline LemmaMap load_lemma_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lemma map: " + path.string());
  LemmaMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw std::runtime_error("malformed lemma entry at line " + std::to_string(lineno) +
                               " in " + path.string());
    map[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return map;
}

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

inline double parse_score(const std::string& s, std::size_t lineno) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("unparsable score '" + s + "' at line " + std::to_string(lineno));
  }
  if (pos != s.size())
    throw std::runtime_error("unparsable score '" + s + "' at line " + std::to_string(lineno));
  return v;
}

inline std::string lower_ascii(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace detail

/// Loads a pair dataset. sts-benchmark-tsv is headerless
/// `score<TAB>sentence1<TAB>sentence2`; generic-tsv carries a header line
/// naming those three columns in any order. Pair ids are 1-based line numbers.
inline Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                            double scale_max = 5.0, std::string name = "") {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
  Dataset ds;
  ds.name = name.empty() ? path.stem().string() : std::move(name);
  ds.scale_max = scale_max;

  int score_col = 0, a_col = 1, b_col = 2;
  bool expect_header = (format == DatasetFormat::generic_tsv);

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = detail::split_tabs(line);
    if (expect_header) {
      if (cols.size() != 3)
        throw std::runtime_error("header must name 3 columns at line " + std::to_string(lineno));
      score_col = a_col = b_col = -1;
      for (int i = 0; i < 3; ++i) {
        std::string h = detail::lower_ascii(cols[static_cast<std::size_t>(i)]);
        if (h == "score") score_col = i;
        else if (h == "sentence1") a_col = i;
        else if (h == "sentence2") b_col = i;
        else throw std::runtime_error("unknown header column '" + cols[static_cast<std::size_t>(i)] +
                                      "' at line " + std::to_string(lineno));
      }
      if (score_col < 0 || a_col < 0 || b_col < 0)
        throw std::runtime_error("header missing score/sentence1/sentence2 at line " +
                                 std::to_string(lineno));
      expect_header = false;
      continue;
    }
    if (cols.size() != 3)
      throw std::runtime_error("expected 3 tab-separated columns, got " +
                               std::to_string(cols.size()) + " at line " + std::to_string(lineno));
    SentencePair pair;
    pair.id = std::to_string(lineno);
    pair.gold = detail::parse_score(cols[static_cast<std::size_t>(score_col)], lineno);
    if (pair.gold < 0.0 || pair.gold > ds.scale_max)
      throw std::runtime_error("score " + cols[static_cast<std::size_t>(score_col)] +
                               " outside [0, " + std::to_string(ds.scale_max) + "] at line " +
                               std::to_string(lineno));
    pair.a = make_sentence(cols[static_cast<std::size_t>(a_col)]);
    pair.b = make_sentence(cols[static_cast<std::size_t>(b_col)]);
    ds.pairs.push_back(std::move(pair));
  }
  return ds;
}

/// Applies a lemma dictionary to every sentence in the dataset.
inline void lemmatize_dataset(Dataset& ds, const LemmaMap& map) {
  for (auto& p : ds.pairs) {
    p.a = apply_lemmas(std::move(p.a), map);
    p.b = apply_lemmas(std::move(p.b), map);
  }
}

}  // namespace stsim
