#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stsim/common.hpp"

namespace stsim {

struct JaroWinklerParams {
  double prefix_weight = 0.1;
  int max_prefix = 4;
};

struct AlignParams {
  double match = 1.0;
  double mismatch = -1.0;
  double gap = -1.0;
};

/// One of the character-based metrics, with its parameters where applicable.
class CharMetric {
 public:
  enum class Kind {
    hamming,
    levenshtein,
    damerau_levenshtein,
    jaro,
    jaro_winkler,
    needleman_wunsch,
    smith_waterman,
    lcs_seq,
    lcs_str,
  };

  static CharMetric hamming() { return CharMetric(Kind::hamming); }
  static CharMetric levenshtein() { return CharMetric(Kind::levenshtein); }
  static CharMetric damerau_levenshtein() { return CharMetric(Kind::damerau_levenshtein); }
  static CharMetric jaro() { return CharMetric(Kind::jaro); }
  static CharMetric jaro_winkler(JaroWinklerParams p = {}) {
    if (!(p.prefix_weight > 0.0 && p.prefix_weight <= 0.25))
      throw std::invalid_argument("jaro-winkler prefix weight must be in (0, 0.25]");
    if (p.max_prefix < 0 || p.max_prefix > 4)
      throw std::invalid_argument("jaro-winkler max prefix must be in 0..4");
    CharMetric m(Kind::jaro_winkler);
    m.jw_ = p;
    return m;
  }
  static CharMetric needleman_wunsch(AlignParams p = {}) {
    validate_align(p);
    CharMetric m(Kind::needleman_wunsch);
    m.align_ = p;
    return m;
  }
  static CharMetric smith_waterman(AlignParams p = {}) {
    validate_align(p);
    CharMetric m(Kind::smith_waterman);
    m.align_ = p;
    return m;
  }
  static CharMetric lcs_seq() { return CharMetric(Kind::lcs_seq); }
  static CharMetric lcs_str() { return CharMetric(Kind::lcs_str); }

  Kind kind() const { return kind_; }
  const JaroWinklerParams& jaro_winkler_params() const { return jw_; }
  const AlignParams& align_params() const { return align_; }

 private:
  explicit CharMetric(Kind k) : kind_(k) {}
  static void validate_align(const AlignParams& p) {
    if (!(p.match > 0.0 && p.mismatch <= 0.0 && p.gap <= 0.0))
      throw std::invalid_argument("alignment scores require match > 0 >= mismatch, gap");
  }

  Kind kind_;
  JaroWinklerParams jw_{};
  AlignParams align_{};
};

// ---------------------------------------------------------------------------
// Raw distances and scores.

/// Mismatches over the shared prefix of length min(|a|,|b|), plus the length
/// difference.
inline std::size_t hamming_distance(std::u32string_view a, std::u32string_view b) {
  std::size_t shorter = std::min(a.size(), b.size());
  std::size_t d = std::max(a.size(), b.size()) - shorter;
  for (std::size_t i = 0; i < shorter; ++i)
    if (a[i] != b[i]) ++d;
  return d;
}

inline std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Restricted Damerau-Levenshtein (adjacent transposition, no re-edit of a
/// transposed pair).
inline std::size_t damerau_levenshtein_distance(std::u32string_view a, std::u32string_view b) {
  std::size_t m = a.size(), n = b.size();
  std::vector<std::size_t> two(n + 1), one(n + 1), cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) one[j] = j;
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      std::size_t sub = one[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({one[j] + 1, cur[j - 1] + 1, sub});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1])
        cur[j] = std::min(cur[j], two[j - 2] + 1);
    }
    std::swap(two, one);
    std::swap(one, cur);
  }
  return one[n];
}

inline double jaro_similarity(std::u32string_view a, std::u32string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::size_t window = std::max(a.size(), b.size()) / 2;
  window = window > 0 ? window - 1 : 0;
  std::vector<bool> a_matched(a.size(), false), b_matched(b.size(), false);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t lo = i > window ? i - window : 0;
    std::size_t hi = std::min(b.size(), i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (!b_matched[j] && a[i] == b[j]) {
        a_matched[i] = b_matched[j] = true;
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;
  std::size_t transpositions = 0;
  for (std::size_t i = 0, j = 0; i < a.size(); ++i) {
    if (!a_matched[i]) continue;
    while (!b_matched[j]) ++j;
    if (a[i] != b[j]) ++transpositions;
    ++j;
  }
  double m = static_cast<double>(matches);
  double t = static_cast<double>(transpositions) / 2.0;
  return (m / static_cast<double>(a.size()) + m / static_cast<double>(b.size()) + (m - t) / m) / 3.0;
}

inline double jaro_winkler_similarity(std::u32string_view a, std::u32string_view b,
                                      JaroWinklerParams p = {}) {
  double j = jaro_similarity(a, b);
  std::size_t limit = std::min({a.size(), b.size(), static_cast<std::size_t>(p.max_prefix)});
  std::size_t prefix = 0;
  while (prefix < limit && a[prefix] == b[prefix]) ++prefix;
  return j + static_cast<double>(prefix) * p.prefix_weight * (1.0 - j);
}

inline double needleman_wunsch_score(std::u32string_view a, std::u32string_view b,
                                     AlignParams p = {}) {
  std::vector<double> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<double>(j) * p.gap;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<double>(i) * p.gap;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      double diag = prev[j - 1] + (a[i - 1] == b[j - 1] ? p.match : p.mismatch);
      cur[j] = std::max({diag, prev[j] + p.gap, cur[j - 1] + p.gap});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Maximal cell of the local-alignment DP.
inline double smith_waterman_score(std::u32string_view a, std::u32string_view b,
                                   AlignParams p = {}) {
  std::vector<double> prev(b.size() + 1, 0.0), cur(b.size() + 1, 0.0);
  double best = 0.0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = 0.0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      double diag = prev[j - 1] + (a[i - 1] == b[j - 1] ? p.match : p.mismatch);
      cur[j] = std::max({0.0, diag, prev[j] + p.gap, cur[j - 1] + p.gap});
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

inline std::size_t lcs_subsequence_length(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::size_t lcs_substring_length(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

// ---------------------------------------------------------------------------

/// Similarity in [0,1] under the given metric. Both inputs empty gives 1,
/// exactly one empty gives 0, for every metric.
inline double char_similarity(const CharMetric& metric, std::u32string_view a,
                              std::u32string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  double longer = static_cast<double>(std::max(a.size(), b.size()));
  switch (metric.kind()) {
    case CharMetric::Kind::hamming:
      return 1.0 - static_cast<double>(hamming_distance(a, b)) / longer;
    case CharMetric::Kind::levenshtein:
      return 1.0 - static_cast<double>(levenshtein_distance(a, b)) / longer;
    case CharMetric::Kind::damerau_levenshtein:
      return 1.0 - static_cast<double>(damerau_levenshtein_distance(a, b)) / longer;
    case CharMetric::Kind::jaro:
      return jaro_similarity(a, b);
    case CharMetric::Kind::jaro_winkler:
      return jaro_winkler_similarity(a, b, metric.jaro_winkler_params());
    case CharMetric::Kind::needleman_wunsch: {
      double score = needleman_wunsch_score(a, b, metric.align_params());
      double scale = longer * metric.align_params().match;
      return clamp01((score + scale) / (2.0 * scale));
    }
    case CharMetric::Kind::smith_waterman: {
      double score = smith_waterman_score(a, b, metric.align_params());
      double shorter = static_cast<double>(std::min(a.size(), b.size()));
      return clamp01(score / (metric.align_params().match * shorter));
    }
    case CharMetric::Kind::lcs_seq:
      return static_cast<double>(lcs_subsequence_length(a, b)) / longer;
    case CharMetric::Kind::lcs_str:
      return static_cast<double>(lcs_substring_length(a, b)) / longer;
  }
  return 0.0;
}

}  // namespace stsim
