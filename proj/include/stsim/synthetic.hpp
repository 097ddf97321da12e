#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stsim/rng.hpp"

namespace stsim {

/// One generated sentence pair with its gold score on the 0..5 scale.
struct SyntheticRow {
  double gold = 0.0;
  std::string a;
  std::string b;
};

namespace detail {

inline const std::vector<std::string>& synthetic_vocab() {
  static const std::vector<std::string> words = {
      "pes",     "mačka",   "dom",     "strom",   "rieka",  "mesto",  "auto",
      "vlak",    "kniha",   "stôl",    "okno",    "dvere",  "pole",   "hora",
      "les",     "more",    "slnko",   "mesiac",  "hviezda", "dieťa", "žena",
      "muž",     "učiteľ",  "škola",   "ulica",   "most",   "vietor", "dážď",
      "sneh",    "ráno",    "večer",   "noc",     "deň",    "rok",    "čas",
      "voda",    "oheň",    "zem",     "vzduch",  "kvet",   "tráva",  "vták",
      "ryba",    "kôň",     "mlieko",  "chlieb",  "soľ",    "med"};
  return words;
}

}  // namespace detail

/// Builds n seeded sentence pairs whose gold score is a clipped noisy affine
/// function of word overlap: raw = -1 + 7.5 * jaccard + U(-0.35, 0.35),
/// clamped to [0, 5]. Both clip plateaus carry real mass, so the relation
/// between overlap and gold is only piecewise linear.
inline std::vector<SyntheticRow> synthetic_pairs(std::size_t n, std::uint64_t seed) {
  const auto& vocab = detail::synthetic_vocab();
  Rng rng(seed);
  std::vector<SyntheticRow> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t la = 4 + rng.below(5);
    std::size_t lb = 4 + rng.below(5);

    std::vector<std::size_t> order(vocab.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    rng.shuffle(order);

    std::vector<std::string> words_a(la);
    for (std::size_t k = 0; k < la; ++k) words_a[k] = vocab[order[k]];

    std::size_t shared = rng.below(std::min(la, lb) + 1);
    std::vector<std::string> pool = words_a;
    rng.shuffle(pool);
    std::vector<std::string> words_b(pool.begin(),
                                     pool.begin() + static_cast<std::ptrdiff_t>(shared));
    for (std::size_t k = la; words_b.size() < lb; ++k) words_b.push_back(vocab[order[k]]);
    rng.shuffle(words_b);

    double jac = static_cast<double>(shared) / static_cast<double>(la + lb - shared);
    double raw = -1.0 + 7.5 * jac + rng.uniform(-0.35, 0.35);

    SyntheticRow row;
    row.gold = std::clamp(raw, 0.0, 5.0);
    for (std::size_t k = 0; k < la; ++k) {
      if (k) row.a += ' ';
      row.a += words_a[k];
    }
    for (std::size_t k = 0; k < lb; ++k) {
      if (k) row.b += ' ';
      row.b += words_b[k];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Writes the generated pairs as headerless score<TAB>a<TAB>b lines. Scores
/// are fixed to three decimals so regeneration is byte-identical.
inline void write_synthetic_dataset(const std::filesystem::path& path, std::size_t n,
                                    std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset: " + path.string());
  char score[32];
  for (const auto& row : synthetic_pairs(n, seed)) {
    std::snprintf(score, sizeof score, "%.3f", row.gold);
    out << score << '\t' << row.a << '\t' << row.b << '\n';
  }
}

}  // namespace stsim
