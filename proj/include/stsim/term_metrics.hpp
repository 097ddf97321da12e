#pragma once

#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace stsim {

enum class TermMetricKind { jaccard, sorensen_dice, overlap, cosine_tf, ochiai };

inline std::string term_metric_id(TermMetricKind k) {
  switch (k) {
    case TermMetricKind::jaccard: return "jaccard";
    case TermMetricKind::sorensen_dice: return "sorensen-dice";
    case TermMetricKind::overlap: return "overlap";
    case TermMetricKind::cosine_tf: return "cosine";
    case TermMetricKind::ochiai: return "ochiai";
  }
  return "";
}

/// Set metrics use distinct tokens; cosine uses term-frequency counts over
/// the union vocabulary. Both inputs empty gives 1, exactly one empty gives 0.
inline double term_similarity(TermMetricKind metric, std::span<const std::string> tokens_a,
                              std::span<const std::string> tokens_b) {
  if (tokens_a.empty() && tokens_b.empty()) return 1.0;
  if (tokens_a.empty() || tokens_b.empty()) return 0.0;

  if (metric == TermMetricKind::cosine_tf) {
    std::unordered_map<std::string, double> ca, cb;
    for (const auto& t : tokens_a) ca[t] += 1.0;
    for (const auto& t : tokens_b) cb[t] += 1.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [tok, c] : ca) {
      na += c * c;
      auto it = cb.find(tok);
      if (it != cb.end()) dot += c * it->second;
    }
    for (const auto& [tok, c] : cb) nb += c * c;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  }

  std::unordered_set<std::string> sa(tokens_a.begin(), tokens_a.end());
  std::unordered_set<std::string> sb(tokens_b.begin(), tokens_b.end());
  std::size_t inter = 0;
  for (const auto& t : sa)
    if (sb.count(t)) ++inter;
  double i = static_cast<double>(inter);
  double a = static_cast<double>(sa.size());
  double b = static_cast<double>(sb.size());
  switch (metric) {
    case TermMetricKind::jaccard: return i / (a + b - i);
    case TermMetricKind::sorensen_dice: return 2.0 * i / (a + b);
    case TermMetricKind::overlap: return i / std::min(a, b);
    case TermMetricKind::ochiai: return i / std::sqrt(a * b);
    case TermMetricKind::cosine_tf: break;  // handled above
  }
  return 0.0;
}

}  // namespace stsim
