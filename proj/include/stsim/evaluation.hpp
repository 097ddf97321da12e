#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stsim/features.hpp"
#include "stsim/regression.hpp"
#include "stsim/rng.hpp"

namespace stsim {

struct PearsonResult {
  double r = 0.0;
  bool undefined = false;  // either side has zero variance
};

inline PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson inputs differ in length");
  if (x.size() < 2) throw std::invalid_argument("pearson needs at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  bool x_const = true, y_const = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
    x_const &= x[i] == x[0];
    y_const &= y[i] == y[0];
  }
  if (x_const || y_const || sxx <= 0.0 || syy <= 0.0) return {0.0, true};
  double r = sxy / std::sqrt(sxx * syy);
  return {std::clamp(r, -1.0, 1.0), false};
}

namespace detail {

/// Quantile strata over gold scores: ranks cut into `bins` equal slices, rows
/// with equal gold always sharing a stratum. Fewer rows than bins, or a
/// constant gold column, collapses to a single stratum.
inline std::vector<int> quantile_strata(std::span<const double> gold, int bins) {
  const std::size_t n = gold.size();
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");
  if (n < static_cast<std::size_t>(bins)) bins = 1;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return gold[a] != gold[b] ? gold[a] < gold[b] : a < b;
  });
  std::vector<int> strata(n, 0);
  for (std::size_t rank = 0; rank < n; ++rank) {
    std::size_t idx = order[rank];
    int s = static_cast<int>(rank * static_cast<std::size_t>(bins) / n);
    if (rank > 0 && gold[order[rank - 1]] == gold[idx]) s = strata[order[rank - 1]];
    strata[idx] = s;
  }
  return strata;
}

inline std::vector<std::vector<std::size_t>> stratum_buckets(const std::vector<int>& strata) {
  int max_s = 0;
  for (int s : strata) max_s = std::max(max_s, s);
  std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(max_s) + 1);
  for (std::size_t i = 0; i < strata.size(); ++i)
    buckets[static_cast<std::size_t>(strata[i])].push_back(i);
  return buckets;
}

}  // namespace detail

struct SplitResult {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
};

/// Seeded stratified train/holdout split. Train share per stratum is the
/// rounded fraction, so it stays within one row of the target everywhere.
inline SplitResult stratified_split(std::span<const double> gold, double train_fraction,
                                    int bins, std::uint64_t seed) {
  if (gold.empty()) throw std::invalid_argument("cannot split an empty dataset");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must be in (0, 1)");
  auto buckets = detail::stratum_buckets(detail::quantile_strata(gold, bins));
  Rng rng(seed);
  SplitResult out;
  for (auto& bucket : buckets) {
    if (bucket.empty()) continue;
    rng.shuffle(bucket);
    std::size_t n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(bucket.size()) + 0.5));
    n_train = std::min(n_train, bucket.size());
    out.train.insert(out.train.end(), bucket.begin(), bucket.begin() + n_train);
    out.holdout.insert(out.holdout.end(), bucket.begin() + n_train, bucket.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.holdout.begin(), out.holdout.end());
  return out;
}

struct CvPlan {
  int k = 0;
  std::vector<int> fold;  // one fold id per row, in [0, k)
};

/// Stratified k-fold assignment: shuffled strata dealt round robin with a
/// carried counter, so fold sizes differ by at most one row overall.
inline CvPlan stratified_kfold(std::span<const double> gold, int k, int bins,
                               std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k-fold needs k >= 2");
  if (static_cast<std::size_t>(k) > gold.size())
    throw std::invalid_argument("more folds than rows");
  auto buckets = detail::stratum_buckets(detail::quantile_strata(gold, bins));
  Rng rng(seed);
  CvPlan plan;
  plan.k = k;
  plan.fold.assign(gold.size(), 0);
  std::size_t counter = 0;
  for (auto& bucket : buckets) {
    if (bucket.empty()) continue;
    rng.shuffle(bucket);
    for (std::size_t idx : bucket) plan.fold[idx] = static_cast<int>(counter++ % static_cast<std::size_t>(k));
  }
  return plan;
}

struct CorrelationComparison {
  double delta_r = 0.0;  // r(a, gold) - r(b, gold) on the full sample
  double p_value = 1.0;
};

/// Paired bootstrap test for the difference between two predictors'
/// correlations with gold. Two-sided p from the resampled delta signs;
/// resamples with undefined correlation contribute r = 0.
inline CorrelationComparison compare_correlations(std::span<const double> pred_a,
                                                  std::span<const double> pred_b,
                                                  std::span<const double> gold,
                                                  int n_resamples, std::uint64_t seed) {
  const std::size_t n = gold.size();
  if (pred_a.size() != n || pred_b.size() != n)
    throw std::invalid_argument("prediction and gold lengths differ");
  if (n < 2) throw std::invalid_argument("need at least 2 rows to compare");
  if (n_resamples < 1) throw std::invalid_argument("n_resamples must be >= 1");

  auto r_of = [](std::span<const double> p, std::span<const double> g) {
    PearsonResult res = pearson(p, g);
    return res.undefined ? 0.0 : res.r;
  };
  CorrelationComparison out;
  out.delta_r = r_of(pred_a, gold) - r_of(pred_b, gold);

  Rng rng(seed);
  std::vector<double> ra(n), rb(n), rg(n);
  std::size_t le = 0, ge = 0;
  for (int it = 0; it < n_resamples; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j = rng.below(n);
      ra[i] = pred_a[j];
      rb[i] = pred_b[j];
      rg[i] = gold[j];
    }
    double d = r_of(ra, rg) - r_of(rb, rg);
    if (d <= 0.0) ++le;
    if (d >= 0.0) ++ge;
  }
  double frac = static_cast<double>(std::min(le, ge)) / static_cast<double>(n_resamples);
  out.p_value = std::min(1.0, 2.0 * frac);
  return out;
}

// ---------------------------------------------------------------------------
// Reports.

struct ReportEntry {
  std::string name;
  std::string block;  // char, term, vec, know, embed, or ml
  double pearson = 0.0;
  bool undefined = false;
  std::vector<std::string> selected_columns;
  std::string hyperparams;
};

enum class ReportFormat { markdown, csv };

inline ReportFormat report_format_from(const std::string& name) {
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  if (name == "csv") return ReportFormat::csv;
  throw std::invalid_argument("unknown report format '" + name +
                              "' (expected markdown or csv)");
}

/// Fit the chosen model on the train table's selected columns and score the
/// holdout rows against gold.
inline ReportEntry finalize(const ModelKind& kind,
                            const std::vector<std::pair<std::size_t, std::size_t>>& choices,
                            const FeatureTable& train, const FeatureTable& holdout,
                            std::uint64_t seed, const std::string& name) {
  if (holdout.values.rows == 0) throw std::runtime_error("holdout split is empty");
  if (train.values.rows < 2) throw std::runtime_error("train split needs at least 2 rows");
  if (choices.empty()) throw std::runtime_error("no features selected");
  std::vector<std::string> ids;
  ids.reserve(choices.size());
  for (auto [s, c] : choices) ids.push_back(train.specs[s].column_id(c));

  TrainedModel model = fit(kind, train.submatrix(choices), train.gold, ids, seed);
  std::vector<double> pred = predict(model, holdout.submatrix(choices), ids);
  PearsonResult r = pearson(pred, holdout.gold);

  ReportEntry entry;
  entry.name = name;
  entry.block = "ml";
  entry.pearson = r.r;
  entry.undefined = r.undefined;
  entry.selected_columns = std::move(ids);
  entry.hyperparams = kind.describe();
  return entry;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace detail

/// Render entries grouped into family blocks, best defined score per block
/// marked. Markdown rounds to 3 decimals; CSV keeps full precision.
inline std::string render_report(const std::vector<ReportEntry>& entries, ReportFormat format) {
  static const std::vector<std::string> known_blocks = {"char", "term",  "vec",
                                                        "know", "embed", "ml"};
  std::vector<std::string> blocks;
  for (const auto& b : known_blocks)
    for (const auto& e : entries)
      if (e.block == b) {
        blocks.push_back(b);
        break;
      }
  for (const auto& e : entries)
    if (std::find(blocks.begin(), blocks.end(), e.block) == blocks.end())
      blocks.push_back(e.block);

  auto best_in = [&](const std::string& block) -> const ReportEntry* {
    const ReportEntry* best = nullptr;
    for (const auto& e : entries)
      if (e.block == block && !e.undefined && (!best || e.pearson > best->pearson)) best = &e;
    return best;
  };

  std::ostringstream out;
  if (format == ReportFormat::markdown) {
    out << "# Similarity report\n";
    for (const auto& block : blocks) {
      out << "\n## " << block << "\n\n";
      out << "| method | pearson | hyperparameters | features |\n";
      out << "| --- | --- | --- | --- |\n";
      const ReportEntry* best = best_in(block);
      for (const auto& e : entries) {
        if (e.block != block) continue;
        char num[32];
        std::snprintf(num, sizeof num, "%.3f", e.pearson);
        std::string score = e.undefined ? std::string("n/a") : std::string(num);
        std::string name = e.name;
        if (best == &e) {
          score = "**" + score + "**";
          name = "**" + name + "**";
        }
        out << "| " << name << " | " << score << " | " << e.hyperparams << " | "
            << detail::join(e.selected_columns, ", ") << " |\n";
      }
    }
  } else {
    out << "block,method,pearson,undefined,best,hyperparameters,features\n";
    for (const auto& block : blocks) {
      const ReportEntry* best = best_in(block);
      for (const auto& e : entries) {
        if (e.block != block) continue;
        char num[64];
        std::snprintf(num, sizeof num, "%.17g", e.pearson);
        out << detail::csv_escape(e.block) << ',' << detail::csv_escape(e.name) << ',' << num
            << ',' << (e.undefined ? 1 : 0) << ',' << (best == &e ? 1 : 0) << ','
            << detail::csv_escape(e.hyperparams) << ','
            << detail::csv_escape(detail::join(e.selected_columns, ";")) << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace stsim
