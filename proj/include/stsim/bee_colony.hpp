#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stsim/evaluation.hpp"
#include "stsim/features.hpp"
#include "stsim/regression.hpp"
#include "stsim/rng.hpp"

namespace stsim {

struct HyperParam {
  enum class Kind { continuous, integer, categorical };
  std::string name;
  Kind kind = Kind::continuous;
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;
  int categories = 1;
};

/// Genome layout: one selector gene per feature spec, hyperparameter genes
/// appended in declaration order, every gene in [0, 1].
struct SearchSpace {
  std::vector<std::size_t> config_counts;  // per spec, each >= 1
  std::vector<HyperParam> hyperparams;

  std::size_t dimension() const { return config_counts.size() + hyperparams.size(); }
};

struct DecodedSolution {
  std::vector<std::pair<std::size_t, std::size_t>> selected;  // (spec, config)
  std::vector<double> hyper;  // decoded values; categorical as the index
};

inline double decode_hyper(const HyperParam& p, double x) {
  switch (p.kind) {
    case HyperParam::Kind::continuous:
      if (p.log_scale) return std::exp(std::log(p.lo) + x * (std::log(p.hi) - std::log(p.lo)));
      return p.lo + x * (p.hi - p.lo);
    case HyperParam::Kind::integer: {
      double v = p.lo + x * (p.hi - p.lo);
      double rounded = std::floor(v + 0.5);
      return std::min(p.hi, std::max(p.lo, rounded));
    }
    case HyperParam::Kind::categorical: {
      double idx = std::floor(x * static_cast<double>(p.categories));
      return std::min(idx, static_cast<double>(p.categories - 1));
    }
  }
  return 0.0;
}

/// Selector gene: below 0.5 the spec is off; otherwise [0.5, 1] spreads
/// uniformly over the spec's configs.
inline DecodedSolution decode(const std::vector<double>& position, const SearchSpace& space) {
  if (position.size() != space.dimension())
    throw std::invalid_argument("position length does not match search space");
  DecodedSolution sol;
  for (std::size_t s = 0; s < space.config_counts.size(); ++s) {
    double x = position[s];
    if (x < 0.5) continue;
    const double c = static_cast<double>(space.config_counts[s]);
    std::size_t cfg = static_cast<std::size_t>(std::floor((x - 0.5) / 0.5 * c));
    cfg = std::min(cfg, space.config_counts[s] - 1);
    sol.selected.emplace_back(s, cfg);
  }
  for (std::size_t h = 0; h < space.hyperparams.size(); ++h)
    sol.hyper.push_back(decode_hyper(space.hyperparams[h],
                                     position[space.config_counts.size() + h]));
  return sol;
}

inline std::vector<HyperParam> default_hyperparams(ModelKind::Family family) {
  using K = HyperParam::Kind;
  switch (family) {
    case ModelKind::Family::linear:
      return {};
    case ModelKind::Family::ridge:
      return {{"lambda", K::continuous, 1e-4, 1e2, true, 1}};
    case ModelKind::Family::tree:
      return {{"max_depth", K::integer, 2, 16, false, 1},
              {"min_leaf", K::integer, 1, 32, false, 1}};
    case ModelKind::Family::forest:
      return {{"n_trees", K::integer, 10, 300, false, 1},
              {"max_depth", K::integer, 2, 16, false, 1},
              {"min_leaf", K::integer, 1, 32, false, 1},
              {"feature_fraction", K::continuous, 0.1, 1.0, false, 1}};
    case ModelKind::Family::boosting:
      return {{"n_estimators", K::integer, 10, 500, false, 1},
              {"learning_rate", K::continuous, 0.01, 0.5, true, 1},
              {"max_depth", K::integer, 1, 6, false, 1},
              {"min_leaf", K::integer, 1, 32, false, 1}};
  }
  return {};
}

inline SearchSpace default_search_space(ModelKind::Family family,
                                        const std::vector<FeatureSpec>& specs) {
  SearchSpace space;
  for (const auto& s : specs) space.config_counts.push_back(s.configs.size());
  space.hyperparams = default_hyperparams(family);
  return space;
}

/// Build a concrete model from decoded hyperparameter values, in the same
/// order default_hyperparams declares them.
inline ModelKind make_kind(ModelKind::Family family, const std::vector<double>& hyper) {
  auto need = [&](std::size_t n) {
    if (hyper.size() != n) throw std::invalid_argument("hyperparameter count mismatch");
  };
  switch (family) {
    case ModelKind::Family::linear:
      need(0);
      return ModelKind::linear();
    case ModelKind::Family::ridge:
      need(1);
      return ModelKind::ridge(hyper[0]);
    case ModelKind::Family::tree:
      need(2);
      return ModelKind::decision_tree(static_cast<int>(hyper[0]), static_cast<int>(hyper[1]));
    case ModelKind::Family::forest:
      need(4);
      return ModelKind::random_forest(static_cast<int>(hyper[0]), static_cast<int>(hyper[1]),
                                      static_cast<int>(hyper[2]), hyper[3]);
    case ModelKind::Family::boosting:
      need(4);
      return ModelKind::gradient_boosting(static_cast<int>(hyper[0]), hyper[1],
                                          static_cast<int>(hyper[2]),
                                          static_cast<int>(hyper[3]));
  }
  throw std::invalid_argument("unknown model family");
}

// ---------------------------------------------------------------------------
// Artificial bee colony over [0, 1]^d, maximizing.

struct AbcConfig {
  int n_sources = 50;
  int n_onlookers = 0;  // 0 means same as n_sources
  int iterations = 100;
  int limit = 20;  // trials before a source is abandoned
  std::uint64_t seed = 0;
};

struct AbcResult {
  std::vector<double> best_position;
  double best_fitness = -std::numeric_limits<double>::infinity();
  std::vector<double> history;  // best-so-far after each iteration
  std::uint64_t evaluations = 0;
  std::uint64_t scout_resets = 0;
};

inline AbcResult optimize(const AbcConfig& cfg, std::size_t dimension,
                          const std::function<double(const std::vector<double>&)>& fitness) {
  if (cfg.n_sources < 2) throw std::invalid_argument("need at least 2 food sources");
  if (cfg.iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (cfg.limit < 1) throw std::invalid_argument("limit must be >= 1");
  if (cfg.n_onlookers < 0) throw std::invalid_argument("n_onlookers must be >= 0");
  if (dimension == 0) throw std::invalid_argument("dimension must be >= 1");
  const std::size_t n = static_cast<std::size_t>(cfg.n_sources);
  const std::size_t onlookers =
      cfg.n_onlookers == 0 ? n : static_cast<std::size_t>(cfg.n_onlookers);

  Rng rng(cfg.seed);
  AbcResult res;
  std::vector<std::vector<double>> x(n, std::vector<double>(dimension));
  std::vector<double> f(n);
  std::vector<int> trials(n, 0);

  auto eval = [&](const std::vector<double>& pos) {
    double v = fitness(pos);
    ++res.evaluations;
    if (v > res.best_fitness) {
      res.best_fitness = v;
      res.best_position = pos;
    }
    return v;
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (double& g : x[i]) g = rng.uniform01();
    f[i] = eval(x[i]);
  }

  // One random coordinate nudged toward or away from a random partner.
  auto perturb = [&](std::size_t i) {
    std::size_t j = rng.below(dimension);
    std::size_t k = rng.below(n - 1);
    if (k >= i) ++k;
    double phi = rng.uniform(-1.0, 1.0);
    std::vector<double> v = x[i];
    v[j] = clamp01(x[i][j] + phi * (x[i][j] - x[k][j]));
    return v;
  };
  auto try_improve = [&](std::size_t i) {
    std::vector<double> v = perturb(i);
    double fv = eval(v);
    if (fv > f[i]) {
      x[i] = std::move(v);
      f[i] = fv;
      trials[i] = 0;
    } else {
      ++trials[i];
    }
  };

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) try_improve(i);

    // Shifted fitness keeps the roulette weights nonnegative; fitness never
    // drops below -1.
    std::vector<double> weight(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      weight[i] = f[i] + 1.0;
      total += weight[i];
    }
    for (std::size_t o = 0; o < onlookers; ++o) {
      std::size_t pick;
      if (total > 0.0) {
        double t = rng.uniform01() * total;
        pick = 0;
        while (pick + 1 < n && t >= weight[pick]) {
          t -= weight[pick];
          ++pick;
        }
      } else {
        pick = rng.below(n);
      }
      try_improve(pick);
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (trials[i] <= cfg.limit) continue;
      for (double& g : x[i]) g = rng.uniform01();
      f[i] = eval(x[i]);
      trials[i] = 0;
      ++res.scout_resets;
    }
    res.history.push_back(res.best_fitness);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Cross-validated fitness over a feature table.

struct FitnessSetup {
  const FeatureTable* table = nullptr;
  ModelKind::Family family = ModelKind::Family::linear;
  SearchSpace space;
  CvPlan plan;
  std::uint64_t seed = 0;
};

/// Mean Pearson over the CV folds for the decoded selection and model.
/// Empty selections score -1; folds whose correlation is undefined, or too
/// small to fit or score, contribute 0.
inline double cv_fitness(const FitnessSetup& setup, const std::vector<double>& position) {
  const FeatureTable& table = *setup.table;
  DecodedSolution sol = decode(position, setup.space);
  if (sol.selected.empty()) return -1.0;
  ModelKind kind = make_kind(setup.family, sol.hyper);

  std::vector<std::string> ids;
  ids.reserve(sol.selected.size());
  for (auto [s, c] : sol.selected) ids.push_back(table.specs[s].column_id(c));
  Matrix X = table.submatrix(sol.selected);

  double sum = 0.0;
  for (int fold = 0; fold < setup.plan.k; ++fold) {
    std::vector<std::size_t> tr, te;
    for (std::size_t r = 0; r < X.rows; ++r)
      (setup.plan.fold[r] == fold ? te : tr).push_back(r);
    if (tr.size() < 2 || te.size() < 2) continue;

    Matrix Xtr(tr.size(), X.cols), Xte(te.size(), X.cols);
    std::vector<double> ytr(tr.size()), yte(te.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
      for (std::size_t c = 0; c < X.cols; ++c) Xtr.at(i, c) = X.at(tr[i], c);
      ytr[i] = table.gold[tr[i]];
    }
    for (std::size_t i = 0; i < te.size(); ++i) {
      for (std::size_t c = 0; c < X.cols; ++c) Xte.at(i, c) = X.at(te[i], c);
      yte[i] = table.gold[te[i]];
    }
    TrainedModel model =
        fit(kind, Xtr, ytr, ids, derive_seed(setup.seed, static_cast<std::uint64_t>(fold)));
    std::vector<double> pred = predict(model, Xte, ids);
    PearsonResult r = pearson(pred, yte);
    if (!r.undefined) sum += r.r;
  }
  return sum / static_cast<double>(setup.plan.k);
}

inline std::function<double(const std::vector<double>&)> make_cv_fitness(FitnessSetup setup) {
  return [setup = std::move(setup)](const std::vector<double>& pos) {
    return cv_fitness(setup, pos);
  };
}

}  // namespace stsim
