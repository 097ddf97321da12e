#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stsim/common.hpp"
#include "stsim/rng.hpp"

namespace stsim {

struct ModelKind {
  enum class Family { linear, ridge, tree, forest, boosting };

  Family family = Family::linear;
  double lambda = 0.0;
  int max_depth = 6;
  int min_leaf = 1;
  int n_trees = 100;
  double feature_fraction = 1.0;
  int n_estimators = 100;
  double learning_rate = 0.1;

  static ModelKind linear() { return ModelKind{}; }
  static ModelKind ridge(double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("ridge lambda must be >= 0");
    ModelKind k;
    k.family = Family::ridge;
    k.lambda = lambda;
    return k;
  }
  static ModelKind decision_tree(int max_depth, int min_leaf) {
    check_tree(max_depth, min_leaf);
    ModelKind k;
    k.family = Family::tree;
    k.max_depth = max_depth;
    k.min_leaf = min_leaf;
    return k;
  }
  static ModelKind random_forest(int n_trees, int max_depth, int min_leaf,
                                 double feature_fraction) {
    check_tree(max_depth, min_leaf);
    if (n_trees < 1) throw std::invalid_argument("forest needs n_trees >= 1");
    if (!(feature_fraction > 0.0 && feature_fraction <= 1.0))
      throw std::invalid_argument("feature_fraction must be in (0, 1]");
    ModelKind k;
    k.family = Family::forest;
    k.n_trees = n_trees;
    k.max_depth = max_depth;
    k.min_leaf = min_leaf;
    k.feature_fraction = feature_fraction;
    return k;
  }
  static ModelKind gradient_boosting(int n_estimators, double learning_rate, int max_depth,
                                     int min_leaf) {
    check_tree(max_depth, min_leaf);
    if (n_estimators < 1) throw std::invalid_argument("boosting needs n_estimators >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
      throw std::invalid_argument("learning_rate must be in (0, 1]");
    ModelKind k;
    k.family = Family::boosting;
    k.n_estimators = n_estimators;
    k.learning_rate = learning_rate;
    k.max_depth = max_depth;
    k.min_leaf = min_leaf;
    return k;
  }

  std::string id() const { return family_name(family); }

  static std::string family_name(Family f) {
    switch (f) {
      case Family::linear: return "linear";
      case Family::ridge: return "ridge";
      case Family::tree: return "tree";
      case Family::forest: return "forest";
      case Family::boosting: return "boosting";
    }
    return "";
  }

  static Family family_from(const std::string& name) {
    for (auto f : {Family::linear, Family::ridge, Family::tree, Family::forest, Family::boosting})
      if (family_name(f) == name) return f;
    throw std::invalid_argument("unknown model '" + name +
                                "' (expected linear, ridge, tree, forest, or boosting)");
  }

  /// Human-readable parameter string for reports.
  std::string describe() const {
    auto num = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", v);
      return std::string(buf);
    };
    switch (family) {
      case Family::linear: return "linear";
      case Family::ridge: return "ridge(lambda=" + num(lambda) + ")";
      case Family::tree:
        return "tree(max_depth=" + std::to_string(max_depth) +
               ", min_leaf=" + std::to_string(min_leaf) + ")";
      case Family::forest:
        return "forest(n_trees=" + std::to_string(n_trees) +
               ", max_depth=" + std::to_string(max_depth) +
               ", min_leaf=" + std::to_string(min_leaf) +
               ", feature_fraction=" + num(feature_fraction) + ")";
      case Family::boosting:
        return "boosting(n_estimators=" + std::to_string(n_estimators) +
               ", learning_rate=" + num(learning_rate) +
               ", max_depth=" + std::to_string(max_depth) +
               ", min_leaf=" + std::to_string(min_leaf) + ")";
    }
    return "";
  }

 private:
  static void check_tree(int max_depth, int min_leaf) {
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (min_leaf < 1) throw std::invalid_argument("min_leaf must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Regression trees.

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict_row(std::span<const double> x) const {
    int n = 0;
    while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
      const TreeNode& node = nodes[static_cast<std::size_t>(n)];
      n = x[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(n)].value;
  }
};

namespace detail {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double reduction = 0.0;
};

/// Greedy best split by MSE reduction over midpoints of sorted distinct
/// values. Ties go to the lowest feature index, then the lowest threshold;
/// the ascending scan with strict improvement enforces both.
inline SplitChoice best_split(const Matrix& X, std::span<const double> y,
                              const std::vector<std::size_t>& rows,
                              const std::vector<int>& features, int min_leaf) {
  SplitChoice best;
  const std::size_t n = rows.size();
  double sum = 0.0, sq = 0.0;
  for (std::size_t r : rows) {
    sum += y[r];
    sq += y[r] * y[r];
  }
  double parent_sse = std::max(0.0, sq - sum * sum / static_cast<double>(n));

  std::vector<std::pair<double, double>> vals(n);
  for (int f : features) {
    for (std::size_t i = 0; i < n; ++i)
      vals[i] = {X.at(rows[i], static_cast<std::size_t>(f)), y[rows[i]]};
    std::sort(vals.begin(), vals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double ls = 0.0, lq = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ls += vals[i].second;
      lq += vals[i].second * vals[i].second;
      if (!(vals[i].first < vals[i + 1].first)) continue;
      std::size_t left_n = i + 1, right_n = n - left_n;
      if (left_n < static_cast<std::size_t>(min_leaf) ||
          right_n < static_cast<std::size_t>(min_leaf))
        continue;
      double left_sse = std::max(0.0, lq - ls * ls / static_cast<double>(left_n));
      double rs = sum - ls, rq = sq - lq;
      double right_sse = std::max(0.0, rq - rs * rs / static_cast<double>(right_n));
      double reduction = parent_sse - left_sse - right_sse;
      if (reduction > best.reduction) {
        best.found = true;
        best.feature = f;
        best.threshold = (vals[i].first + vals[i + 1].first) / 2.0;
        best.reduction = reduction;
      }
    }
  }
  if (best.found && !(best.reduction > 0.0)) best.found = false;
  return best;
}

/// rng == nullptr uses all features at every split; otherwise samples
/// `n_split_features` distinct features per split.
inline RegressionTree fit_tree(const Matrix& X, std::span<const double> y,
                               const std::vector<std::size_t>& rows, int max_depth, int min_leaf,
                               int n_split_features, Rng* rng) {
  RegressionTree tree;
  struct Frame {
    std::vector<std::size_t> rows;
    int depth;
    int node;
  };
  auto mean_of = [&](const std::vector<std::size_t>& rs) {
    double s = 0.0;
    for (std::size_t r : rs) s += y[r];
    return s / static_cast<double>(rs.size());
  };

  std::vector<int> all_features(X.cols);
  for (std::size_t f = 0; f < X.cols; ++f) all_features[f] = static_cast<int>(f);

  tree.nodes.push_back({});
  std::vector<Frame> stack;
  stack.push_back({rows, 0, 0});
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(frame.node)];
    node.value = mean_of(frame.rows);
    if (frame.depth >= max_depth || frame.rows.size() < 2 * static_cast<std::size_t>(min_leaf))
      continue;

    std::vector<int> features;
    if (!rng || n_split_features >= static_cast<int>(X.cols)) {
      features = all_features;
    } else {
      // Partial Fisher-Yates draw, then ascending order for the tie rule.
      std::vector<int> pool = all_features;
      for (int k = 0; k < n_split_features; ++k) {
        std::size_t j = static_cast<std::size_t>(k) + rng->below(pool.size() - static_cast<std::size_t>(k));
        std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
      }
      features.assign(pool.begin(), pool.begin() + n_split_features);
      std::sort(features.begin(), features.end());
    }

    SplitChoice split = best_split(X, y, frame.rows, features, min_leaf);
    if (!split.found) continue;

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : frame.rows) {
      if (X.at(r, static_cast<std::size_t>(split.feature)) < split.threshold)
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }
    int left = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    int right = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    TreeNode& parent = tree.nodes[static_cast<std::size_t>(frame.node)];
    parent.feature = split.feature;
    parent.threshold = split.threshold;
    parent.left = left;
    parent.right = right;
    stack.push_back({std::move(right_rows), frame.depth + 1, right});
    stack.push_back({std::move(left_rows), frame.depth + 1, left});
  }
  return tree;
}

/// Gaussian elimination with partial pivoting; A is overwritten.
inline std::vector<double> solve_linear_system(Matrix A, std::vector<double> b) {
  const std::size_t n = A.rows;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(A.at(r, col)) > std::fabs(A.at(pivot, col))) pivot = r;
    if (A.at(pivot, col) == 0.0) throw std::runtime_error("singular normal-equation system");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(A.at(pivot, c), A.at(col, c));
      std::swap(b[pivot], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      double factor = A.at(r, col) / A.at(col, col);
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) A.at(r, c) -= factor * A.at(col, c);
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= A.at(i, c) * x[c];
    x[i] = s / A.at(i, i);
  }
  return x;
}

/// Normal equations (X'X + (lambda+eps) I) beta = X'y over X with an
/// appended all-ones intercept column.
inline std::vector<double> fit_least_squares(const Matrix& X, std::span<const double> y,
                                             double lambda) {
  const std::size_t n = X.rows, f = X.cols, d = f + 1;
  Matrix A(d, d);
  std::vector<double> b(d, 0.0);
  auto cell = [&](std::size_t r, std::size_t c) { return c < f ? X.at(r, c) : 1.0; };
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += cell(r, i) * cell(r, j);
      A.at(i, j) = A.at(j, i) = s;
    }
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += cell(r, i) * y[r];
    b[i] = s;
  }
  const double eps = 1e-10;
  for (std::size_t i = 0; i < d; ++i) A.at(i, i) += lambda + eps;
  return solve_linear_system(std::move(A), std::move(b));
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// A fitted model: coefficients for linear kinds, trees otherwise, plus the
/// feature ids it was trained on. predict demands the same ids in the same
/// order.
struct TrainedModel {
  ModelKind kind;
  std::vector<std::string> feature_ids;
  std::vector<double> coef;  // linear/ridge: one per feature, intercept last
  double base = 0.0;         // boosting start value
  std::vector<RegressionTree> trees;
};

inline TrainedModel fit(const ModelKind& kind, const Matrix& X, std::span<const double> y,
                        const std::vector<std::string>& feature_ids, std::uint64_t seed) {
  if (X.rows != y.size()) throw std::invalid_argument("X and y row counts differ");
  if (X.rows < 2) throw std::invalid_argument("fit requires at least 2 rows");
  if (X.cols != feature_ids.size())
    throw std::invalid_argument("feature id count does not match X columns");
  for (double v : X.data)
    if (std::isnan(v)) throw std::invalid_argument("X contains NaN");
  for (double v : y)
    if (std::isnan(v)) throw std::invalid_argument("y contains NaN");

  TrainedModel m;
  m.kind = kind;
  m.feature_ids = feature_ids;

  std::vector<std::size_t> all_rows(X.rows);
  for (std::size_t r = 0; r < X.rows; ++r) all_rows[r] = r;

  switch (kind.family) {
    case ModelKind::Family::linear:
      m.coef = detail::fit_least_squares(X, y, 0.0);
      break;
    case ModelKind::Family::ridge:
      m.coef = detail::fit_least_squares(X, y, kind.lambda);
      break;
    case ModelKind::Family::tree:
      m.trees.push_back(detail::fit_tree(X, y, all_rows, kind.max_depth, kind.min_leaf,
                                         static_cast<int>(X.cols), nullptr));
      break;
    case ModelKind::Family::forest: {
      int per_split = static_cast<int>(
          std::ceil(kind.feature_fraction * static_cast<double>(X.cols)));
      per_split = std::max(1, per_split);
      for (int t = 0; t < kind.n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> bag(X.rows);
        for (std::size_t r = 0; r < X.rows; ++r) bag[r] = rng.below(X.rows);
        m.trees.push_back(
            detail::fit_tree(X, y, bag, kind.max_depth, kind.min_leaf, per_split, &rng));
      }
      break;
    }
    case ModelKind::Family::boosting: {
      double sum = 0.0;
      for (double v : y) sum += v;
      m.base = sum / static_cast<double>(y.size());
      std::vector<double> residual(y.begin(), y.end());
      for (double& r : residual) r -= m.base;
      for (int stage = 0; stage < kind.n_estimators; ++stage) {
        RegressionTree tree = detail::fit_tree(X, residual, all_rows, kind.max_depth,
                                               kind.min_leaf, static_cast<int>(X.cols), nullptr);
        for (std::size_t r = 0; r < X.rows; ++r)
          residual[r] -= kind.learning_rate * tree.predict_row(X.row(r));
        m.trees.push_back(std::move(tree));
      }
      break;
    }
  }
  return m;
}

inline std::vector<double> predict(const TrainedModel& m, const Matrix& X,
                                   const std::vector<std::string>& feature_ids) {
  if (feature_ids != m.feature_ids)
    throw std::invalid_argument("prediction feature columns do not match training");
  if (X.cols != m.feature_ids.size())
    throw std::invalid_argument("X column count does not match model");
  std::vector<double> out(X.rows, 0.0);
  switch (m.kind.family) {
    case ModelKind::Family::linear:
    case ModelKind::Family::ridge:
      for (std::size_t r = 0; r < X.rows; ++r) {
        double s = m.coef.back();
        for (std::size_t c = 0; c < X.cols; ++c) s += m.coef[c] * X.at(r, c);
        out[r] = s;
      }
      break;
    case ModelKind::Family::tree:
      for (std::size_t r = 0; r < X.rows; ++r) out[r] = m.trees[0].predict_row(X.row(r));
      break;
    case ModelKind::Family::forest:
      for (std::size_t r = 0; r < X.rows; ++r) {
        double s = 0.0;
        for (const auto& t : m.trees) s += t.predict_row(X.row(r));
        out[r] = s / static_cast<double>(m.trees.size());
      }
      break;
    case ModelKind::Family::boosting:
      for (std::size_t r = 0; r < X.rows; ++r) {
        double s = m.base;
        for (const auto& t : m.trees) s += m.kind.learning_rate * t.predict_row(X.row(r));
        out[r] = s;
      }
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization. JSON keeps doubles round-trip exact, so load-then-predict
// matches the original model bit for bit.

inline nlohmann::json to_json(const TrainedModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  return nlohmann::json{
      {"version", 1},
      {"kind",
       {{"family", m.kind.id()},
        {"lambda", m.kind.lambda},
        {"max_depth", m.kind.max_depth},
        {"min_leaf", m.kind.min_leaf},
        {"n_trees", m.kind.n_trees},
        {"feature_fraction", m.kind.feature_fraction},
        {"n_estimators", m.kind.n_estimators},
        {"learning_rate", m.kind.learning_rate}}},
      {"feature_ids", m.feature_ids},
      {"coef", m.coef},
      {"base", m.base},
      {"trees", std::move(trees)}};
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw std::runtime_error("unsupported model file version");
  TrainedModel m;
  const auto& k = j.at("kind");
  m.kind.family = ModelKind::family_from(k.at("family").get<std::string>());
  m.kind.lambda = k.at("lambda").get<double>();
  m.kind.max_depth = k.at("max_depth").get<int>();
  m.kind.min_leaf = k.at("min_leaf").get<int>();
  m.kind.n_trees = k.at("n_trees").get<int>();
  m.kind.feature_fraction = k.at("feature_fraction").get<double>();
  m.kind.n_estimators = k.at("n_estimators").get<int>();
  m.kind.learning_rate = k.at("learning_rate").get<double>();
  m.feature_ids = j.at("feature_ids").get<std::vector<std::string>>();
  m.coef = j.at("coef").get<std::vector<double>>();
  m.base = j.at("base").get<double>();
  for (const auto& tj : j.at("trees")) {
    RegressionTree t;
    for (const auto& nj : tj) {
      TreeNode n;
      n.feature = nj.at(0).get<int>();
      n.threshold = nj.at(1).get<double>();
      n.left = nj.at(2).get<int>();
      n.right = nj.at(3).get<int>();
      n.value = nj.at(4).get<double>();
      t.nodes.push_back(n);
    }
    m.trees.push_back(std::move(t));
  }
  return m;
}

inline void save_model(const TrainedModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path.string());
  out << to_json(m).dump(2) << '\n';
}

inline TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("bad model file " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace stsim
