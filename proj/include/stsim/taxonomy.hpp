#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stsim/common.hpp"

namespace stsim {

/// Rooted is-a DAG with a surface-token to synset mapping. Depths follow the
/// depth(root) = 1 convention; with multiple parents a node's depth is the
/// shortest route to the root.
class Taxonomy {
 public:
  static Taxonomy from_edges(const std::vector<std::pair<std::string, std::string>>& edges,
                             const std::vector<std::pair<std::string, std::string>>& word_entries) {
    Taxonomy t;
    auto intern = [&](const std::string& id) {
      auto it = t.index_.find(id);
      if (it != t.index_.end()) return it->second;
      int idx = static_cast<int>(t.ids_.size());
      t.index_[id] = idx;
      t.ids_.push_back(id);
      t.parents_.emplace_back();
      t.children_.emplace_back();
      return idx;
    };
    for (const auto& [child, parent] : edges) {
      int c = intern(child);
      int p = intern(parent);
      if (c == p) throw std::runtime_error("self-loop at synset " + child);
      t.parents_[c].push_back(p);
      t.children_[p].push_back(c);
    }
    if (t.ids_.empty()) throw std::runtime_error("taxonomy has no nodes");
    t.attach_root();
    t.check_acyclic();
    t.compute_depths();
    for (const auto& [word, synset] : word_entries) {
      auto it = t.index_.find(synset);
      if (it == t.index_.end())
        throw std::runtime_error("word '" + word + "' maps to unknown synset " + synset);
      t.word_map_[word].push_back(it->second);
    }
    return t;
  }

  /// File format: `[edges]` section of `child<TAB>parent` lines, then a
  /// `[words]` section of `token<TAB>synset` lines. `#` starts a comment.
  static Taxonomy load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open taxonomy: " + path.string());
    std::vector<std::pair<std::string, std::string>> edges, words;
    std::string line;
    std::size_t lineno = 0;
    enum class Section { none, edges, words } section = Section::none;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
      if (line.empty()) continue;
      if (line == "[edges]") {
        section = Section::edges;
        continue;
      }
      if (line == "[words]") {
        section = Section::words;
        continue;
      }
      auto tab = line.find('\t');
      if (section == Section::none || tab == std::string::npos || tab == 0 ||
          tab + 1 >= line.size())
        throw std::runtime_error("malformed taxonomy line " + std::to_string(lineno) + " in " +
                                 path.string());
      auto& dst = section == Section::edges ? edges : words;
      dst.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return from_edges(edges, words);
  }

  int node_count() const { return static_cast<int>(ids_.size()); }
  int root() const { return root_; }
  int max_depth() const { return max_depth_; }
  int depth(int node) const { return depths_[static_cast<std::size_t>(node)]; }
  const std::string& id_of(int node) const { return ids_[static_cast<std::size_t>(node)]; }
  const std::vector<int>& parents_of(int node) const {
    return parents_[static_cast<std::size_t>(node)];
  }

  int require(const std::string& synset_id) const {
    auto it = index_.find(synset_id);
    if (it == index_.end()) throw std::runtime_error("synset not in taxonomy: " + synset_id);
    return it->second;
  }

  const std::vector<int>* synsets_of(const std::string& word) const {
    auto it = word_map_.find(word);
    return it == word_map_.end() ? nullptr : &it->second;
  }

  /// Shortest undirected is-a path length, in edges.
  int undirected_path_edges(int s1, int s2) const {
    if (s1 == s2) return 0;
    std::vector<int> dist(ids_.size(), -1);
    std::deque<int> queue{s1};
    dist[static_cast<std::size_t>(s1)] = 0;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      if (u == s2) return dist[static_cast<std::size_t>(u)];
      for (const auto& adj : {parents_[static_cast<std::size_t>(u)], children_[static_cast<std::size_t>(u)]}) {
        for (int v : adj) {
          if (dist[static_cast<std::size_t>(v)] < 0) {
            dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
            queue.push_back(v);
          }
        }
      }
    }
    return -1;  // unreachable; cannot happen in a rooted taxonomy
  }

  /// Deepest common ancestor (a node counts among its own ancestors).
  int least_common_subsumer(int s1, int s2) const {
    std::vector<bool> anc(ids_.size(), false);
    collect_ancestors(s1, anc);
    std::vector<bool> anc2(ids_.size(), false);
    collect_ancestors(s2, anc2);
    int best = root_;
    for (int i = 0; i < node_count(); ++i) {
      if (anc[static_cast<std::size_t>(i)] && anc2[static_cast<std::size_t>(i)] &&
          depth(i) > depth(best))
        best = i;
    }
    return best;
  }

 private:
  void attach_root() {
    std::vector<int> sources;
    for (int i = 0; i < node_count(); ++i)
      if (parents_[static_cast<std::size_t>(i)].empty()) sources.push_back(i);
    if (sources.size() == 1) {
      root_ = sources[0];
      return;
    }
    std::string root_id = "__root__";
    while (index_.count(root_id)) root_id += "_";
    root_ = static_cast<int>(ids_.size());
    index_[root_id] = root_;
    ids_.push_back(root_id);
    parents_.emplace_back();
    children_.emplace_back();
    for (int s : sources) {
      parents_[static_cast<std::size_t>(s)].push_back(root_);
      children_[static_cast<std::size_t>(root_)].push_back(s);
    }
  }

  void check_acyclic() const {
    // Kahn's algorithm over child->parent edges.
    std::vector<int> outdeg(ids_.size());
    for (int i = 0; i < node_count(); ++i)
      outdeg[static_cast<std::size_t>(i)] = static_cast<int>(parents_[static_cast<std::size_t>(i)].size());
    std::deque<int> queue;
    for (int i = 0; i < node_count(); ++i)
      if (outdeg[static_cast<std::size_t>(i)] == 0) queue.push_back(i);
    int seen = 0;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      ++seen;
      for (int c : children_[static_cast<std::size_t>(u)])
        if (--outdeg[static_cast<std::size_t>(c)] == 0) queue.push_back(c);
    }
    if (seen != node_count()) throw std::runtime_error("taxonomy contains a cycle");
  }

  void compute_depths() {
    depths_.assign(ids_.size(), -1);
    depths_[static_cast<std::size_t>(root_)] = 1;
    std::deque<int> queue{root_};
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int c : children_[static_cast<std::size_t>(u)]) {
        if (depths_[static_cast<std::size_t>(c)] < 0) {
          depths_[static_cast<std::size_t>(c)] = depths_[static_cast<std::size_t>(u)] + 1;
          queue.push_back(c);
        }
      }
    }
    for (int i = 0; i < node_count(); ++i)
      if (depths_[static_cast<std::size_t>(i)] < 0)
        throw std::runtime_error("synset " + ids_[static_cast<std::size_t>(i)] +
                                 " does not reach the root");
    max_depth_ = *std::max_element(depths_.begin(), depths_.end());
  }

  void collect_ancestors(int node, std::vector<bool>& mark) const {
    std::deque<int> queue{node};
    mark[static_cast<std::size_t>(node)] = true;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int p : parents_[static_cast<std::size_t>(u)]) {
        if (!mark[static_cast<std::size_t>(p)]) {
          mark[static_cast<std::size_t>(p)] = true;
          queue.push_back(p);
        }
      }
    }
  }

  std::vector<std::string> ids_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
  std::unordered_map<std::string, std::vector<int>> word_map_;
  std::vector<int> depths_;
  int root_ = -1;
  int max_depth_ = 1;
};

enum class KnowMetricKind { path, wu_palmer, leacock_chodorow };

inline std::string know_metric_id(KnowMetricKind k) {
  switch (k) {
    case KnowMetricKind::path: return "path";
    case KnowMetricKind::wu_palmer: return "wu-palmer";
    case KnowMetricKind::leacock_chodorow: return "leacock-chodorow";
  }
  return "";
}

enum class KnowAggregation { best_match, max_pair };

struct KnowMetric {
  KnowMetricKind kind;
  KnowAggregation agg = KnowAggregation::best_match;
};

/// Path = 1/(1+e); Wu-Palmer = 2 depth(lcs) / (depth(s1)+depth(s2));
/// Leacock-Chodorow = -log(n / 2D) / log(2D) with n = e + 1, normalized by
/// its own maximum so the result stays in [0,1].
inline double synset_similarity(KnowMetricKind metric, const Taxonomy& t, int s1, int s2) {
  switch (metric) {
    case KnowMetricKind::path: {
      int e = t.undirected_path_edges(s1, s2);
      return 1.0 / (1.0 + static_cast<double>(e));
    }
    case KnowMetricKind::wu_palmer: {
      int lcs = t.least_common_subsumer(s1, s2);
      return 2.0 * static_cast<double>(t.depth(lcs)) /
             static_cast<double>(t.depth(s1) + t.depth(s2));
    }
    case KnowMetricKind::leacock_chodorow: {
      int n = t.undirected_path_edges(s1, s2) + 1;
      double two_d = 2.0 * static_cast<double>(t.max_depth());
      return -std::log(static_cast<double>(n) / two_d) / std::log(two_d);
    }
  }
  return 0.0;
}

inline double synset_similarity(KnowMetricKind metric, const Taxonomy& t, const std::string& s1,
                                const std::string& s2) {
  return synset_similarity(metric, t, t.require(s1), t.require(s2));
}

/// Max over the two words' synset pairs; equal surface forms score 1 even
/// when unmapped; otherwise an unmapped word leaves the score undefined.
inline std::optional<double> word_similarity(KnowMetricKind metric, const Taxonomy& t,
                                             const std::string& w1, const std::string& w2) {
  const auto* syn1 = t.synsets_of(w1);
  const auto* syn2 = t.synsets_of(w2);
  if (!syn1 || !syn2) {
    if (w1 == w2) return 1.0;
    return std::nullopt;
  }
  double best = 0.0;
  for (int a : *syn1)
    for (int b : *syn2) best = std::max(best, synset_similarity(metric, t, a, b));
  return best;
}

/// best-match: mean over defined per-token maxima, symmetrized over both
/// directions. max-pair: global max over all defined token pairs. No defined
/// pair at all yields 0 with the degenerate flag.
inline SimScore sentence_similarity(const KnowMetric& metric, const Taxonomy& t,
                                    std::span<const std::string> a,
                                    std::span<const std::string> b) {
  if (metric.agg == KnowAggregation::max_pair) {
    bool any = false;
    double best = 0.0;
    for (const auto& wa : a) {
      for (const auto& wb : b) {
        if (auto s = word_similarity(metric.kind, t, wa, wb)) {
          any = true;
          best = std::max(best, *s);
        }
      }
    }
    return any ? SimScore{best, false} : SimScore{0.0, true};
  }

  auto direction = [&](std::span<const std::string> from, std::span<const std::string> to,
                       double& mean) {
    double sum = 0.0;
    std::size_t defined = 0;
    for (const auto& wf : from) {
      bool any = false;
      double best = 0.0;
      for (const auto& wt : to) {
        if (auto s = word_similarity(metric.kind, t, wf, wt)) {
          any = true;
          best = std::max(best, *s);
        }
      }
      if (any) {
        sum += best;
        ++defined;
      }
    }
    if (defined == 0) return false;
    mean = sum / static_cast<double>(defined);
    return true;
  };
  double ab = 0.0, ba = 0.0;
  if (!direction(a, b, ab) || !direction(b, a, ba)) return {0.0, true};
  return {(ab + ba) / 2.0, false};
}

}  // namespace stsim
