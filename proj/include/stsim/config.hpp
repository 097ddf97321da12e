#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "stsim/bee_colony.hpp"
#include "stsim/embedding_client.hpp"
#include "stsim/text.hpp"

namespace stsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Minimal TOML reader: [section] headers and scalar key = value lines
// (strings, numbers, booleans). Enough for run configuration; anything
// fancier is rejected with the offending line number.

struct TomlValue {
  enum class Kind { string, number, boolean };
  Kind kind = Kind::string;
  std::string str;
  double num = 0.0;
  bool flag = false;
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

namespace detail {

inline std::string toml_trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline TomlValue parse_toml_value(const std::string& raw, std::size_t lineno) {
  auto fail = [&](const std::string& why) {
    throw ConfigError("config line " + std::to_string(lineno) + ": " + why);
  };
  TomlValue v;
  if (raw.empty()) fail("missing value");
  if (raw.front() == '"') {
    v.kind = TomlValue::Kind::string;
    std::string out;
    bool closed = false;
    std::size_t i = 1;
    for (; i < raw.size(); ++i) {
      char c = raw[i];
      if (c == '\\') {
        if (i + 1 >= raw.size()) fail("dangling escape in string");
        char e = raw[++i];
        if (e == '"') out += '"';
        else if (e == '\\') out += '\\';
        else if (e == 'n') out += '\n';
        else if (e == 't') out += '\t';
        else fail(std::string("unsupported escape \\") + e);
      } else if (c == '"') {
        closed = true;
        ++i;
        break;
      } else {
        out += c;
      }
    }
    if (!closed) fail("unterminated string");
    std::string rest = toml_trim(raw.substr(i));
    if (!rest.empty() && rest[0] != '#') fail("trailing content after string");
    v.str = std::move(out);
    return v;
  }
  // Unquoted scalar; strip a trailing comment.
  std::string body = raw;
  auto hash = body.find('#');
  if (hash != std::string::npos) body = toml_trim(body.substr(0, hash));
  if (body == "true" || body == "false") {
    v.kind = TomlValue::Kind::boolean;
    v.flag = body == "true";
    return v;
  }
  try {
    std::size_t used = 0;
    v.num = std::stod(body, &used);
    if (used != body.size()) throw std::invalid_argument("trail");
  } catch (const std::exception&) {
    fail("cannot parse value '" + body + "' (expected string, number, or boolean)");
  }
  v.kind = TomlValue::Kind::number;
  return v;
}

}  // namespace detail

inline TomlTable parse_toml(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  TomlTable table;
  std::string section;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw ConfigError("config line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::toml_trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail("unterminated section header");
      section = detail::toml_trim(t.substr(1, t.size() - 2));
      if (section.empty()) fail("empty section name");
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    if (section.empty()) fail("key outside any [section]");
    std::string key = detail::toml_trim(t.substr(0, eq));
    if (key.empty()) fail("empty key");
    if (table[section].count(key)) fail("duplicate key '" + key + "'");
    table[section][key] = detail::parse_toml_value(detail::toml_trim(t.substr(eq + 1)), lineno);
  }
  return table;
}

// ---------------------------------------------------------------------------

/// Everything a pipeline run needs, resolved and validated. Paths are
/// interpreted relative to the config file's directory.
struct RunConfig {
  std::filesystem::path base_dir;

  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  double train_fraction = 0.8;
  int cv_folds = 10;
  int strata_bins = 5;
  double scale_max = 5.0;
  DatasetFormat dataset_format = DatasetFormat::sts_benchmark_tsv;

  std::map<std::string, std::filesystem::path> datasets;

  std::filesystem::path lemma_map;     // each empty when absent
  std::filesystem::path taxonomy;
  std::filesystem::path hal_model;
  std::filesystem::path word_vectors;

  bool embed_enabled = false;
  EmbedConfig embed;

  AbcConfig abc;

  std::filesystem::path store_dir;  // empty disables the feature store

  static RunConfig load(const std::filesystem::path& path);
};

namespace detail {

class TomlReader {
 public:
  TomlReader(const TomlTable& table, std::filesystem::path base)
      : table_(table), base_(std::move(base)) {}

  bool has_section(const std::string& s) const { return table_.count(s) > 0; }

  const TomlValue* find(const std::string& section, const std::string& key) {
    used_[section].insert(key);
    auto sit = table_.find(section);
    if (sit == table_.end()) return nullptr;
    auto kit = sit->second.find(key);
    return kit == sit->second.end() ? nullptr : &kit->second;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) {
    const TomlValue* v = find(section, key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::string)
      throw ConfigError("config [" + section + "]." + key + " must be a string");
    return v->str;
  }

  double get_number(const std::string& section, const std::string& key, double fallback) {
    const TomlValue* v = find(section, key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::number)
      throw ConfigError("config [" + section + "]." + key + " must be a number");
    return v->num;
  }

  int get_int(const std::string& section, const std::string& key, int fallback) {
    double d = get_number(section, key, fallback);
    int i = static_cast<int>(d);
    if (static_cast<double>(i) != d)
      throw ConfigError("config [" + section + "]." + key + " must be an integer");
    return i;
  }

  std::filesystem::path get_path(const std::string& section, const std::string& key) {
    std::string s = get_string(section, key, "");
    if (s.empty()) return {};
    std::filesystem::path p(s);
    return p.is_absolute() ? p : base_ / p;
  }

  /// Flags any key the loader never asked about; unknown keys are config
  /// mistakes, not extensions.
  void check_unknown(const std::set<std::string>& known_sections) const {
    for (const auto& [section, keys] : table_) {
      if (section == "datasets") continue;  // free-form name = path entries
      if (!known_sections.count(section))
        throw ConfigError("config has unknown section [" + section + "]");
      auto uit = used_.find(section);
      for (const auto& [key, value] : keys) {
        (void)value;
        if (uit == used_.end() || !uit->second.count(key))
          throw ConfigError("config has unknown key [" + section + "]." + key);
      }
    }
  }

 private:
  const TomlTable& table_;
  std::filesystem::path base_;
  std::map<std::string, std::set<std::string>> used_;
};

inline void require_exists(const std::filesystem::path& p, const std::string& what) {
  if (!p.empty() && !std::filesystem::exists(p))
    throw ConfigError(what + " path does not exist: " + p.string());
}

}  // namespace detail

inline RunConfig RunConfig::load(const std::filesystem::path& path) {
  TomlTable table = parse_toml(path);
  RunConfig cfg;
  cfg.base_dir = std::filesystem::absolute(path).parent_path();
  detail::TomlReader r(table, cfg.base_dir);

  const TomlValue* seed = r.find("run", "seed");
  if (!seed || seed->kind != TomlValue::Kind::number)
    throw ConfigError("config requires an explicit numeric [run].seed");
  cfg.seed = static_cast<std::uint64_t>(seed->num);

  cfg.output_dir = r.get_path("run", "output_dir");
  cfg.train_fraction = r.get_number("run", "train_fraction", cfg.train_fraction);
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
    throw ConfigError("config [run].train_fraction must be in (0, 1)");
  cfg.cv_folds = r.get_int("run", "cv_folds", cfg.cv_folds);
  if (cfg.cv_folds < 2) throw ConfigError("config [run].cv_folds must be >= 2");
  cfg.strata_bins = r.get_int("run", "strata_bins", cfg.strata_bins);
  if (cfg.strata_bins < 1) throw ConfigError("config [run].strata_bins must be >= 1");
  cfg.scale_max = r.get_number("run", "scale_max", cfg.scale_max);
  if (!(cfg.scale_max > 0.0)) throw ConfigError("config [run].scale_max must be > 0");

  std::string fmt = r.get_string("run", "dataset_format", "sts");
  if (fmt == "sts") cfg.dataset_format = DatasetFormat::sts_benchmark_tsv;
  else if (fmt == "generic") cfg.dataset_format = DatasetFormat::generic_tsv;
  else throw ConfigError("config [run].dataset_format must be \"sts\" or \"generic\"");

  if (auto it = table.find("datasets"); it != table.end()) {
    for (const auto& [name, value] : it->second) {
      if (value.kind != TomlValue::Kind::string)
        throw ConfigError("config [datasets]." + name + " must be a path string");
      std::filesystem::path p(value.str);
      cfg.datasets[name] = p.is_absolute() ? p : cfg.base_dir / p;
    }
  }

  cfg.lemma_map = r.get_path("resources", "lemma_map");
  cfg.taxonomy = r.get_path("resources", "taxonomy");
  cfg.hal_model = r.get_path("resources", "hal_model");
  cfg.word_vectors = r.get_path("resources", "word_vectors");

  if (r.has_section("embed")) {
    cfg.embed_enabled = true;
    std::string mode = r.get_string("embed", "mode", "fixture");
    if (mode == "fixture") cfg.embed.mode = EmbedConfig::Mode::fixture;
    else if (mode == "live") cfg.embed.mode = EmbedConfig::Mode::live;
    else throw ConfigError("config [embed].mode must be \"fixture\" or \"live\"");
    cfg.embed.fixture_path = r.get_path("embed", "fixture");
    cfg.embed.cache_dir = r.get_path("embed", "cache_dir");
    cfg.embed.base_url = r.get_string("embed", "base_url", cfg.embed.base_url);
    cfg.embed.model_name = r.get_string("embed", "model", cfg.embed.model_name);
    cfg.embed.api_key_env = r.get_string("embed", "api_key_env", cfg.embed.api_key_env);
    cfg.embed.max_batch = r.get_int("embed", "max_batch", cfg.embed.max_batch);
    cfg.embed.max_retries = r.get_int("embed", "max_retries", cfg.embed.max_retries);
    cfg.embed.timeout_s = r.get_number("embed", "timeout_s", cfg.embed.timeout_s);
    if (cfg.embed.mode == EmbedConfig::Mode::fixture && cfg.embed.fixture_path.empty())
      throw ConfigError("config [embed] fixture mode requires a fixture path");
  }

  cfg.abc.n_sources = r.get_int("abc", "sources", cfg.abc.n_sources);
  cfg.abc.n_onlookers = r.get_int("abc", "onlookers", cfg.abc.n_onlookers);
  cfg.abc.iterations = r.get_int("abc", "iterations", cfg.abc.iterations);
  cfg.abc.limit = r.get_int("abc", "limit", cfg.abc.limit);
  if (cfg.abc.n_sources < 2) throw ConfigError("config [abc].sources must be >= 2");
  if (cfg.abc.iterations < 1) throw ConfigError("config [abc].iterations must be >= 1");
  if (cfg.abc.limit < 1) throw ConfigError("config [abc].limit must be >= 1");
  if (cfg.abc.n_onlookers < 0) throw ConfigError("config [abc].onlookers must be >= 0");

  cfg.store_dir = r.get_path("store", "dir");

  r.check_unknown({"run", "resources", "embed", "abc", "store"});

  for (const auto& [name, p] : cfg.datasets) detail::require_exists(p, "dataset " + name);
  detail::require_exists(cfg.lemma_map, "lemma map");
  detail::require_exists(cfg.taxonomy, "taxonomy");
  detail::require_exists(cfg.hal_model, "HAL model");
  detail::require_exists(cfg.word_vectors, "word vectors");
  if (cfg.embed_enabled && cfg.embed.mode == EmbedConfig::Mode::fixture)
    detail::require_exists(cfg.embed.fixture_path, "embedding fixture");

  return cfg;
}

}  // namespace stsim
