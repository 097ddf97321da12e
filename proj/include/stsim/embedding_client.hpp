#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "stsim/vector_space.hpp"

namespace stsim {

struct EmbedConfig {
  enum class Mode { live, fixture };

  std::string base_url = "https://api.openai.com";  // scheme://host[:port]
  std::string model_name = "text-embedding-3-small";
  std::string api_key_env = "STSIM_API_KEY";
  Mode mode = Mode::fixture;
  std::filesystem::path cache_dir;     // empty disables the cache
  std::filesystem::path fixture_path;  // required in fixture mode
  double timeout_s = 30.0;
  int max_batch = 64;
  int max_retries = 3;
};

/// Embedding-service client. Vectors come from the on-disk cache when
/// present, else from the fixture file (fixture mode) or an HTTP POST to
/// <base_url>/v1/embeddings (live mode). Resolved vectors are written back
/// to the cache, one file per key, atomically.
class EmbeddingClient {
 public:
  struct Stats {
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    std::uint64_t http_requests = 0;
  };

  explicit EmbeddingClient(EmbedConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.max_batch < 1) throw std::invalid_argument("embed max_batch must be >= 1");
    if (cfg_.max_retries < 1) throw std::invalid_argument("embed max_retries must be >= 1");
    if (cfg_.mode == EmbedConfig::Mode::fixture) {
      if (cfg_.fixture_path.empty())
        throw std::invalid_argument("fixture mode requires a fixture file");
      std::ifstream in(cfg_.fixture_path);
      if (!in)
        throw std::runtime_error("cannot open embedding fixture: " + cfg_.fixture_path.string());
      nlohmann::json j;
      try {
        in >> j;
      } catch (const std::exception& e) {
        throw std::runtime_error("bad embedding fixture " + cfg_.fixture_path.string() + ": " +
                                 e.what());
      }
      if (!j.is_object())
        throw std::runtime_error("embedding fixture must be a JSON object of text -> vector");
      for (const auto& [text, vec] : j.items())
        fixture_[text] = vec.get<std::vector<double>>();
    }
    if (!cfg_.cache_dir.empty()) std::filesystem::create_directories(cfg_.cache_dir);
  }

  const EmbedConfig& config() const { return cfg_; }
  const Stats& stats() const { return stats_; }

  /// One vector per input text, order preserved. Identical texts within a
  /// call are resolved once. Concurrent callers are serialized.
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (texts.empty()) throw std::invalid_argument("embed requires at least one text");

    std::vector<std::vector<double>> out(texts.size());
    std::vector<std::string> missing;
    std::unordered_map<std::string, std::vector<std::size_t>> waiting;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto [it, fresh] = waiting.try_emplace(texts[i]);
      it->second.push_back(i);
      if (!fresh) continue;
      if (auto cached = load_cached(texts[i])) {
        ++stats_.cache_hits;
        out[i] = std::move(*cached);
      } else {
        ++stats_.cache_misses;
        missing.push_back(texts[i]);
      }
    }
    // Texts repeated after a resolved first occurrence share its vector.
    for (const auto& [text, slots] : waiting) {
      (void)text;
      for (std::size_t k = 1; k < slots.size(); ++k)
        if (!out[slots[0]].empty()) out[slots[k]] = out[slots[0]];
    }

    for (std::size_t start = 0; start < missing.size();
         start += static_cast<std::size_t>(cfg_.max_batch)) {
      std::size_t end = std::min(missing.size(), start + static_cast<std::size_t>(cfg_.max_batch));
      std::vector<std::string> batch(missing.begin() + static_cast<std::ptrdiff_t>(start),
                                     missing.begin() + static_cast<std::ptrdiff_t>(end));
      auto vectors = resolve_batch(batch);
      for (std::size_t k = 0; k < batch.size(); ++k) {
        store_cached(batch[k], vectors[k]);
        for (std::size_t slot : waiting.at(batch[k])) out[slot] = vectors[k];
      }
    }

    std::size_t dim = out[0].size();
    if (dim == 0) throw std::runtime_error("embedding service returned empty vectors");
    for (const auto& v : out)
      if (v.size() != dim)
        throw std::runtime_error("embedding dimension mismatch: got " + std::to_string(v.size()) +
                                 " and " + std::to_string(dim));
    return out;
  }

  /// Embeds each distinct token and assembles word vectors; row order
  /// follows first appearance in `tokens`.
  WordVectors word_vectors(const std::vector<std::string>& tokens) {
    std::vector<std::string> distinct;
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& t : tokens)
      if (seen.try_emplace(t, distinct.size()).second) distinct.push_back(t);
    if (distinct.empty()) throw std::invalid_argument("no tokens to embed");
    auto vectors = embed(distinct);
    WordVectors wv;
    wv.source = VectorSource::embedding_service;
    wv.dim = vectors[0].size();
    wv.vocab = std::move(seen);
    wv.matrix.reserve(distinct.size() * wv.dim);
    for (const auto& v : vectors) wv.matrix.insert(wv.matrix.end(), v.begin(), v.end());
    return wv;
  }

  /// Cache key: FNV-1a over model name and text, as 16 hex digits.
  std::string cache_key(const std::string& text) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
      }
    };
    mix(cfg_.model_name);
    h ^= 0xff;
    h *= 1099511628211ull;
    mix(text);
    static const char* hex = "0123456789abcdef";
    std::string key(16, '0');
    for (int i = 15; i >= 0; --i) {
      key[static_cast<std::size_t>(i)] = hex[h & 0xf];
      h >>= 4;
    }
    return key;
  }

  /// Reorders the service's data entries by their index field and checks
  /// uniform, nonzero dimensions.
  static std::vector<std::vector<double>> parse_response(const std::string& body,
                                                         std::size_t expected) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("bad embedding response JSON: ") + e.what());
    }
    if (!j.contains("data") || !j["data"].is_array() || j["data"].size() != expected)
      throw std::runtime_error("embedding response must carry one data entry per input");
    std::vector<std::vector<double>> out(expected);
    std::vector<bool> filled(expected, false);
    for (const auto& entry : j["data"]) {
      std::size_t idx = entry.at("index").get<std::size_t>();
      if (idx >= expected || filled[idx])
        throw std::runtime_error("embedding response has bad or duplicate index " +
                                 std::to_string(idx));
      out[idx] = entry.at("embedding").get<std::vector<double>>();
      filled[idx] = true;
    }
    std::size_t dim = out[0].size();
    for (const auto& v : out)
      if (v.size() != dim || dim == 0)
        throw std::runtime_error("embedding response dimensions are inconsistent");
    return out;
  }

 private:
  std::filesystem::path cache_path(const std::string& text) const {
    return cfg_.cache_dir / (cache_key(text) + ".vec");
  }

  std::optional<std::vector<double>> load_cached(const std::string& text) const {
    if (cfg_.cache_dir.empty()) return std::nullopt;
    std::ifstream in(cache_path(text), std::ios::binary);
    if (!in) return std::nullopt;
    unsigned char head[4];
    if (!in.read(reinterpret_cast<char*>(head), 4)) return std::nullopt;
    std::uint32_t dim = static_cast<std::uint32_t>(head[0]) |
                        (static_cast<std::uint32_t>(head[1]) << 8) |
                        (static_cast<std::uint32_t>(head[2]) << 16) |
                        (static_cast<std::uint32_t>(head[3]) << 24);
    std::vector<double> v(dim);
    for (std::uint32_t i = 0; i < dim; ++i) {
      unsigned char b[8];
      if (!in.read(reinterpret_cast<char*>(b), 8)) return std::nullopt;
      std::uint64_t bits = 0;
      for (int k = 7; k >= 0; --k) bits = (bits << 8) | b[k];
      std::memcpy(&v[i], &bits, 8);
    }
    return v;
  }

  void store_cached(const std::string& text, const std::vector<double>& v) {
    if (cfg_.cache_dir.empty()) return;
    auto final_path = cache_path(text);
    auto tmp = final_path;
    tmp += ".tmp" + std::to_string(std::random_device{}());
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write embedding cache: " + tmp.string());
      std::uint32_t dim = static_cast<std::uint32_t>(v.size());
      unsigned char head[4] = {
          static_cast<unsigned char>(dim), static_cast<unsigned char>(dim >> 8),
          static_cast<unsigned char>(dim >> 16), static_cast<unsigned char>(dim >> 24)};
      out.write(reinterpret_cast<const char*>(head), 4);
      for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        unsigned char b[8];
        for (int k = 0; k < 8; ++k) b[static_cast<std::size_t>(k)] =
            static_cast<unsigned char>(bits >> (8 * k));
        out.write(reinterpret_cast<const char*>(b), 8);
      }
    }
    std::filesystem::rename(tmp, final_path);
  }

  std::vector<std::vector<double>> resolve_batch(const std::vector<std::string>& batch) {
    if (cfg_.mode == EmbedConfig::Mode::fixture) {
      std::vector<std::vector<double>> out;
      out.reserve(batch.size());
      for (const auto& text : batch) {
        auto it = fixture_.find(text);
        if (it == fixture_.end())
          throw std::runtime_error("embedding fixture has no entry for text: " + text);
        out.push_back(it->second);
      }
      return out;
    }
    return request_batch(batch);
  }

  std::vector<std::vector<double>> request_batch(const std::vector<std::string>& batch) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (!key || !*key)
      throw std::runtime_error("live embedding mode requires env var " + cfg_.api_key_env);

    nlohmann::json body{{"model", cfg_.model_name}, {"input", batch}};
    std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt < cfg_.max_retries; ++attempt) {
      httplib::Client client(cfg_.base_url);
      client.set_connection_timeout(static_cast<time_t>(cfg_.timeout_s));
      client.set_read_timeout(static_cast<time_t>(cfg_.timeout_s));
      client.set_bearer_token_auth(key);
      ++stats_.http_requests;
      auto res = client.Post("/v1/embeddings", payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP status " + std::to_string(res->status);
        continue;
      }
      return parse_response(res->body, batch.size());
    }
    throw std::runtime_error("embedding request failed after " +
                             std::to_string(cfg_.max_retries) + " attempts: " + last_error);
  }

  EmbedConfig cfg_;
  Stats stats_;
  std::unordered_map<std::string, std::vector<double>> fixture_;
  std::mutex mutex_;
};

}  // namespace stsim
