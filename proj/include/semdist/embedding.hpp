// Copyright 2026 The semdist-eval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SEMDIST_EMBEDDING_HPP_
#define SEMDIST_EMBEDDING_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "semdist/error.hpp"
#include "semdist/hashing.hpp"

namespace semdist {

/// Embeddings for one sentence as produced by a provider. `tokens` are the
/// provider's own tokens (possibly subwords), not normalized words. The CLS
/// vector is delivered separately and is not one of the token rows.
struct SentenceEmbeddings {
  std::vector<std::string> tokens;
  std::vector<float> token_vectors;  // row-major, tokens.size() x dimension
  std::vector<float> cls;
  std::size_t dimension = 0;

  std::size_t token_count() const noexcept { return tokens.size(); }

  std::span<const float> token_vector(std::size_t row) const {
    return std::span<const float>(token_vectors).subspan(row * dimension,
                                                         dimension);
  }

  std::span<const float> cls_vector() const { return cls; }

  friend bool operator==(const SentenceEmbeddings &,
                         const SentenceEmbeddings &) = default;
};

using EmbeddingsPtr = std::shared_ptr<const SentenceEmbeddings>;

/// Throws BadDimension unless the bundle is internally consistent.
inline void validate(const SentenceEmbeddings &e) {
  if (e.tokens.empty())
    throw Error(ErrorKind::kBadDimension, "embedding bundle has no tokens");
  if (e.dimension < 1 || e.cls.size() != e.dimension ||
      e.token_vectors.size() != e.tokens.size() * e.dimension)
    throw Error(ErrorKind::kBadDimension,
                "embedding rows do not match dim " + std::to_string(e.dimension));
  for (float v : e.token_vectors)
    if (!std::isfinite(v))
      throw Error(ErrorKind::kBadDimension, "non-finite token vector entry");
  for (float v : e.cls)
    if (!std::isfinite(v))
      throw Error(ErrorKind::kBadDimension, "non-finite cls entry");
}

// ---------------------------------------------------------------------------
// Record format shared by the embedding file and the HTTP sidecar:
//   {"sentence": str, "tokens": [str], "token_vectors": [[D]], "cls": [D],
//    "dim": D}

inline nlohmann::ordered_json to_record(const std::string &sentence,
                                        const SentenceEmbeddings &e) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < e.token_count(); ++i) {
    auto row = e.token_vector(i);
    rows.push_back(std::vector<float>(row.begin(), row.end()));
  }
  nlohmann::ordered_json record;
  record["sentence"] = sentence;
  record["tokens"] = e.tokens;
  record["token_vectors"] = std::move(rows);
  record["cls"] = e.cls;
  record["dim"] = e.dimension;
  return record;
}

/// Parses one record. Structural problems are Parse errors, width problems
/// BadDimension.
template <typename Json>
SentenceEmbeddings from_record(const Json &record) {
  if (!record.is_object())
    throw Error(ErrorKind::kParse, "embedding record is not an object");
  for (const char *key : {"tokens", "token_vectors", "cls", "dim"})
    if (!record.contains(key))
      throw Error(ErrorKind::kParse,
                  std::string("embedding record missing \"") + key + "\"");

  SentenceEmbeddings e;
  try {
    e.dimension = record.at("dim").template get<std::size_t>();
    e.tokens = record.at("tokens").template get<std::vector<std::string>>();
    const auto &rows = record.at("token_vectors");
    if (!rows.is_array())
      throw Error(ErrorKind::kParse, "token_vectors is not an array");
    if (rows.size() != e.tokens.size())
      throw Error(ErrorKind::kBadDimension,
                  "token_vectors has " + std::to_string(rows.size()) +
                      " rows for " + std::to_string(e.tokens.size()) + " tokens");
    e.token_vectors.reserve(e.tokens.size() * e.dimension);
    for (const auto &row : rows) {
      auto values = row.template get<std::vector<float>>();
      if (values.size() != e.dimension)
        throw Error(ErrorKind::kBadDimension,
                    "token vector of width " + std::to_string(values.size()) +
                        ", expected " + std::to_string(e.dimension));
      e.token_vectors.insert(e.token_vectors.end(), values.begin(), values.end());
    }
    e.cls = record.at("cls").template get<std::vector<float>>();
  } catch (const nlohmann::json::exception &ex) {
    throw Error(ErrorKind::kParse, std::string("bad embedding record: ") + ex.what());
  }
  validate(e);
  return e;
}

// ---------------------------------------------------------------------------

enum class BackendKind { kFile, kHttp, kDeterministic };

inline constexpr std::size_t kDefaultDeterministicDimension = 16;

struct ProviderConfig {
  BackendKind backend = BackendKind::kDeterministic;
  /// Required width. Unset for file/http means "whatever the backend
  /// reports", locked in by the first sentence.
  std::optional<std::size_t> dimension;
  std::optional<std::string> endpoint_url;
  std::optional<std::filesystem::path> embedding_file;
  std::uint64_t seed = 0;
  std::size_t cache_capacity = 4096;
  // http only
  std::size_t max_in_flight = 8;
  std::size_t max_batch = 64;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds retry_backoff{100};
};

inline void validate(const ProviderConfig &config) {
  if (config.dimension && *config.dimension < 2)
    throw Error(ErrorKind::kConfig, "embedding dimension must be >= 2");
  switch (config.backend) {
    case BackendKind::kFile:
      if (!config.embedding_file)
        throw Error(ErrorKind::kConfig, "file backend needs an embedding file");
      break;
    case BackendKind::kHttp:
      if (!config.endpoint_url || config.endpoint_url->empty())
        throw Error(ErrorKind::kConfig, "http backend needs an endpoint url");
      if (config.max_in_flight == 0 || config.max_batch == 0)
        throw Error(ErrorKind::kConfig, "http limits must be positive");
      break;
    case BackendKind::kDeterministic:
      break;
  }
}

/// A source of embeddings. Implementations must tolerate concurrent calls.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;

  virtual SentenceEmbeddings embed(const std::string &sentence) = 0;

  /// Default: one embed() per sentence; failures become BatchError.
  virtual std::vector<SentenceEmbeddings> embed_batch(
      std::span<const std::string> sentences) {
    std::vector<SentenceEmbeddings> out;
    out.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      try {
        out.push_back(embed(sentences[i]));
      } catch (const BatchError &) {
        throw;
      } catch (const Error &e) {
        throw BatchError(e.kind(), i, e.what());
      }
    }
    return out;
  }

  virtual std::string_view name() const = 0;
};

/// Hash-chain embedder for tests and offline runs. Splits the raw sentence
/// on ASCII whitespace; the vector of token t at position i is drawn from
/// splitmix64 seeded with fnv1a64(t) ^ seed ^ i, mapped to [-1, 1) and
/// L2-normalized. The CLS vector uses fnv1a64(sentence) ^ fnv1a64("<CLS>")
/// ^ seed ^ 0. Output is bit-identical across platforms.
class DeterministicBackend final : public EmbeddingBackend {
 public:
  explicit DeterministicBackend(std::size_t dimension = kDefaultDeterministicDimension,
                                std::uint64_t seed = 0)
      : dimension_(dimension), seed_(seed) {
    if (dimension_ < 2)
      throw Error(ErrorKind::kConfig, "embedding dimension must be >= 2");
  }

  SentenceEmbeddings embed(const std::string &sentence) override {
    SentenceEmbeddings e;
    e.dimension = dimension_;
    e.tokens = split_whitespace(sentence);
    if (e.tokens.empty())
      throw Error(ErrorKind::kEmptySentence, "sentence has no tokens");
    e.token_vectors.reserve(e.tokens.size() * dimension_);
    for (std::size_t i = 0; i < e.tokens.size(); ++i)
      append_unit_vector(fnv1a64(e.tokens[i]) ^ seed_ ^ i, e.token_vectors);
    append_unit_vector(fnv1a64(sentence) ^ fnv1a64("<CLS>") ^ seed_ ^ 0, e.cls);
    return e;
  }

  std::string_view name() const override { return "deterministic"; }

  static std::vector<std::string> split_whitespace(std::string_view s) {
    auto is_space = [](char c) {
      return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
             c == '\v';
    };
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && is_space(s[i])) ++i;
      std::size_t j = i;
      while (j < s.size() && !is_space(s[j])) ++j;
      if (j > i) out.emplace_back(s.substr(i, j - i));
      i = j;
    }
    return out;
  }

 private:
  void append_unit_vector(std::uint64_t state, std::vector<float> &out) const {
    SplitMix64 rng(state);
    std::vector<double> draw(dimension_);
    double norm2 = 0.0;
    for (double &v : draw) {
      v = rng.next_signed();
      norm2 += v * v;
    }
    const double norm = std::sqrt(norm2);
    for (double v : draw) out.push_back(static_cast<float>(v / norm));
  }

  std::size_t dimension_;
  std::uint64_t seed_;
};

/// Serves precomputed embeddings from a line-delimited record file, keyed by
/// the exact sentence string. The whole file is loaded up front.
class FileBackend final : public EmbeddingBackend {
 public:
  explicit FileBackend(const std::filesystem::path &path,
                       std::optional<std::size_t> dimension = std::nullopt) {
    std::ifstream in(path);
    if (!in)
      throw Error(ErrorKind::kIo, "cannot open embedding file " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> file_dim = dimension;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = path.string() + ":" + std::to_string(line_no);
      nlohmann::json record;
      try {
        record = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error &ex) {
        throw Error(ErrorKind::kParse, where + ": " + ex.what());
      }
      if (!record.is_object() || !record.contains("sentence") ||
          !record["sentence"].is_string())
        throw Error(ErrorKind::kParse, where + ": missing string \"sentence\"");
      SentenceEmbeddings e;
      try {
        e = from_record(record);
      } catch (const Error &ex) {
        throw Error(ex.kind(), where + ": " + ex.what());
      }
      if (!file_dim) file_dim = e.dimension;
      if (e.dimension != *file_dim)
        throw Error(ErrorKind::kBadDimension,
                    where + ": dim " + std::to_string(e.dimension) +
                        ", expected " + std::to_string(*file_dim));
      auto sentence = record["sentence"].get<std::string>();
      if (!table_.emplace(sentence, std::move(e)).second)
        throw Error(ErrorKind::kParse, where + ": duplicate sentence \"" +
                                           sentence + "\"");
    }
  }

  SentenceEmbeddings embed(const std::string &sentence) override {
    auto it = table_.find(sentence);
    if (it == table_.end())
      throw Error(ErrorKind::kNotFound, "no embedding for \"" + sentence + "\"");
    return it->second;
  }

  std::string_view name() const override { return "file"; }

  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::unordered_map<std::string, SentenceEmbeddings> table_;
};

/// Thread-safe LRU map from sentence to embeddings. Capacity 0 disables it.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::size_t capacity) : capacity_(capacity) {}

  EmbeddingsPtr get(const std::string &key) {
    if (capacity_ == 0) return nullptr;
    std::lock_guard lock(mutex_);
    auto it = index_.find(key);
    if (it == index_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second);
    return it->second->second;
  }

  void put(const std::string &key, EmbeddingsPtr value) {
    if (capacity_ == 0) return;
    std::lock_guard lock(mutex_);
    auto it = index_.find(key);
    if (it != index_.end()) {
      it->second->second = std::move(value);
      order_.splice(order_.begin(), order_, it->second);
      return;
    }
    order_.emplace_front(key, std::move(value));
    index_.emplace(key, order_.begin());
    if (order_.size() > capacity_) {
      index_.erase(order_.back().first);
      order_.pop_back();
    }
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return order_.size();
  }

  std::size_t capacity() const noexcept { return capacity_; }

 private:
  using Entry = std::pair<std::string, EmbeddingsPtr>;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<Entry> order_;
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
};

/// The embedding surface the rest of the toolkit talks to: checks inputs,
/// enforces a single dimension across all results and caches by exact
/// sentence string.
class EmbeddingProvider {
 public:
  EmbeddingProvider(std::unique_ptr<EmbeddingBackend> backend,
                    std::size_t cache_capacity,
                    std::optional<std::size_t> dimension = std::nullopt)
      : backend_(std::move(backend)), cache_(cache_capacity), dimension_(dimension) {}

  EmbeddingsPtr embed(const std::string &sentence) {
    check_sentence(sentence);
    if (auto hit = cache_.get(sentence)) return hit;
    auto result = std::make_shared<const SentenceEmbeddings>(
        checked(backend_->embed(sentence)));
    cache_.put(sentence, result);
    return result;
  }

  std::vector<EmbeddingsPtr> embed_batch(std::span<const std::string> sentences) {
    std::vector<EmbeddingsPtr> out(sentences.size());
    std::vector<std::string> misses;
    std::vector<std::size_t> miss_first_index;
    std::unordered_map<std::string, std::size_t> miss_slot;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      try {
        check_sentence(sentences[i]);
      } catch (const Error &e) {
        throw BatchError(e.kind(), i, e.what());
      }
      if ((out[i] = cache_.get(sentences[i]))) continue;
      if (miss_slot.emplace(sentences[i], misses.size()).second) {
        misses.push_back(sentences[i]);
        miss_first_index.push_back(i);
      }
    }
    if (misses.empty()) return out;

    std::vector<SentenceEmbeddings> fetched;
    try {
      fetched = backend_->embed_batch(misses);
    } catch (const BatchError &e) {
      throw BatchError(e.kind(), miss_first_index.at(e.index()), e.what());
    }
    if (fetched.size() != misses.size())
      throw Error(ErrorKind::kTransport, "backend returned wrong batch size");

    std::vector<EmbeddingsPtr> fresh(misses.size());
    for (std::size_t k = 0; k < misses.size(); ++k) {
      try {
        fresh[k] = std::make_shared<const SentenceEmbeddings>(
            checked(std::move(fetched[k])));
      } catch (const Error &e) {
        throw BatchError(e.kind(), miss_first_index[k], e.what());
      }
      cache_.put(misses[k], fresh[k]);
    }
    for (std::size_t i = 0; i < sentences.size(); ++i)
      if (!out[i]) out[i] = fresh[miss_slot.at(sentences[i])];
    return out;
  }

  std::string_view backend_name() const { return backend_->name(); }
  const EmbeddingCache &cache() const noexcept { return cache_; }

 private:
  static void check_sentence(const std::string &sentence) {
    if (sentence.find_first_not_of(" \t\n\r\f\v") == std::string::npos)
      throw Error(ErrorKind::kEmptySentence, "sentence is empty after trimming");
  }

  SentenceEmbeddings checked(SentenceEmbeddings e) {
    validate(e);
    std::lock_guard lock(dim_mutex_);
    if (!dimension_) dimension_ = e.dimension;
    if (e.dimension != *dimension_)
      throw Error(ErrorKind::kBadDimension,
                  "backend returned dim " + std::to_string(e.dimension) +
                      ", expected " + std::to_string(*dimension_));
    return e;
  }

  std::unique_ptr<EmbeddingBackend> backend_;
  EmbeddingCache cache_;
  std::mutex dim_mutex_;
  std::optional<std::size_t> dimension_;
};

}  // namespace semdist

#endif  // SEMDIST_EMBEDDING_HPP_
