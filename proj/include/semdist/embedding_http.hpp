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

#ifndef SEMDIST_EMBEDDING_HTTP_HPP_
#define SEMDIST_EMBEDDING_HTTP_HPP_

#include <chrono>
#include <cstdlib>
#include <memory>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "semdist/embedding.hpp"
#include "semdist/error.hpp"

namespace semdist {

struct HttpOptions {
  std::size_t max_in_flight = 8;
  std::size_t max_batch = 64;
  int retries = 2;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds retry_backoff{100};
};

/// Client for an embedding sidecar:
///   POST {endpoint}/embed  {"sentences": [...]}
///   -> {"results": [record...], "dim": D}
/// Any non-2xx reply or malformed body is a Transport error. Connection
/// failures and 5xx replies are retried with exponential backoff.
class HttpBackend final : public EmbeddingBackend {
 public:
  HttpBackend(const std::string &endpoint_url, HttpOptions options = {})
      : options_(options),
        in_flight_(static_cast<std::ptrdiff_t>(options.max_in_flight)) {
    const auto scheme_end = endpoint_url.find("://");
    if (scheme_end == std::string::npos ||
        endpoint_url.compare(0, scheme_end, "http") != 0)
      throw Error(ErrorKind::kConfig,
                  "endpoint must be an http:// url: " + endpoint_url);
    const auto path_start = endpoint_url.find('/', scheme_end + 3);
    host_ = endpoint_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = endpoint_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  SentenceEmbeddings embed(const std::string &sentence) override {
    std::vector<std::string> one{sentence};
    try {
      return std::move(embed_batch(one).front());
    } catch (const BatchError &e) {
      throw Error(e.kind(), e.what());
    }
  }

  std::vector<SentenceEmbeddings> embed_batch(
      std::span<const std::string> sentences) override {
    std::vector<SentenceEmbeddings> out;
    out.reserve(sentences.size());
    for (std::size_t start = 0; start < sentences.size();
         start += options_.max_batch) {
      const auto chunk = sentences.subspan(
          start, std::min(options_.max_batch, sentences.size() - start));
      try {
        auto part = post_chunk(chunk);
        for (auto &e : part) out.push_back(std::move(e));
      } catch (const BatchError &e) {
        throw BatchError(e.kind(), start + e.index(), e.what());
      } catch (const Error &e) {
        throw BatchError(e.kind(), start, e.what());
      }
    }
    return out;
  }

  std::string_view name() const override { return "http"; }

 private:
  class Permit {
   public:
    explicit Permit(std::counting_semaphore<> &s) : s_(s) { s_.acquire(); }
    ~Permit() { s_.release(); }
    Permit(const Permit &) = delete;
    Permit &operator=(const Permit &) = delete;

   private:
    std::counting_semaphore<> &s_;
  };

  std::vector<SentenceEmbeddings> post_chunk(std::span<const std::string> chunk) {
    nlohmann::json body;
    body["sentences"] = std::vector<std::string>(chunk.begin(), chunk.end());
    const std::string payload = body.dump();
    const std::string path = prefix_ + "/embed";

    std::string last_failure;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(options_.retry_backoff * (1 << (attempt - 1)));
      httplib::Result res;
      {
        Permit permit(in_flight_);
        httplib::Client client(host_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
            options_.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        res = client.Post(path, payload, "application/json");
      }
      if (!res) {
        last_failure = "request to " + host_ + path + " failed: " +
                       httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_failure = "HTTP " + std::to_string(res->status) + " from " + host_ + path;
        continue;
      }
      if (res->status < 200 || res->status >= 300)
        throw Error(ErrorKind::kTransport,
                    "HTTP " + std::to_string(res->status) + " from " + host_ + path);
      return decode(res->body, chunk.size());
    }
    throw Error(ErrorKind::kTransport, last_failure);
  }

  static std::vector<SentenceEmbeddings> decode(const std::string &body,
                                                std::size_t expected) {
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error &ex) {
      throw Error(ErrorKind::kTransport, std::string("malformed reply: ") + ex.what());
    }
    if (!reply.is_object() || !reply.contains("results") ||
        !reply["results"].is_array() || !reply.contains("dim"))
      throw Error(ErrorKind::kTransport, "reply lacks \"results\" or \"dim\"");
    if (reply["results"].size() != expected)
      throw Error(ErrorKind::kTransport,
                  "reply has " + std::to_string(reply["results"].size()) +
                      " results for " + std::to_string(expected) + " sentences");
    std::size_t dim = 0;
    try {
      dim = reply["dim"].get<std::size_t>();
    } catch (const nlohmann::json::exception &) {
      throw Error(ErrorKind::kTransport, "reply \"dim\" is not an integer");
    }

    std::vector<SentenceEmbeddings> out;
    out.reserve(expected);
    for (std::size_t i = 0; i < expected; ++i) {
      try {
        auto e = from_record(reply["results"][i]);
        if (e.dimension != dim)
          throw Error(ErrorKind::kBadDimension,
                      "record dim " + std::to_string(e.dimension) +
                          " differs from reply dim " + std::to_string(dim));
        out.push_back(std::move(e));
      } catch (const Error &e) {
        const auto kind = e.kind() == ErrorKind::kParse ? ErrorKind::kTransport : e.kind();
        throw BatchError(kind, i, e.what());
      }
    }
    return out;
  }

  HttpOptions options_;
  std::string host_;
  std::string prefix_;
  std::counting_semaphore<> in_flight_;
};

inline constexpr const char *kEmbedUrlEnv = "SEMDIST_EMBED_URL";

/// Builds the provider described by `config`. For the http backend the
/// SEMDIST_EMBED_URL environment variable, when set, replaces the endpoint.
inline std::unique_ptr<EmbeddingProvider> make_provider(ProviderConfig config) {
  if (config.backend == BackendKind::kHttp) {
    if (const char *env = std::getenv(kEmbedUrlEnv); env && *env)
      config.endpoint_url = env;
  }
  validate(config);

  std::unique_ptr<EmbeddingBackend> backend;
  switch (config.backend) {
    case BackendKind::kDeterministic:
      if (!config.dimension) config.dimension = kDefaultDeterministicDimension;
      backend = std::make_unique<DeterministicBackend>(*config.dimension, config.seed);
      break;
    case BackendKind::kFile:
      backend = std::make_unique<FileBackend>(*config.embedding_file, config.dimension);
      break;
    case BackendKind::kHttp: {
      HttpOptions options;
      options.max_in_flight = config.max_in_flight;
      options.max_batch = config.max_batch;
      options.timeout = config.timeout;
      options.retry_backoff = config.retry_backoff;
      backend = std::make_unique<HttpBackend>(*config.endpoint_url, options);
      break;
    }
  }
  return std::make_unique<EmbeddingProvider>(std::move(backend),
                                             config.cache_capacity, config.dimension);
}

}  // namespace semdist

#endif  // SEMDIST_EMBEDDING_HTTP_HPP_
