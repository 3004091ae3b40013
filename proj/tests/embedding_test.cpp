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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>
#include <vector>

#include "semdist/embedding.hpp"
#include "semdist/embedding_http.hpp"
#include "support/synthetic.hpp"

using namespace semdist;
using Catch::Approx;

namespace {

// Standalone copies of the hash chain, written from the published
// definitions.
std::uint64_t ref_fnv(const std::string &s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<float> ref_vector(std::uint64_t state, std::size_t dim) {
  std::vector<double> v(dim);
  double n2 = 0;
  for (auto &x : v) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    x = 2.0 * (static_cast<double>(z >> 11) / 9007199254740992.0) - 1.0;
    n2 += x * x;
  }
  std::vector<float> out;
  for (double x : v) out.push_back(static_cast<float>(x / std::sqrt(n2)));
  return out;
}

bool bit_equal(std::span<const float> a, const std::vector<float> &b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

void write_file(const std::filesystem::path &p, const std::string &text) {
  std::ofstream(p) << text;
}

ErrorKind kind_of(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::kConfig;
}

}  // namespace

TEST_CASE("hash primitives match published vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("hello") == ref_fnv("hello"));
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xe220a8397b1dcdafULL);
}

TEST_CASE("deterministic backend follows the hash chain") {
  DeterministicBackend backend(4, 0);
  const auto e = backend.embed("hello world");
  REQUIRE(e.tokens == std::vector<std::string>{"hello", "world"});
  REQUIRE(e.dimension == 4);
  CHECK(bit_equal(e.token_vector(0), ref_vector(ref_fnv("hello") ^ 0 ^ 0, 4)));
  CHECK(bit_equal(e.token_vector(1), ref_vector(ref_fnv("world") ^ 0 ^ 1, 4)));
  CHECK(bit_equal(e.cls_vector(), ref_vector(ref_fnv("hello world") ^ ref_fnv("<CLS>"), 4)));
  for (std::size_t i = 0; i < 2; ++i) {
    double n2 = 0;
    for (float v : e.token_vector(i)) n2 += double(v) * v;
    CHECK(std::sqrt(n2) == Approx(1.0).epsilon(1e-6));
  }

  DeterministicBackend seeded(4, 99);
  CHECK(bit_equal(seeded.embed("hello world").token_vector(1),
                  ref_vector(ref_fnv("world") ^ 99 ^ 1, 4)));
}

TEST_CASE("deterministic backend splits raw text on whitespace only") {
  DeterministicBackend backend;
  const auto e = backend.embed("  Set an alarm.\tnow ");
  CHECK(e.tokens == std::vector<std::string>{"Set", "an", "alarm.", "now"});
  CHECK(e.dimension == kDefaultDeterministicDimension);
  CHECK(backend.embed("set") != backend.embed("Set"));
  CHECK_THROWS_AS(DeterministicBackend(1), Error);
}

TEST_CASE("record format round trips exactly") {
  DeterministicBackend backend(8, 3);
  const auto e = backend.embed("round trip me");
  const auto text = to_record("round trip me", e).dump();
  CHECK(from_record(nlohmann::json::parse(text)) == e);
}

TEST_CASE("file backend serves stored vectors") {
  const auto dir = synthetic::scratch_dir("file_backend");
  DeterministicBackend source(6, 11);
  std::string body;
  for (const char *s : {"set an alarm", "cancel an alarm", "hello"})
    body += to_record(s, source.embed(s)).dump() + "\n\n";
  write_file(dir / "emb.jsonl", body);

  FileBackend file(dir / "emb.jsonl");
  CHECK(file.size() == 3);
  CHECK(file.embed("cancel an alarm") == source.embed("cancel an alarm"));
  CHECK(kind_of([&] { file.embed("missing sentence"); }) == ErrorKind::kNotFound);
  CHECK(kind_of([&] { FileBackend(dir / "emb.jsonl", 7); }) == ErrorKind::kBadDimension);
  CHECK(kind_of([&] { FileBackend(dir / "absent.jsonl"); }) == ErrorKind::kIo);
}

TEST_CASE("file backend rejects malformed files") {
  const auto dir = synthetic::scratch_dir("file_backend_bad");
  write_file(dir / "syntax.jsonl",
             R"({"sentence":"a","tokens":["a"],"token_vectors":[[1,0]],"cls":[1,0],"dim":2})"
             "\n{not json\n");
  try {
    FileBackend f(dir / "syntax.jsonl");
    FAIL("expected Parse");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kParse);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  write_file(dir / "width.jsonl",
             R"({"sentence":"a","tokens":["a"],"token_vectors":[[1,0,0]],"cls":[1,0],"dim":2})"
             "\n");
  CHECK(kind_of([&] { FileBackend f(dir / "width.jsonl"); }) == ErrorKind::kBadDimension);

  write_file(dir / "mixed.jsonl",
             R"({"sentence":"a","tokens":["a"],"token_vectors":[[1,0]],"cls":[1,0],"dim":2})"
             "\n"
             R"({"sentence":"b","tokens":["b"],"token_vectors":[[1,0,0]],"cls":[1,0,0],"dim":3})"
             "\n");
  CHECK(kind_of([&] { FileBackend f(dir / "mixed.jsonl"); }) == ErrorKind::kBadDimension);

  write_file(dir / "dup.jsonl",
             R"({"sentence":"a","tokens":["a"],"token_vectors":[[1,0]],"cls":[1,0],"dim":2})"
             "\n"
             R"({"sentence":"a","tokens":["a"],"token_vectors":[[0,1]],"cls":[1,0],"dim":2})"
             "\n");
  CHECK(kind_of([&] { FileBackend f(dir / "dup.jsonl"); }) == ErrorKind::kParse);
}

TEST_CASE("provider cache is transparent and bounded") {
  EmbeddingProvider cached(std::make_unique<DeterministicBackend>(), 2);
  EmbeddingProvider uncached(std::make_unique<DeterministicBackend>(), 0);
  for (const char *s : {"a b", "c d", "a b", "e f", "c d", "a b"}) {
    CHECK(*cached.embed(s) == *uncached.embed(s));
    CHECK(cached.cache().size() <= 2);
  }
  CHECK(uncached.cache().size() == 0);

  EmbeddingCache lru(2);
  auto val = std::make_shared<const SentenceEmbeddings>();
  lru.put("x", val);
  lru.put("y", val);
  REQUIRE(lru.get("x"));  // x becomes most recent
  lru.put("z", val);      // evicts y
  CHECK(lru.get("x"));
  CHECK_FALSE(lru.get("y"));
  CHECK(lru.get("z"));
}

TEST_CASE("provider rejects empty sentences") {
  EmbeddingProvider provider(std::make_unique<DeterministicBackend>(), 8);
  CHECK(kind_of([&] { provider.embed("   \t"); }) == ErrorKind::kEmptySentence);
  CHECK(kind_of([&] { provider.embed(""); }) == ErrorKind::kEmptySentence);
}

TEST_CASE("provider enforces the configured dimension") {
  EmbeddingProvider provider(std::make_unique<DeterministicBackend>(4), 8, 16);
  CHECK(kind_of([&] { provider.embed("x"); }) == ErrorKind::kBadDimension);
}

TEST_CASE("batch embedding matches sequential calls") {
  EmbeddingProvider batch(std::make_unique<DeterministicBackend>(8, 5), 16);
  EmbeddingProvider single(std::make_unique<DeterministicBackend>(8, 5), 0);
  const std::vector<std::string> sentences = {"one", "two three", "one", "four", "two three"};
  const auto results = batch.embed_batch(sentences);
  REQUIRE(results.size() == sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) CHECK(*results[i] == *single.embed(sentences[i]));
}

TEST_CASE("batch errors carry the failing index") {
  const auto dir = synthetic::scratch_dir("batch_errors");
  DeterministicBackend source(4);
  write_file(dir / "emb.jsonl", to_record("known", source.embed("known")).dump() + "\n");
  EmbeddingProvider provider(std::make_unique<FileBackend>(dir / "emb.jsonl"), 8);
  const std::vector<std::string> sentences = {"known", "known", "unknown", "also unknown"};
  try {
    provider.embed_batch(sentences);
    FAIL("expected BatchError");
  } catch (const BatchError &e) {
    CHECK(e.kind() == ErrorKind::kNotFound);
    CHECK(e.index() == 2);
  }
  const std::vector<std::string> with_blank = {"known", " "};
  try {
    provider.embed_batch(with_blank);
    FAIL("expected BatchError");
  } catch (const BatchError &e) {
    CHECK(e.kind() == ErrorKind::kEmptySentence);
    CHECK(e.index() == 1);
  }
}

TEST_CASE("provider is safe under concurrent use") {
  EmbeddingProvider shared(std::make_unique<DeterministicBackend>(), 3);
  EmbeddingProvider reference(std::make_unique<DeterministicBackend>(), 0);
  std::vector<std::string> sentences;
  for (int i = 0; i < 20; ++i) sentences.push_back("sentence number " + std::to_string(i % 7));
  std::atomic<int> mismatches{0};
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t)
      threads.emplace_back([&, t] {
        for (int round = 0; round < 50; ++round) {
          const auto &s = sentences[(t * 3 + round) % sentences.size()];
          if (!(*shared.embed(s) == *reference.embed(s))) ++mismatches;
        }
      });
  }
  CHECK(mismatches == 0);
}

TEST_CASE("provider factory validates configuration") {
  ProviderConfig config;
  config.backend = BackendKind::kFile;
  CHECK(kind_of([&] { make_provider(config); }) == ErrorKind::kConfig);
  config.backend = BackendKind::kHttp;
  ::unsetenv(kEmbedUrlEnv);
  CHECK(kind_of([&] { make_provider(config); }) == ErrorKind::kConfig);
  config.backend = BackendKind::kDeterministic;
  config.dimension = 1;
  CHECK(kind_of([&] { make_provider(config); }) == ErrorKind::kConfig);
  config.dimension = 5;
  CHECK(make_provider(config)->embed("x y")->dimension == 5);
}
