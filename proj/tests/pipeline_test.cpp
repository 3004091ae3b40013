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

#include <fstream>
#include <set>
#include <sstream>

#include "semdist/pipeline.hpp"
#include "support/synthetic.hpp"

using namespace semdist;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<EvalRecord> fixture() {
  std::vector<EvalRecord> records;
  auto add = [&](std::string id, std::string ref, std::string a, std::string b, int rating,
                 int choice) {
    EvalRecord r;
    r.id = std::move(id);
    r.reference = std::move(ref);
    r.hypothesis_a = std::move(a);
    r.hypothesis_b = std::move(b);
    r.rating = static_cast<RatingLabel>(rating);
    r.choice = static_cast<ChoiceLabel>(choice);
    records.push_back(std::move(r));
  };
  add("r1", "set an alarm for seven", "set an alarm for seven", "set alarm for eleven", 0, -1);
  add("r2", "play some jazz", "play sum jazz", "play some jazz", 1, 1);
  add("r3", "what is the weather today", "what is weather", "what is the weather to day", 2, 0);
  add("r4", "call mom", "call tom", "all mom", 3, 0);
  add("r5", "turn off the lights", "Turn off the lights.", "turn of the light", 0, -1);
  return records;
}

RunConfig base_config(const fs::path &dir) {
  RunConfig c;
  c.corpus_path = dir / "corpus.jsonl";
  c.output_dir = dir / "out";
  c.provider.backend = BackendKind::kDeterministic;
  c.provider.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("evaluate writes deterministic outputs") {
  const auto dir = synthetic::scratch_dir("pipeline_determinism");
  write_corpus(fixture(), dir / "corpus.jsonl");
  auto config = base_config(dir);

  EvaluationResult result;
  cmd_evaluate(config, &result);
  REQUIRE(result.rows.size() == 10);
  CHECK(result.failures.empty());
  CHECK(result.rows[0].id == "r1");
  CHECK(result.rows[0].slot == HypSlot::kA);
  CHECK(result.rows[1].slot == HypSlot::kB);
  CHECK(result.rows[0].word.error_rate == 0.0);
  CHECK(*result.rows[0].semdist_pairwise == 0.0);
  CHECK(result.rows[8].word.error_rate == 0.0);  // case and punctuation only
  CHECK_FALSE(fs::exists(config.output_dir / "errors.jsonl"));

  const auto first = slurp(config.output_dir / "metrics.jsonl");
  const auto summary = slurp(config.output_dir / "summary.jsonl");
  cmd_evaluate(config);
  CHECK(slurp(config.output_dir / "metrics.jsonl") == first);
  CHECK(slurp(config.output_dir / "summary.jsonl") == summary);

  const auto rows = read_metric_rows(config.output_dir / "metrics.jsonl");
  REQUIRE(rows.size() == result.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].word.error_rate == result.rows[i].word.error_rate);
    CHECK(*rows[i].semdist_mean == *result.rows[i].semdist_mean);
  }
}

TEST_CASE("parallel evaluation matches sequential") {
  const auto dir = synthetic::scratch_dir("pipeline_parallel");
  write_corpus(synthetic::make_corpus(120, 11), dir / "corpus.jsonl");
  auto config = base_config(dir);
  cmd_evaluate(config);
  const auto sequential = slurp(config.output_dir / "metrics.jsonl");
  config.parallelism = 6;
  config.provider.cache_capacity = 8;
  cmd_evaluate(config);
  CHECK(slurp(config.output_dir / "metrics.jsonl") == sequential);
}

TEST_CASE("file backend failures honour skip-errors") {
  const auto dir = synthetic::scratch_dir("pipeline_file_backend");
  const auto records = fixture();
  write_corpus(records, dir / "corpus.jsonl");

  DeterministicBackend det(8, 5);
  {
    std::ofstream out(dir / "emb.jsonl");
    std::set<std::string> written;
    for (const auto &r : records) {
      for (const auto *s : {&r.reference, &r.hypothesis_a, &*r.hypothesis_b}) {
        if (r.id == "r4" && s == &r.hypothesis_a) continue;  // leave one hole
        if (!written.insert(*s).second) continue;
        out << to_record(*s, det.embed(*s)).dump() << "\n";
      }
    }
  }
  auto config = base_config(dir);
  config.provider.backend = BackendKind::kFile;
  config.provider.embedding_file = dir / "emb.jsonl";

  try {
    cmd_evaluate(config);
    FAIL("expected failure");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kNotFound);
    CHECK(std::string(e.what()).find("r4") != std::string::npos);
  }

  config.skip_errors = true;
  EvaluationResult result;
  cmd_evaluate(config, &result);
  CHECK(result.rows.size() == 8);
  REQUIRE(result.failures.size() == 1);
  CHECK(result.failures[0].id == "r4");
  CHECK(result.failures[0].index == 3);
  CHECK(fs::exists(config.output_dir / "errors.jsonl"));

  // Scores through the file backend equal scores through the generating backend.
  auto det_config = base_config(dir);
  det_config.provider.dimension = 8;
  det_config.provider.seed = 5;
  det_config.skip_errors = true;
  auto provider = make_provider(det_config.provider);
  const auto direct = evaluate_corpus(records, *provider, det_config);
  std::size_t j = 0;
  for (const auto &row : direct.rows) {
    if (row.id == "r4") continue;
    CHECK(*row.semdist_pairwise == *result.rows[j].semdist_pairwise);
    CHECK(*row.semdist_cls == *result.rows[j].semdist_cls);
    ++j;
  }
}

TEST_CASE("normalized embedding text removes surface-only differences") {
  const auto dir = synthetic::scratch_dir("pipeline_normalized");
  write_corpus(fixture(), dir / "corpus.jsonl");
  auto config = base_config(dir);
  EvaluationResult raw, normalized;
  cmd_evaluate(config, &raw);
  config.embed_text = EmbedText::kNormalized;
  cmd_evaluate(config, &normalized);
  // r5 hypothesis A differs from its reference only in case and punctuation.
  CHECK(*raw.rows[8].semdist_pairwise > 0.0);
  CHECK(*normalized.rows[8].semdist_pairwise == 0.0);
}

TEST_CASE("variant selection controls metric columns") {
  const auto dir = synthetic::scratch_dir("pipeline_variants");
  write_corpus(fixture(), dir / "corpus.jsonl");
  auto config = base_config(dir);
  config.variants = {Variant::kCls};
  EvaluationResult result;
  cmd_evaluate(config, &result);
  CHECK(result.rows[0].semdist_cls.has_value());
  CHECK_FALSE(result.rows[0].semdist_mean.has_value());
  CHECK_FALSE(result.rows[0].semdist_pairwise.has_value());
  config.variants.clear();
  CHECK_THROWS_AS(validate(config), Error);
}

TEST_CASE("correlate prefers the metric that tracks ratings") {
  const auto dir = synthetic::scratch_dir("pipeline_correlate");
  std::vector<EvalRecord> records;
  std::vector<MetricRow> rows;
  SplitMix64 rng(8);
  for (int i = 0; i < 40; ++i) {
    EvalRecord r;
    r.id = "c" + std::to_string(i);
    r.reference = "ref";
    r.hypothesis_a = "hyp";
    const int rating = i % 4;
    r.rating = static_cast<RatingLabel>(rating);
    records.push_back(r);
    MetricRow m;
    m.id = r.id;
    m.word.error_rate = rating * 10.0 + rng.next_unit() * 40.0;
    m.character.error_rate = m.word.error_rate / 2;
    m.semdist_pairwise = rating * 100.0 + rng.next_unit() * 20.0;
    rows.push_back(m);
  }
  write_corpus(records, dir / "corpus.jsonl");
  write_metric_rows(records, rows, dir / "metrics.jsonl");
  auto config = base_config(dir);
  const auto text = cmd_correlate(config, dir / "metrics.jsonl", {"wer", "semdist_pairwise"});
  CHECK(text.find("UserRating") != std::string::npos);

  std::ifstream in(config.output_dir / "correlation.jsonl");
  std::map<std::string, double> r;
  for (std::string line; std::getline(in, line);) {
    const auto j = nlohmann::json::parse(line);
    r[j.at("metric").get<std::string>()] = j.at("pearson_r").get<double>();
  }
  CHECK(r.at("semdist_pairwise") > r.at("wer"));
}

TEST_CASE("fit-judgement recovers an exact linear relation") {
  const auto dir = synthetic::scratch_dir("pipeline_fit");
  std::vector<EvalRecord> records;
  std::vector<MetricRow> rows;
  SplitMix64 rng(4);
  for (int i = 0; i < 30; ++i) {
    EvalRecord r;
    r.id = "f" + std::to_string(i);
    r.reference = "ref";
    r.hypothesis_a = "hyp";
    r.rating = static_cast<RatingLabel>(i % 4);
    records.push_back(r);
    MetricRow m;
    m.id = r.id;
    m.word.error_rate = rng.next_unit() * 50;
    m.semdist_pairwise = 250.0 * (i % 4) + 40.0;  // rating = (s - 40) / 250
    rows.push_back(m);
  }
  write_corpus(records, dir / "corpus.jsonl");
  write_metric_rows(records, rows, dir / "metrics.jsonl");
  auto config = base_config(dir);
  cmd_fit_judgement(config, dir / "metrics.jsonl", FitOptions{});

  std::vector<JudgementModel> models = read_models(config.output_dir / "models.jsonl");
  REQUIRE(models.size() == 3);
  const auto &sem = select_model(models, "semdist_pairwise");
  CHECK(sem.fit.r2 == Catch::Approx(1.0).margin(1e-12));
  CHECK(sem.coefficients[0] == Catch::Approx(1.0 / 250).margin(1e-12));
  CHECK(select_model(models, "wer+semdist_pairwise").fit.r2 ==
        Catch::Approx(1.0).margin(1e-12));
  CHECK(select_model(models, "wer").fit.r2 < 0.5);

  const auto n = cmd_predict(sem, dir / "metrics.jsonl", dir / "pred.jsonl");
  CHECK(n == 30);
  std::ifstream in(dir / "pred.jsonl");
  std::string line;
  std::getline(in, line);
  CHECK(nlohmann::json::parse(line).at("prediction").get<double>() ==
        Catch::Approx(0.0).margin(1e-9));

  FitOptions holdout;
  holdout.holdout_fraction = 0.25;
  holdout.seed = 1;
  const auto split = fit_judgement_models(records, rows, holdout);
  for (const auto &m : split) {
    REQUIRE(m.heldout.has_value());
    CHECK(m.sample_count == 22);
  }
}

TEST_CASE("rankgap and distribution commands") {
  const auto dir = synthetic::scratch_dir("pipeline_rankgap");
  write_corpus(synthetic::make_corpus(60, 2), dir / "corpus.jsonl");
  auto config = base_config(dir);
  config.top_k = 4;
  cmd_evaluate(config);
  const auto metrics = default_metrics_path(config);
  cmd_rankgap(config, metrics);
  std::ifstream in(config.output_dir / "rankgap.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 8);
  const auto text = cmd_distribution(config, metrics);
  CHECK(text.find("exact_match") != std::string::npos);
  config.top_k = 61;
  CHECK_THROWS_AS(cmd_rankgap(config, metrics), Error);
}
