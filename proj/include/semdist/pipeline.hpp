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

#ifndef SEMDIST_PIPELINE_HPP_
#define SEMDIST_PIPELINE_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "semdist/analysis.hpp"
#include "semdist/corpus.hpp"
#include "semdist/edit_metrics.hpp"
#include "semdist/embedding.hpp"
#include "semdist/embedding_http.hpp"
#include "semdist/report.hpp"
#include "semdist/semantic_distance.hpp"
#include "semdist/text_normalization.hpp"

namespace semdist {

enum class Variant { kMeanPooling, kCls, kPairwiseToken };

inline std::string_view metric_name(Variant v) {
  switch (v) {
    case Variant::kMeanPooling: return "semdist_mean";
    case Variant::kCls: return "semdist_cls";
    case Variant::kPairwiseToken: return "semdist_pairwise";
  }
  return "?";
}

/// Which text is sent to the embedding provider.
enum class EmbedText { kRaw, kNormalized };

struct RunConfig {
  std::filesystem::path corpus_path;
  ProviderConfig provider;
  double alpha = kDefaultScale;
  std::vector<Variant> variants = {Variant::kMeanPooling, Variant::kCls,
                                   Variant::kPairwiseToken};
  EmbedText embed_text = EmbedText::kRaw;
  std::filesystem::path output_dir = "semdist-out";
  std::size_t top_k = 5;
  std::size_t parallelism = 1;
  bool skip_errors = false;
};

inline void validate(const RunConfig &config) {
  if (config.variants.empty())
    throw Error(ErrorKind::kConfig, "at least one SemDist variant is required");
  if (!(config.alpha > 0.0)) throw Error(ErrorKind::kConfig, "alpha must be > 0");
  if (config.top_k < 1) throw Error(ErrorKind::kConfig, "top-k must be >= 1");
  if (config.parallelism < 1) throw Error(ErrorKind::kConfig, "parallelism must be >= 1");
  validate(config.provider);
}

// ---------------------------------------------------------------------------
// Per-record evaluation

struct RecordFailure {
  std::size_t index = 0;
  std::string id;
  ErrorKind kind = ErrorKind::kConfig;
  std::string message;
};

struct SlotSummary {
  HypSlot slot = HypSlot::kA;
  std::size_t hypotheses = 0;
  std::size_t word_errors = 0, reference_words = 0;
  std::size_t char_errors = 0, reference_chars = 0;
  std::map<std::string, double> semdist_means;

  double pooled_wer() const {
    return reference_words ? 100.0 * static_cast<double>(word_errors) /
                                 static_cast<double>(reference_words)
                           : 0.0;
  }
  double pooled_cer() const {
    return reference_chars ? 100.0 * static_cast<double>(char_errors) /
                                 static_cast<double>(reference_chars)
                           : 0.0;
  }
};

struct EvaluationResult {
  std::vector<MetricRow> rows;  // record order, hypothesis A before B
  std::vector<RecordFailure> failures;
  std::vector<SlotSummary> summary;
};

inline std::vector<MetricRow> evaluate_record(const EvalRecord &record,
                                              EmbeddingProvider &provider,
                                              const RunConfig &config) {
  const NormalizedText ref = normalize(record.reference);
  std::vector<std::pair<HypSlot, NormalizedText>> hyps;
  hyps.emplace_back(HypSlot::kA, normalize(record.hypothesis_a));
  if (record.hypothesis_b) hyps.emplace_back(HypSlot::kB, normalize(*record.hypothesis_b));

  auto embed_input = [&](const NormalizedText &t) {
    return config.embed_text == EmbedText::kRaw ? t.original : t.normalized;
  };
  std::vector<std::string> sentences{embed_input(ref)};
  for (const auto &[slot, h] : hyps) sentences.push_back(embed_input(h));
  const auto embeddings = provider.embed_batch(sentences);

  std::vector<MetricRow> rows;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    const auto &[slot, hyp] = hyps[k];
    const SentenceEmbeddings &er = *embeddings[0];
    const SentenceEmbeddings &eh = *embeddings[k + 1];
    MetricRow row;
    row.id = record.id;
    row.slot = slot;
    row.reference = record.reference;
    row.hypothesis = hyp.original;
    row.word = wer(ref, hyp);
    row.character = cer(ref, hyp);
    row.scale = config.alpha;
    for (Variant v : config.variants) {
      switch (v) {
        case Variant::kMeanPooling:
          row.semdist_mean = semdist_mean_pooling(er, eh, config.alpha);
          break;
        case Variant::kCls:
          row.semdist_cls = semdist_cls(er, eh, config.alpha);
          break;
        case Variant::kPairwiseToken: {
          auto result = semdist_pairwise_token(er, eh, config.alpha);
          row.semdist_pairwise = result.score;
          row.pairwise_detail = result.detail;
          break;
        }
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<SlotSummary> summarize(std::span<const MetricRow> rows) {
  std::vector<SlotSummary> out;
  for (HypSlot slot : {HypSlot::kA, HypSlot::kB}) {
    SlotSummary s;
    s.slot = slot;
    std::map<std::string, std::size_t> counts;
    for (const auto &r : rows) {
      if (r.slot != slot) continue;
      ++s.hypotheses;
      s.word_errors += r.word.errors();
      s.reference_words += r.word.reference_length;
      s.char_errors += r.character.errors();
      s.reference_chars += r.character.reference_length;
      for (auto name : {"semdist_mean", "semdist_cls", "semdist_pairwise"})
        if (auto v = metric_value(r, name)) {
          s.semdist_means[name] += *v;
          ++counts[name];
        }
    }
    for (auto &[name, sum] : s.semdist_means) sum /= static_cast<double>(counts[name]);
    if (s.hypotheses > 0) out.push_back(std::move(s));
  }
  return out;
}

/// Computes metric rows for every record with `config.parallelism` workers.
/// Output order follows record order regardless of scheduling. Without
/// skip_errors the lowest-index failure observed is rethrown.
inline EvaluationResult evaluate_corpus(std::span<const EvalRecord> records,
                                        EmbeddingProvider &provider,
                                        const RunConfig &config) {
  std::vector<std::optional<std::vector<MetricRow>>> slots(records.size());
  std::vector<std::optional<RecordFailure>> failed(records.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      try {
        slots[i] = evaluate_record(records[i], provider, config);
      } catch (const Error &e) {
        failed[i] = RecordFailure{i, records[i].id, e.kind(), e.what()};
        if (!config.skip_errors) abort.store(true);
      }
    }
  };

  const std::size_t workers = std::min(config.parallelism, std::max<std::size_t>(records.size(), 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  EvaluationResult result;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (failed[i]) {
      if (!config.skip_errors)
        throw Error(failed[i]->kind, "record " + failed[i]->id + ": " + failed[i]->message);
      result.failures.push_back(*failed[i]);
    } else if (slots[i]) {
      for (auto &row : *slots[i]) result.rows.push_back(std::move(row));
    }
  }
  result.summary = summarize(result.rows);
  return result;
}

// ---------------------------------------------------------------------------
// Commands. Each writes its outputs under config.output_dir and returns the
// human-readable rendering.

namespace detail {

template <typename Lines>
void write_lines(const std::filesystem::path &path, const Lines &lines) {
  auto out = open_for_write(path);
  for (const auto &j : lines) out << j.dump() << '\n';
  finish_write(out, path);
}

inline void write_text(const std::filesystem::path &path, const std::string &text) {
  auto out = open_for_write(path);
  out << text;
  finish_write(out, path);
}

}  // namespace detail

inline std::string render_summary(const EvaluationResult &result) {
  std::string out;
  for (const auto &s : result.summary) {
    out += fmt::format("hyp {}: {} hypotheses, WER {:.2f} ({} / {}), CER {:.2f}\n",
                       to_string(s.slot), s.hypotheses, s.pooled_wer(), s.word_errors,
                       s.reference_words, s.pooled_cer());
    for (const auto &[name, mean] : s.semdist_means)
      out += fmt::format("  mean {} {:.2f}\n", name, mean);
  }
  if (!result.failures.empty())
    out += fmt::format("{} records failed (see errors.jsonl)\n", result.failures.size());
  return out;
}

inline std::string cmd_evaluate(const RunConfig &config, EvaluationResult *result_out = nullptr) {
  validate(config);
  const auto records = load_corpus(config.corpus_path);
  auto provider = make_provider(config.provider);
  EvaluationResult result = evaluate_corpus(records, *provider, config);

  write_metric_rows(records, result.rows, config.output_dir / "metrics.jsonl");

  std::vector<nlohmann::ordered_json> lines;
  for (const auto &s : result.summary) {
    nlohmann::ordered_json j;
    j["hyp"] = to_string(s.slot);
    j["hypotheses"] = s.hypotheses;
    j["word_errors"] = s.word_errors;
    j["reference_words"] = s.reference_words;
    j["wer"] = s.pooled_wer();
    j["char_errors"] = s.char_errors;
    j["reference_chars"] = s.reference_chars;
    j["cer"] = s.pooled_cer();
    for (const auto &[name, mean] : s.semdist_means) j["mean_" + name] = mean;
    j["alpha"] = config.alpha;
    j["failures"] = result.failures.size();
    lines.push_back(std::move(j));
  }
  detail::write_lines(config.output_dir / "summary.jsonl", lines);

  const auto errors_path = config.output_dir / "errors.jsonl";
  if (!result.failures.empty()) {
    std::vector<nlohmann::ordered_json> errors;
    for (const auto &f : result.failures) {
      nlohmann::ordered_json j;
      j["index"] = f.index;
      j["id"] = f.id;
      j["kind"] = to_string(f.kind);
      j["message"] = f.message;
      errors.push_back(std::move(j));
    }
    detail::write_lines(errors_path, errors);
  } else {
    std::error_code ec;
    std::filesystem::remove(errors_path, ec);
  }

  std::string text = render_summary(result);
  detail::write_text(config.output_dir / "summary.txt", text);
  if (result_out) *result_out = std::move(result);
  return text;
}

inline std::filesystem::path default_metrics_path(const RunConfig &config) {
  return config.output_dir / "metrics.jsonl";
}

inline std::string cmd_correlate(const RunConfig &config,
                                 const std::filesystem::path &metrics_path,
                                 std::vector<std::string> metrics = {}) {
  const auto records = load_corpus(config.corpus_path);
  const auto rows = read_metric_rows(metrics_path);
  const auto table = correlation_table(records, rows, std::move(metrics));
  std::vector<nlohmann::ordered_json> lines;
  for (const auto &r : table) lines.push_back(to_json(r));
  detail::write_lines(config.output_dir / "correlation.jsonl", lines);
  std::string text = render_correlation_grid(table);
  detail::write_text(config.output_dir / "correlation.txt", text);
  return text;
}

/// Rank-gap inputs from the hypothesis-A rows carrying `semdist_metric`.
inline std::vector<RankInput> rank_inputs(std::span<const MetricRow> rows,
                                          std::string_view semdist_metric) {
  std::vector<RankInput> items;
  for (const auto &r : rows) {
    if (r.slot != HypSlot::kA) continue;
    const auto s = metric_value(r, semdist_metric);
    if (!s) continue;
    items.push_back({r.id, r.word.error_rate, *s, r.reference, r.hypothesis});
  }
  return items;
}

inline std::string cmd_rankgap(const RunConfig &config,
                               const std::filesystem::path &metrics_path,
                               std::string_view semdist_metric = "semdist_pairwise") {
  const auto rows = read_metric_rows(metrics_path);
  const auto items = rank_inputs(rows, semdist_metric);
  const auto report = rank_gap_report(items, config.top_k);
  std::vector<nlohmann::ordered_json> lines;
  for (std::size_t i = 0; i < report.wer_ranks_higher.size(); ++i)
    lines.push_back(to_json(report.wer_ranks_higher[i], "wer_minus_semdist", i + 1));
  for (std::size_t i = 0; i < report.semdist_ranks_higher.size(); ++i)
    lines.push_back(to_json(report.semdist_ranks_higher[i], "semdist_minus_wer", i + 1));
  detail::write_lines(config.output_dir / "rankgap.jsonl", lines);
  std::string text = render_rank_gap(report);
  detail::write_text(config.output_dir / "rankgap.txt", text);
  return text;
}

inline std::string cmd_distribution(const RunConfig &config,
                                    const std::filesystem::path &metrics_path,
                                    std::vector<std::string> metrics = {}) {
  const auto records = load_corpus(config.corpus_path);
  const auto rows = read_metric_rows(metrics_path);
  const auto summary = distribution_by_rating(records, rows, std::move(metrics));
  std::vector<nlohmann::ordered_json> lines;
  for (const auto &c : summary.cells) lines.push_back(to_json(c));
  for (RatingLabel level : summary.empty_levels) {
    nlohmann::ordered_json j;
    j["rating"] = to_int(level);
    j["label"] = to_string(level);
    j["empty"] = true;
    lines.push_back(std::move(j));
  }
  detail::write_lines(config.output_dir / "distribution.jsonl", lines);
  std::string text = render_distribution(summary);
  detail::write_text(config.output_dir / "distribution.txt", text);
  return text;
}

/// Rated hypothesis-A rows as a regression problem over `features`.
inline std::pair<FeatureMatrix, std::vector<double>> judgement_data(
    std::span<const EvalRecord> records, std::span<const MetricRow> rows,
    std::span<const std::string> features) {
  std::map<std::string, const MetricRow *> by_id;
  for (const auto &r : rows)
    if (r.slot == HypSlot::kA) by_id[r.id] = &r;
  std::vector<double> flat, ys;
  for (const auto &rec : records) {
    if (!rec.rating) continue;
    auto it = by_id.find(rec.id);
    if (it == by_id.end()) continue;
    std::vector<double> values;
    for (const auto &f : features) {
      auto v = metric_value(*it->second, f);
      if (!v) break;
      values.push_back(*v);
    }
    if (values.size() != features.size()) continue;
    flat.insert(flat.end(), values.begin(), values.end());
    ys.push_back(to_int(*rec.rating));
  }
  FeatureMatrix x;
  x.rows = ys.size();
  x.cols = features.size();
  x.data = std::move(flat);
  return {std::move(x), std::move(ys)};
}

struct FitOptions {
  std::string semdist_metric = "semdist_pairwise";
  std::vector<std::vector<std::string>> extra_feature_sets;
  std::optional<double> holdout_fraction;
  std::uint64_t seed = 0;
};

/// Fits WER-only, SemDist-only and WER+SemDist models plus any extra
/// feature sets; with a hold-out fraction each model is fitted on the
/// training part and also scored on the held-out part.
inline std::vector<JudgementModel> fit_judgement_models(std::span<const EvalRecord> records,
                                                        std::span<const MetricRow> rows,
                                                        const FitOptions &options) {
  std::vector<std::vector<std::string>> sets = {
      {"wer"}, {options.semdist_metric}, {"wer", options.semdist_metric}};
  for (const auto &extra : options.extra_feature_sets) sets.push_back(extra);

  std::vector<JudgementModel> models;
  for (const auto &features : sets) {
    for (const auto &f : features)
      if (!is_metric_name(f)) throw Error(ErrorKind::kConfig, "unknown feature \"" + f + "\"");
    auto [x, y] = judgement_data(records, rows, features);
    if (!options.holdout_fraction) {
      models.push_back(fit_judgement_model(x, y, features));
      continue;
    }
    auto [train, test] = holdout_split(x.rows, *options.holdout_fraction, options.seed);
    auto subset = [&](const std::vector<std::size_t> &idx) {
      FeatureMatrix sx(idx.size(), x.cols);
      std::vector<double> sy;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        for (std::size_t c = 0; c < x.cols; ++c) sx.at(r, c) = x.at(idx[r], c);
        sy.push_back(y[idx[r]]);
      }
      return std::pair{std::move(sx), std::move(sy)};
    };
    auto [tx, ty] = subset(train);
    auto [hx, hy] = subset(test);
    JudgementModel m = fit_judgement_model(tx, ty, features);
    m.heldout = evaluate_model(m, hx, hy);
    models.push_back(std::move(m));
  }
  return models;
}

inline std::string cmd_fit_judgement(const RunConfig &config,
                                     const std::filesystem::path &metrics_path,
                                     const FitOptions &options) {
  const auto records = load_corpus(config.corpus_path);
  const auto rows = read_metric_rows(metrics_path);
  const auto models = fit_judgement_models(records, rows, options);
  std::vector<nlohmann::ordered_json> lines;
  for (const auto &m : models) lines.push_back(to_json(m));
  detail::write_lines(config.output_dir / "models.jsonl", lines);
  std::string text = render_model_comparison(models);
  detail::write_text(config.output_dir / "judgement.txt", text);
  return text;
}

inline const JudgementModel &select_model(std::span<const JudgementModel> models,
                                          std::string_view name) {
  for (const auto &m : models)
    if (model_name(m) == name) return m;
  throw Error(ErrorKind::kConfig, "no model named \"" + std::string(name) + "\"");
}

/// Applies a model to every row of a metric file; rows lacking a feature
/// are skipped.
inline std::size_t cmd_predict(const JudgementModel &model,
                               const std::filesystem::path &metrics_path,
                               const std::filesystem::path &output_path) {
  const auto rows = read_metric_rows(metrics_path);
  std::vector<nlohmann::ordered_json> lines;
  for (const auto &r : rows) {
    std::vector<double> features;
    for (const auto &f : model.feature_names)
      if (auto v = metric_value(r, f)) features.push_back(*v);
    if (features.size() != model.feature_names.size()) continue;
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["hyp"] = to_string(r.slot);
    j["prediction"] = predict_judgement(model, features);
    lines.push_back(std::move(j));
  }
  detail::write_lines(output_path, lines);
  return lines.size();
}

}  // namespace semdist

#endif  // SEMDIST_PIPELINE_HPP_
