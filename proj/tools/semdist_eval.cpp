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

// semdist-eval: WER/CER and SemDist evaluation of ASR transcripts, plus
// correlation, rank-gap, distribution and user-judgement analyses.

#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semdist/pipeline.hpp"

namespace {

using namespace semdist;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return 1;
    case ErrorKind::kTransport: return 3;
    default: return 2;
  }
}

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<Variant> parse_variants(const std::string &list) {
  std::vector<Variant> out;
  for (const auto &name : split_list(list)) {
    if (name == "mean") out.push_back(Variant::kMeanPooling);
    else if (name == "cls") out.push_back(Variant::kCls);
    else if (name == "pairwise") out.push_back(Variant::kPairwiseToken);
    else throw Error(ErrorKind::kConfig, "unknown variant \"" + name + "\" (mean, cls, pairwise)");
  }
  return out;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"ASR transcript evaluation with WER, CER and semantic distance"};
  app.require_subcommand(1);

  std::string corpus, out_dir = "semdist-out", metrics_path;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App *cmd, bool needs_corpus) {
    auto *opt = cmd->add_option("--corpus", corpus, "corpus file (JSONL)");
    if (needs_corpus) opt->required();
    cmd->add_option("--out-dir", out_dir, "directory for outputs")->capture_default_str();
    cmd->add_option("--seed", seed, "seed for every random choice")->capture_default_str();
  };
  auto add_metrics_input = [&](CLI::App *cmd) {
    cmd->add_option("--metrics", metrics_path, "metric rows (default: <out-dir>/metrics.jsonl)");
  };

  // evaluate
  std::string backend = "deterministic", endpoint, embeddings_file, variants = "mean,cls,pairwise",
              embed_text = "raw";
  std::size_t dim = 0, cache_capacity = 4096, max_in_flight = 8, parallelism = 1;
  long timeout_ms = 30000;
  double alpha = kDefaultScale;
  bool skip_errors = false;
  auto *evaluate = app.add_subcommand("evaluate", "compute per-hypothesis metrics");
  add_common(evaluate, true);
  evaluate->add_option("--backend", backend, "embedding backend")
      ->check(CLI::IsMember({"deterministic", "file", "http"}))
      ->capture_default_str();
  evaluate->add_option("--dim", dim, "embedding width (deterministic default 16)");
  evaluate->add_option("--endpoint", endpoint, "sidecar url; SEMDIST_EMBED_URL overrides");
  evaluate->add_option("--embeddings", embeddings_file, "embedding file for --backend file");
  evaluate->add_option("--cache-capacity", cache_capacity, "cached sentences")->capture_default_str();
  evaluate->add_option("--max-in-flight", max_in_flight, "concurrent http requests")->capture_default_str();
  evaluate->add_option("--timeout-ms", timeout_ms, "http timeout")->capture_default_str();
  evaluate->add_option("--alpha", alpha, "SemDist scale")->capture_default_str();
  evaluate->add_option("--variants", variants, "comma list of mean,cls,pairwise")->capture_default_str();
  evaluate->add_option("--embed-text", embed_text, "text sent to the embedder")
      ->check(CLI::IsMember({"raw", "normalized"}))
      ->capture_default_str();
  evaluate->add_option("-j,--parallelism", parallelism, "worker threads")->capture_default_str();
  evaluate->add_flag("--skip-errors", skip_errors, "record failures in errors.jsonl and continue");

  // correlate / distribution
  std::vector<std::string> metric_names;
  auto *correlate = app.add_subcommand("correlate", "Pearson correlation with labels");
  add_common(correlate, true);
  add_metrics_input(correlate);
  correlate->add_option("--metric", metric_names, "metric column(s) to include");

  auto *distribution = app.add_subcommand("distribution", "metric distribution per rating");
  add_common(distribution, true);
  add_metrics_input(distribution);
  distribution->add_option("--metric", metric_names, "metric column(s) to include");

  // rankgap
  std::size_t top_k = 5;
  std::string semdist_metric = "semdist_pairwise";
  auto *rankgap = app.add_subcommand("rankgap", "largest WER vs SemDist rank differences");
  add_common(rankgap, false);
  add_metrics_input(rankgap);
  rankgap->add_option("--top-k", top_k, "entries per list")->capture_default_str();
  rankgap->add_option("--semdist-metric", semdist_metric, "SemDist column")->capture_default_str();

  // fit-judgement
  std::vector<std::string> feature_sets;
  double holdout = 0.0;
  auto *fit = app.add_subcommand("fit-judgement", "linear models of user rating");
  add_common(fit, true);
  add_metrics_input(fit);
  fit->add_option("--semdist-metric", semdist_metric, "SemDist column")->capture_default_str();
  fit->add_option("--features", feature_sets, "extra feature set, e.g. wer,cer (repeatable)");
  fit->add_option("--holdout", holdout, "fraction held out for evaluation (0 = off)");

  // predict
  std::string model_path, model_name = "wer+semdist_pairwise", output, feature_values;
  auto *predict = app.add_subcommand("predict", "apply a fitted judgement model");
  add_common(predict, false);
  add_metrics_input(predict);
  predict->add_option("--model", model_path, "models.jsonl from fit-judgement")->required();
  predict->add_option("--model-name", model_name, "model to use")->capture_default_str();
  predict->add_option("--output", output, "predictions file (default: <out-dir>/predictions.jsonl)");
  predict->add_option("--values", feature_values, "predict one point, e.g. wer=12.5,semdist_pairwise=40");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    RunConfig config;
    config.corpus_path = corpus;
    config.output_dir = out_dir;
    config.provider.seed = seed;
    const std::filesystem::path metrics =
        metrics_path.empty() ? default_metrics_path(config) : std::filesystem::path(metrics_path);

    if (evaluate->parsed()) {
      config.provider.backend = backend == "file"   ? BackendKind::kFile
                                : backend == "http" ? BackendKind::kHttp
                                                    : BackendKind::kDeterministic;
      if (dim) config.provider.dimension = dim;
      if (!endpoint.empty()) config.provider.endpoint_url = endpoint;
      if (!embeddings_file.empty()) config.provider.embedding_file = embeddings_file;
      config.provider.cache_capacity = cache_capacity;
      config.provider.max_in_flight = max_in_flight;
      config.provider.timeout = std::chrono::milliseconds(timeout_ms);
      config.alpha = alpha;
      config.variants = parse_variants(variants);
      config.embed_text = embed_text == "normalized" ? EmbedText::kNormalized : EmbedText::kRaw;
      config.parallelism = parallelism;
      config.skip_errors = skip_errors;
      std::cout << cmd_evaluate(config);
    } else if (correlate->parsed()) {
      std::cout << cmd_correlate(config, metrics, metric_names);
    } else if (distribution->parsed()) {
      std::cout << cmd_distribution(config, metrics, metric_names);
    } else if (rankgap->parsed()) {
      config.top_k = top_k;
      if (top_k < 1) throw Error(ErrorKind::kConfig, "top-k must be >= 1");
      std::cout << cmd_rankgap(config, metrics, semdist_metric);
    } else if (fit->parsed()) {
      FitOptions options;
      options.semdist_metric = semdist_metric;
      for (const auto &set : feature_sets) options.extra_feature_sets.push_back(split_list(set));
      if (holdout > 0.0) options.holdout_fraction = holdout;
      options.seed = seed;
      std::cout << cmd_fit_judgement(config, metrics, options);
    } else if (predict->parsed()) {
      const auto models = read_models(model_path);
      const JudgementModel &model = select_model(models, model_name);
      if (!feature_values.empty()) {
        std::map<std::string, double> given;
        for (const auto &kv : split_list(feature_values)) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) throw Error(ErrorKind::kConfig, "expected name=value: " + kv);
          given[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        }
        std::vector<double> x;
        for (const auto &f : model.feature_names) {
          auto it = given.find(f);
          if (it == given.end()) throw Error(ErrorKind::kConfig, "missing value for " + f);
          x.push_back(it->second);
        }
        std::cout << fmt::format("{:.6f}\n", predict_judgement(model, x));
      } else {
        const std::filesystem::path out_path =
            output.empty() ? config.output_dir / "predictions.jsonl" : std::filesystem::path(output);
        const auto n = cmd_predict(model, metrics, out_path);
        std::cout << fmt::format("{} predictions written to {}\n", n, out_path.string());
      }
    }
  } catch (const Error &e) {
    std::cerr << "semdist-eval: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::invalid_argument &e) {
    std::cerr << "semdist-eval: bad number: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
