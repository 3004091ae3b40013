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

#ifndef SEMDIST_REPORT_HPP_
#define SEMDIST_REPORT_HPP_

#include <algorithm>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "semdist/analysis.hpp"
#include "semdist/corpus.hpp"

namespace semdist {

// Machine-readable forms. Each report file holds one JSON object per line.

inline nlohmann::ordered_json to_json(const CorrelationRow &row) {
  nlohmann::ordered_json j;
  j["task"] = to_string(row.task);
  j["metric"] = row.metric;
  j["pearson_r"] = row.pearson_r;
  j["n"] = row.sample_count;
  return j;
}

inline nlohmann::ordered_json to_json(const RankGapEntry &e, std::string_view list,
                                      std::size_t position) {
  nlohmann::ordered_json j;
  j["list"] = list;
  j["position"] = position;
  j["id"] = e.id;
  j["gap"] = e.gap;
  j["rank_wer"] = e.rank_wer;
  j["rank_semdist"] = e.rank_semdist;
  j["wer"] = e.wer;
  j["semdist"] = e.semdist;
  j["reference"] = e.reference;
  j["hypothesis"] = e.hypothesis;
  return j;
}

inline nlohmann::ordered_json to_json(const DistributionCell &c) {
  nlohmann::ordered_json j;
  j["rating"] = to_int(c.level);
  j["label"] = to_string(c.level);
  j["metric"] = c.metric;
  j["count"] = c.stats.count;
  j["min"] = c.stats.min;
  j["q1"] = c.stats.q1;
  j["median"] = c.stats.median;
  j["q3"] = c.stats.q3;
  j["max"] = c.stats.max;
  j["mean"] = c.stats.mean;
  return j;
}

inline std::string model_name(const JudgementModel &m) {
  std::string name;
  for (const auto &f : m.feature_names) name += (name.empty() ? "" : "+") + f;
  return name;
}

inline nlohmann::ordered_json to_json(const FitMetrics &f) {
  nlohmann::ordered_json j;
  j["r2"] = f.r2;
  j["mae"] = f.mae;
  j["mse"] = f.mse;
  return j;
}

inline nlohmann::ordered_json to_json(const JudgementModel &m) {
  nlohmann::ordered_json j;
  j["name"] = model_name(m);
  j["features"] = m.feature_names;
  j["coefficients"] = m.coefficients;
  j["intercept"] = m.intercept;
  j["n"] = m.sample_count;
  j["fit"] = to_json(m.fit);
  if (m.heldout) j["heldout"] = to_json(*m.heldout);
  return j;
}

template <typename Json>
JudgementModel parse_model(const Json &j) {
  auto metrics = [](const Json &f) {
    return FitMetrics{f.at("r2").template get<double>(), f.at("mae").template get<double>(),
                      f.at("mse").template get<double>()};
  };
  JudgementModel m;
  m.feature_names = j.at("features").template get<std::vector<std::string>>();
  m.coefficients = j.at("coefficients").template get<std::vector<double>>();
  m.intercept = j.at("intercept").template get<double>();
  m.sample_count = j.at("n").template get<std::size_t>();
  m.fit = metrics(j.at("fit"));
  if (j.contains("heldout")) m.heldout = metrics(j.at("heldout"));
  if (m.feature_names.size() != m.coefficients.size())
    throw Error(ErrorKind::kParse, "model feature/coefficient count mismatch");
  return m;
}

inline std::vector<JudgementModel> read_models(const std::filesystem::path &path) {
  std::vector<JudgementModel> models;
  detail::for_each_json_line(path, [&](const nlohmann::json &j, std::size_t) {
    models.push_back(parse_model(j));
  });
  return models;
}

// Human-readable tables.

inline std::string render_correlation_grid(std::span<const CorrelationRow> rows) {
  std::vector<std::string> metrics;
  for (const auto &r : rows)
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end())
      metrics.push_back(r.metric);

  std::string out = fmt::format("{:<26}{:>8}", "Task", "# utter");
  for (const auto &m : metrics) out += fmt::format("{:>18}", m);
  out += '\n';
  for (Task t : kAllTasks) {
    std::map<std::string, const CorrelationRow *> cells;
    std::size_t n = 0;
    for (const auto &r : rows)
      if (r.task == t) {
        cells[r.metric] = &r;
        n = std::max(n, r.sample_count);
      }
    if (cells.empty()) continue;
    out += fmt::format("{:<26}{:>8}", to_string(t), n);
    for (const auto &m : metrics) {
      auto it = cells.find(m);
      out += it == cells.end() ? fmt::format("{:>18}", "-")
                               : fmt::format("{:>18.4f}", it->second->pearson_r);
    }
    out += '\n';
  }
  return out;
}

inline std::string render_rank_gap(const RankGapReport &report) {
  auto block = [](std::string_view title, std::span<const RankGapEntry> entries) {
    std::string out = fmt::format("{}\n{:>8} {:>8} {:>10}  {}\n", title, "Gap", "WER",
                                  "SemDist", "Ref/Hyp");
    for (const auto &e : entries) {
      out += fmt::format("{:>8} {:>8.2f} {:>10.2f}  Ref: {}\n", e.gap, e.wer, e.semdist,
                         e.reference);
      out += fmt::format("{:>8} {:>8} {:>10}  Hyp: {}\n", "", "", "", e.hypothesis);
    }
    return out;
  };
  return block("top gaps (rank_wer - rank_semdist)", report.wer_ranks_higher) + "\n" +
         block("top gaps (rank_semdist - rank_wer)", report.semdist_ranks_higher);
}

inline std::string render_distribution(const DistributionSummary &summary) {
  std::string out = fmt::format("{:<12}{:<18}{:>7}{:>10}{:>10}{:>10}{:>10}{:>10}{:>10}\n",
                                "rating", "metric", "count", "min", "q1", "median",
                                "q3", "max", "mean");
  for (const auto &c : summary.cells) {
    out += fmt::format(
        "{:<12}{:<18}{:>7}{:>10.2f}{:>10.2f}{:>10.2f}{:>10.2f}{:>10.2f}{:>10.2f}\n",
        fmt::format("{} {}", to_int(c.level), to_string(c.level)), c.metric, c.stats.count,
        c.stats.min, c.stats.q1, c.stats.median, c.stats.q3, c.stats.max, c.stats.mean);
  }
  for (RatingLabel level : summary.empty_levels)
    out += fmt::format("{:<12}(no records)\n", fmt::format("{} {}", to_int(level), to_string(level)));
  return out;
}

inline std::string render_model_comparison(std::span<const JudgementModel> models) {
  std::string out = fmt::format("{:<8}", "");
  for (const auto &m : models) out += fmt::format("{:>28}", model_name(m));
  out += '\n';
  auto line = [&](std::string_view label, auto field) {
    std::string s = fmt::format("{:<8}", label);
    for (const auto &m : models) s += fmt::format("{:>28.4f}", field(m.fit));
    return s + '\n';
  };
  out += line("R^2", [](const FitMetrics &f) { return f.r2; });
  out += line("MAE", [](const FitMetrics &f) { return f.mae; });
  out += line("MSE", [](const FitMetrics &f) { return f.mse; });
  if (std::any_of(models.begin(), models.end(), [](const auto &m) { return m.heldout.has_value(); })) {
    auto held = [&](std::string_view label, auto field) {
      std::string s = fmt::format("{:<8}", label);
      for (const auto &m : models)
        s += m.heldout ? fmt::format("{:>28.4f}", field(*m.heldout)) : fmt::format("{:>28}", "-");
      return s + '\n';
    };
    out += "held-out\n";
    out += held("R^2", [](const FitMetrics &f) { return f.r2; });
    out += held("MAE", [](const FitMetrics &f) { return f.mae; });
    out += held("MSE", [](const FitMetrics &f) { return f.mse; });
  }
  return out;
}

}  // namespace semdist

#endif  // SEMDIST_REPORT_HPP_
