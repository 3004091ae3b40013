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

#ifndef SEMDIST_ANALYSIS_HPP_
#define SEMDIST_ANALYSIS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semdist/corpus.hpp"
#include "semdist/error.hpp"
#include "semdist/hashing.hpp"

namespace semdist {

// ---------------------------------------------------------------------------
// Correlation

/// Pearson product-moment correlation, two-pass with double accumulation.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(ErrorKind::kLengthMismatch,
                std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorKind::kInsufficientData, "pearson needs >= 2 samples");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw Error(ErrorKind::kZeroVariance, "first series is constant");
  if (syy == 0.0) throw Error(ErrorKind::kZeroVariance, "second series is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

enum class Task { kUserRating, kUserChoice, kIntentAcc, kEM, kEMTree };

inline constexpr Task kAllTasks[] = {Task::kUserChoice, Task::kUserRating,
                                     Task::kIntentAcc, Task::kEM, Task::kEMTree};

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::kUserRating: return "UserRating";
    case Task::kUserChoice: return "UserChoice";
    case Task::kIntentAcc: return "IntentAcc";
    case Task::kEM: return "SemanticParsing(EM)";
    case Task::kEMTree: return "SemanticParsing(EMTree)";
  }
  return "?";
}

struct CorrelationRow {
  Task task;
  std::string metric;
  double pearson_r = 0.0;
  std::size_t sample_count = 0;

  friend bool operator==(const CorrelationRow &, const CorrelationRow &) = default;
};

namespace detail {

class RowIndex {
 public:
  explicit RowIndex(std::span<const MetricRow> rows) {
    for (const auto &m : rows) index_[{m.id, m.slot == HypSlot::kB}] = &m;
  }

  const MetricRow *find(const std::string &id, HypSlot slot) const {
    auto it = index_.find({id, slot == HypSlot::kB});
    return it == index_.end() ? nullptr : it->second;
  }

 private:
  std::map<std::pair<std::string, bool>, const MetricRow *> index_;
};

inline std::optional<bool> nlu_flag(const EvalRecord &r, Task t) {
  if (!r.nlu) return std::nullopt;
  switch (t) {
    case Task::kIntentAcc: return r.nlu->intent_correct;
    case Task::kEM: return r.nlu->exact_match;
    case Task::kEMTree: return r.nlu->exact_match_tree;
    default: return std::nullopt;
  }
}

inline bool has_label(const EvalRecord &r, Task t) {
  switch (t) {
    case Task::kUserRating: return r.rating.has_value();
    case Task::kUserChoice: return r.choice.has_value();
    default: return nlu_flag(r, t).has_value();
  }
}

/// Metric names present in at least one row, in canonical column order.
inline std::vector<std::string> present_metrics(std::span<const MetricRow> rows) {
  std::vector<std::string> names;
  for (auto name : kMetricNames)
    for (const auto &m : rows)
      if (metric_value(m, name)) {
        names.emplace_back(name);
        break;
      }
  return names;
}

}  // namespace detail

/// (metric, label) sample pairs for one task. Records lacking the label or
/// the metric value are skipped.
inline std::pair<std::vector<double>, std::vector<double>> task_samples(
    std::span<const EvalRecord> records, std::span<const MetricRow> rows,
    Task task, std::string_view metric) {
  const detail::RowIndex index(rows);
  std::vector<double> xs, ys;
  for (const auto &r : records) {
    const MetricRow *a = index.find(r.id, HypSlot::kA);
    if (!a) continue;
    const auto ma = metric_value(*a, metric);
    if (!ma) continue;
    switch (task) {
      case Task::kUserRating:
        if (!r.rating) continue;
        xs.push_back(*ma);
        ys.push_back(to_int(*r.rating));
        break;
      case Task::kUserChoice: {
        if (!r.choice) continue;
        const MetricRow *b = index.find(r.id, HypSlot::kB);
        if (!b) continue;
        const auto mb = metric_value(*b, metric);
        if (!mb) continue;
        xs.push_back(*ma - *mb);
        ys.push_back(to_int(*r.choice));
        break;
      }
      default: {
        const auto flag = detail::nlu_flag(r, task);
        if (!flag) continue;
        xs.push_back(*ma);
        ys.push_back(*flag ? 0.0 : 1.0);  // 1 - accuracy
        break;
      }
    }
  }
  return {std::move(xs), std::move(ys)};
}

/// One row per (task, metric). Tasks default to those with at least one
/// labelled record; metrics default to every column present in `rows`.
inline std::vector<CorrelationRow> correlation_table(
    std::span<const EvalRecord> records, std::span<const MetricRow> rows,
    std::vector<std::string> metrics = {},
    std::optional<std::vector<Task>> tasks = std::nullopt) {
  if (metrics.empty()) metrics = detail::present_metrics(rows);
  if (!tasks) {
    tasks.emplace();
    for (Task t : kAllTasks)
      if (std::any_of(records.begin(), records.end(),
                      [t](const EvalRecord &r) { return detail::has_label(r, t); }))
        tasks->push_back(t);
  }
  std::vector<CorrelationRow> table;
  for (Task t : *tasks) {
    for (const auto &metric : metrics) {
      auto [xs, ys] = task_samples(records, rows, t, metric);
      if (xs.size() < 2)
        throw Error(ErrorKind::kInsufficientData,
                    std::string(to_string(t)) + "/" + metric + ": " +
                        std::to_string(xs.size()) + " usable samples");
      double r = 0.0;
      try {
        r = pearson(xs, ys);
      } catch (const Error &e) {
        throw Error(e.kind(), std::string(to_string(t)) + "/" + metric + ": " + e.what());
      }
      table.push_back({t, metric, r, xs.size()});
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Rank gap

struct RankInput {
  std::string id;
  double wer = 0.0;
  double semdist = 0.0;
  std::string reference;
  std::string hypothesis;
};

struct RankGapEntry {
  std::string id;
  double wer = 0.0;
  double semdist = 0.0;
  std::size_t rank_wer = 0;
  std::size_t rank_semdist = 0;
  long long gap = 0;  // rank_wer - rank_semdist
  std::string reference;
  std::string hypothesis;
};

struct RankGapReport {
  std::vector<RankGapEntry> wer_ranks_higher;      // largest positive gaps
  std::vector<RankGapEntry> semdist_ranks_higher;  // largest negative gaps
};

/// 1-based ranks in ascending order of value; ties by ascending id, then
/// input position.
inline std::vector<std::size_t> ranks_by(std::span<const RankInput> items,
                                         double RankInput::*field) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = items[a].*field, vb = items[b].*field;
    if (va != vb) return va < vb;
    return items[a].id < items[b].id;
  });
  std::vector<std::size_t> rank(items.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos + 1;
  return rank;
}

/// Gap entries for every item, in input order.
inline std::vector<RankGapEntry> rank_gaps(std::span<const RankInput> items) {
  const auto rw = ranks_by(items, &RankInput::wer);
  const auto rs = ranks_by(items, &RankInput::semdist);
  std::vector<RankGapEntry> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.push_back({items[i].id, items[i].wer, items[i].semdist, rw[i], rs[i],
                   static_cast<long long>(rw[i]) - static_cast<long long>(rs[i]),
                   items[i].reference, items[i].hypothesis});
  }
  return out;
}

/// Top-k items where WER ranks the utterance worse than SemDist does, and
/// top-k where SemDist ranks it worse. Each list is ordered by descending
/// gap magnitude, ties by id.
inline RankGapReport rank_gap_report(std::span<const RankInput> items, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::kConfig, "top-k must be >= 1");
  if (items.size() < k)
    throw Error(ErrorKind::kInsufficientData,
                std::to_string(items.size()) + " items for top-" + std::to_string(k));
  auto all = rank_gaps(items);
  RankGapReport report;
  auto take = [&](auto better) {
    std::vector<RankGapEntry> sorted = all;
    std::stable_sort(sorted.begin(), sorted.end(), better);
    sorted.resize(k);
    return sorted;
  };
  report.wer_ranks_higher = take([](const RankGapEntry &a, const RankGapEntry &b) {
    return a.gap != b.gap ? a.gap > b.gap : a.id < b.id;
  });
  report.semdist_ranks_higher = take([](const RankGapEntry &a, const RankGapEntry &b) {
    return a.gap != b.gap ? a.gap < b.gap : a.id < b.id;
  });
  return report;
}

// ---------------------------------------------------------------------------
// Per-rating distribution

struct BoxStats {
  std::size_t count = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
};

/// Quantile of sorted data by linear interpolation between order
/// statistics at position (n - 1) * p.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

inline BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::kInsufficientData, "no values");
  std::sort(values.begin(), values.end());
  BoxStats s;
  s.count = values.size();
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  return s;
}

struct DistributionCell {
  RatingLabel level;
  std::string metric;
  BoxStats stats;
};

struct DistributionSummary {
  std::vector<DistributionCell> cells;     // level-major, metric-minor
  std::vector<RatingLabel> empty_levels;   // levels without any record
};

/// Metric distribution of hypothesis A for each rating level.
inline DistributionSummary distribution_by_rating(
    std::span<const EvalRecord> records, std::span<const MetricRow> rows,
    std::vector<std::string> metrics = {}) {
  if (metrics.empty()) metrics = detail::present_metrics(rows);
  const detail::RowIndex index(rows);
  DistributionSummary summary;
  for (RatingLabel level : kAllRatings) {
    bool any = false;
    for (const auto &metric : metrics) {
      std::vector<double> values;
      for (const auto &r : records) {
        if (r.rating != level) continue;
        const MetricRow *a = index.find(r.id, HypSlot::kA);
        if (!a) continue;
        if (auto v = metric_value(*a, metric)) values.push_back(*v);
      }
      if (values.empty()) continue;
      any = true;
      summary.cells.push_back({level, metric, box_stats(std::move(values))});
    }
    if (!any) summary.empty_levels.push_back(level);
  }
  return summary;
}

// ---------------------------------------------------------------------------
// User-judgement regression

/// Dense row-major matrix of regression inputs.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double &at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data).subspan(r * cols, cols);
  }
};

struct FitMetrics {
  double r2 = 0.0;
  double mae = 0.0;
  double mse = 0.0;
};

struct JudgementModel {
  std::vector<std::string> feature_names;
  std::vector<double> coefficients;
  double intercept = 0.0;
  FitMetrics fit;
  std::optional<FitMetrics> heldout;
  std::size_t sample_count = 0;
};

inline double predict_judgement(const JudgementModel &model,
                                std::span<const double> features) {
  if (features.size() != model.coefficients.size())
    throw Error(ErrorKind::kLengthMismatch,
                "model has " + std::to_string(model.coefficients.size()) +
                    " features, got " + std::to_string(features.size()));
  double y = model.intercept;
  for (std::size_t j = 0; j < features.size(); ++j) y += model.coefficients[j] * features[j];
  return y;
}

/// R^2, MAE and MSE of `model` on the given rows.
inline FitMetrics evaluate_model(const JudgementModel &model, const FeatureMatrix &x,
                                 std::span<const double> y) {
  if (x.rows != y.size())
    throw Error(ErrorKind::kLengthMismatch, "feature rows != targets");
  if (x.rows == 0) throw Error(ErrorKind::kInsufficientData, "no rows");
  const double n = static_cast<double>(x.rows);
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss_res = 0.0, ss_tot = 0.0, abs_sum = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double residual = y[i] - predict_judgement(model, x.row(i));
    ss_res += residual * residual;
    abs_sum += std::abs(residual);
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  if (ss_tot == 0.0) throw Error(ErrorKind::kZeroVariance, "targets are constant");
  return {1.0 - ss_res / ss_tot, abs_sum / n, ss_res / n};
}

/// Ordinary least squares with intercept, solved through the normal
/// equations on mean-centred columns (Cholesky). Fit metrics are in-sample.
inline JudgementModel fit_judgement_model(const FeatureMatrix &x,
                                          std::span<const double> y,
                                          std::vector<std::string> feature_names = {}) {
  const std::size_t n = x.rows, f = x.cols;
  if (y.size() != n) throw Error(ErrorKind::kLengthMismatch, "feature rows != targets");
  if (f == 0) throw Error(ErrorKind::kInsufficientData, "no features");
  if (n <= f)
    throw Error(ErrorKind::kInsufficientData,
                std::to_string(n) + " rows for " + std::to_string(f) + " features");
  if (feature_names.empty())
    for (std::size_t j = 0; j < f; ++j) feature_names.push_back("x" + std::to_string(j));
  if (feature_names.size() != f)
    throw Error(ErrorKind::kLengthMismatch, "feature name count != columns");

  std::vector<double> mean_x(f, 0.0);
  double mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j) mean_x[j] += x.at(i, j);
    mean_y += y[i];
  }
  for (double &m : mean_x) m /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  double ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  if (ss_tot == 0.0) throw Error(ErrorKind::kZeroVariance, "targets are constant");

  std::vector<double> gram(f * f, 0.0), rhs(f, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double dy = y[i] - mean_y;
    for (std::size_t a = 0; a < f; ++a) {
      const double da = x.at(i, a) - mean_x[a];
      rhs[a] += da * dy;
      for (std::size_t b = 0; b <= a; ++b) gram[a * f + b] += da * (x.at(i, b) - mean_x[b]);
    }
  }

  // Cholesky G = L L^T in the lower triangle.
  double max_diag = 0.0;
  for (std::size_t a = 0; a < f; ++a) max_diag = std::max(max_diag, gram[a * f + a]);
  const double tol = 1e-12 * std::max(max_diag, 1e-300) * static_cast<double>(f);
  for (std::size_t a = 0; a < f; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double s = gram[a * f + b];
      for (std::size_t k = 0; k < b; ++k) s -= gram[a * f + k] * gram[b * f + k];
      if (a == b) {
        if (s <= tol)
          throw Error(ErrorKind::kRankDeficient,
                      "feature \"" + feature_names[a] +
                          "\" is constant or collinear with earlier features");
        gram[a * f + a] = std::sqrt(s);
      } else {
        gram[a * f + b] = s / gram[b * f + b];
      }
    }
  }
  std::vector<double> z(f), beta(f);
  for (std::size_t a = 0; a < f; ++a) {
    double s = rhs[a];
    for (std::size_t k = 0; k < a; ++k) s -= gram[a * f + k] * z[k];
    z[a] = s / gram[a * f + a];
  }
  for (std::size_t a = f; a-- > 0;) {
    double s = z[a];
    for (std::size_t k = a + 1; k < f; ++k) s -= gram[k * f + a] * beta[k];
    beta[a] = s / gram[a * f + a];
  }

  JudgementModel model;
  model.feature_names = std::move(feature_names);
  model.coefficients = beta;
  model.intercept = mean_y;
  for (std::size_t j = 0; j < f; ++j) model.intercept -= beta[j] * mean_x[j];
  model.sample_count = n;
  model.fit = evaluate_model(model, x, y);
  return model;
}

/// Deterministic train/test partition of 0..n-1 (Fisher-Yates over
/// splitmix64). Both index lists come back sorted.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(
    std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(ErrorKind::kConfig, "hold-out fraction must be in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.next_below(i)]);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(test)};
}

}  // namespace semdist

#endif  // SEMDIST_ANALYSIS_HPP_
