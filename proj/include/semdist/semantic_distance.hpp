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

#ifndef SEMDIST_SEMANTIC_DISTANCE_HPP_
#define SEMDIST_SEMANTIC_DISTANCE_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "semdist/embedding.hpp"
#include "semdist/error.hpp"

namespace semdist {

/// Readability multiplier applied to every reported distance.
inline constexpr double kDefaultScale = 1000.0;

struct PairwiseDetail {
  double precision = 0.0;  // mean over hyp tokens of best cosine to ref
  double recall = 0.0;     // mean over ref tokens of best cosine to hyp
  double f1 = 0.0;
};

struct PairwiseResult {
  double score = 0.0;
  PairwiseDetail detail;
};

struct SemDistScores {
  double mean_pooling = 0.0;
  double cls_token = 0.0;
  double pairwise_token = 0.0;
  double scale = kDefaultScale;
};

/// Cosine similarity accumulated in double and clamped to [-1, 1]. Computed
/// as dot / sqrt(|a|^2 |b|^2) so that a vector against itself is exactly 1.
template <typename T, typename U>
double cosine(std::span<const T> a, std::span<const U> b) {
  if (a.size() != b.size())
    throw Error(ErrorKind::kDimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = static_cast<double>(a[k]);
    const double y = static_cast<double>(b[k]);
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0)
    throw Error(ErrorKind::kZeroVector, "cosine of a zero-norm vector");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

namespace detail {

inline void require_same_dimension(const SentenceEmbeddings &ref,
                                   const SentenceEmbeddings &hyp) {
  if (ref.dimension != hyp.dimension)
    throw Error(ErrorKind::kDimensionMismatch,
                "reference dim " + std::to_string(ref.dimension) +
                    ", hypothesis dim " + std::to_string(hyp.dimension));
}

inline std::vector<double> mean_token_vector(const SentenceEmbeddings &e) {
  if (e.token_count() == 0)
    throw Error(ErrorKind::kZeroVector, "no token vectors to pool");
  std::vector<double> mean(e.dimension, 0.0);
  for (std::size_t i = 0; i < e.token_count(); ++i) {
    auto row = e.token_vector(i);
    for (std::size_t k = 0; k < e.dimension; ++k) mean[k] += row[k];
  }
  for (double &v : mean) v /= static_cast<double>(e.token_count());
  return mean;
}

}  // namespace detail

/// scale * (1 - cos(mean of ref token rows, mean of hyp token rows)).
inline double semdist_mean_pooling(const SentenceEmbeddings &ref,
                                   const SentenceEmbeddings &hyp,
                                   double scale = kDefaultScale) {
  detail::require_same_dimension(ref, hyp);
  const auto r = detail::mean_token_vector(ref);
  const auto h = detail::mean_token_vector(hyp);
  return scale * (1.0 - cosine(std::span<const double>(r), std::span<const double>(h)));
}

inline double semdist_cls(const SentenceEmbeddings &ref,
                          const SentenceEmbeddings &hyp,
                          double scale = kDefaultScale) {
  detail::require_same_dimension(ref, hyp);
  return scale * (1.0 - cosine(ref.cls_vector(), hyp.cls_vector()));
}

/// Greedy token matching: precision averages, over hypothesis tokens, the
/// best cosine against any reference token; recall does the converse. The
/// score is scale * (1 - F1). F1 is 0 when precision + recall <= 0 and is
/// floored at -1, so the score stays within [0, 2 * scale].
inline PairwiseResult semdist_pairwise_token(const SentenceEmbeddings &ref,
                                             const SentenceEmbeddings &hyp,
                                             double scale = kDefaultScale) {
  detail::require_same_dimension(ref, hyp);
  const std::size_t n_ref = ref.token_count();
  const std::size_t n_hyp = hyp.token_count();
  if (n_ref == 0 || n_hyp == 0)
    throw Error(ErrorKind::kZeroVector, "empty token list");

  constexpr double kNone = -std::numeric_limits<double>::infinity();
  std::vector<double> best_for_ref(n_ref, kNone);
  std::vector<double> best_for_hyp(n_hyp, kNone);
  for (std::size_t i = 0; i < n_ref; ++i) {
    for (std::size_t j = 0; j < n_hyp; ++j) {
      const double sim = cosine(ref.token_vector(i), hyp.token_vector(j));
      best_for_ref[i] = std::max(best_for_ref[i], sim);
      best_for_hyp[j] = std::max(best_for_hyp[j], sim);
    }
  }

  PairwiseResult result;
  double sum = 0.0;
  for (double v : best_for_hyp) sum += v;
  result.detail.precision = sum / static_cast<double>(n_hyp);
  sum = 0.0;
  for (double v : best_for_ref) sum += v;
  result.detail.recall = sum / static_cast<double>(n_ref);

  const double p = result.detail.precision;
  const double r = result.detail.recall;
  result.detail.f1 = (p + r > 0.0) ? std::max(2.0 * p * r / (p + r), -1.0) : 0.0;
  result.score = scale * (1.0 - result.detail.f1);
  return result;
}

inline SemDistScores semdist_all(const SentenceEmbeddings &ref,
                                 const SentenceEmbeddings &hyp,
                                 double scale = kDefaultScale) {
  SemDistScores s;
  s.scale = scale;
  s.mean_pooling = semdist_mean_pooling(ref, hyp, scale);
  s.cls_token = semdist_cls(ref, hyp, scale);
  s.pairwise_token = semdist_pairwise_token(ref, hyp, scale).score;
  return s;
}

}  // namespace semdist

#endif  // SEMDIST_SEMANTIC_DISTANCE_HPP_
