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

#ifndef SEMDIST_EDIT_METRICS_HPP_
#define SEMDIST_EDIT_METRICS_HPP_

#include <cstddef>
#include <iterator>
#include <ranges>
#include <string>
#include <vector>

#include "semdist/error.hpp"
#include "semdist/text_normalization.hpp"

namespace semdist {

struct EditStats {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t reference_length = 0;
  /// Percentage relative to the reference length; can exceed 100.
  double error_rate = 0.0;

  std::size_t errors() const noexcept {
    return substitutions + deletions + insertions;
  }
};

/// Minimum-edit alignment with unit costs. Only the operation counts are
/// returned; on equal cost a substitution is preferred over a deletion,
/// and a deletion over an insertion.
template <std::ranges::random_access_range Ref,
          std::ranges::random_access_range Hyp>
EditStats align_counts(const Ref &reference, const Hyp &hypothesis) {
  struct Cell {
    std::size_t cost, sub, del, ins;
  };
  const std::size_t n = std::ranges::size(reference);
  const std::size_t m = std::ranges::size(hypothesis);
  auto ref_it = std::ranges::begin(reference);
  auto hyp_it = std::ranges::begin(hypothesis);

  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, 0, 0, j};

  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {i, 0, i, 0};
    for (std::size_t j = 1; j <= m; ++j) {
      const bool match = ref_it[i - 1] == hyp_it[j - 1];
      Cell diag = prev[j - 1];
      if (!match) {
        ++diag.cost;
        ++diag.sub;
      }
      Cell del = prev[j];
      ++del.cost;
      ++del.del;
      Cell ins = cur[j - 1];
      ++ins.cost;
      ++ins.ins;

      Cell best = diag;
      if (del.cost < best.cost) best = del;
      if (ins.cost < best.cost) best = ins;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }

  const Cell &last = prev[m];
  EditStats stats;
  stats.substitutions = last.sub;
  stats.deletions = last.del;
  stats.insertions = last.ins;
  stats.reference_length = n;
  if (n > 0)
    stats.error_rate = 100.0 * static_cast<double>(last.cost) /
                       static_cast<double>(n);
  return stats;
}

template <std::ranges::random_access_range Ref,
          std::ranges::random_access_range Hyp>
std::size_t edit_distance(const Ref &a, const Hyp &b) {
  return align_counts(a, b).errors();
}

/// Word error rate over normalized tokens.
inline EditStats wer(const NormalizedText &reference,
                     const NormalizedText &hypothesis) {
  if (reference.tokens.empty())
    throw Error(ErrorKind::kEmptyReference,
                "reference has no tokens: \"" + reference.original + "\"");
  return align_counts(reference.tokens, hypothesis.tokens);
}

/// Character error rate over the code points of the normalized text,
/// inter-word spaces included.
inline EditStats cer(const NormalizedText &reference,
                     const NormalizedText &hypothesis) {
  if (reference.normalized.empty())
    throw Error(ErrorKind::kEmptyReference,
                "reference is empty: \"" + reference.original + "\"");
  return align_counts(code_points(reference.normalized),
                      code_points(hypothesis.normalized));
}

}  // namespace semdist

#endif  // SEMDIST_EDIT_METRICS_HPP_
