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

// Independent reference implementations used only by the tests. Nothing in
// here shares code with the library paths it checks.

#ifndef SEMDIST_TESTS_SUPPORT_ORACLES_HPP_
#define SEMDIST_TESTS_SUPPORT_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

namespace oracle {

/// Textbook exponential recursion on prefixes; no memoization.
template <typename T>
std::size_t recursive_edit_distance(const std::vector<T> &a, std::size_t n,
                                    const std::vector<T> &b, std::size_t m) {
  if (n == 0) return m;
  if (m == 0) return n;
  if (a[n - 1] == b[m - 1]) return recursive_edit_distance(a, n - 1, b, m - 1);
  return 1 + std::min({recursive_edit_distance(a, n - 1, b, m),
                       recursive_edit_distance(a, n, b, m - 1),
                       recursive_edit_distance(a, n - 1, b, m - 1)});
}

template <typename T>
std::size_t recursive_edit_distance(const std::vector<T> &a, const std::vector<T> &b) {
  return recursive_edit_distance(a, a.size(), b, b.size());
}

/// Every string over `alphabet` with length 0..max_len, shortest first.
inline std::vector<std::string> enumerate_strings(const std::string &alphabet,
                                                  std::size_t max_len) {
  std::vector<std::string> out{""};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i)
      for (char c : alphabet) out.push_back(out[i] + c);
    begin = end;
  }
  return out;
}

/// Edit distance as a graph metric: breadth-first search from `source`
/// over all strings up to max_len, where neighbours differ by a single
/// insertion, deletion or substitution. An optimal edit script never needs
/// to leave the length range of its endpoints, so distances between
/// strings within the universe are exact.
class EditGraph {
 public:
  EditGraph(const std::string &alphabet, std::size_t max_len)
      : nodes_(enumerate_strings(alphabet, max_len)), adjacency_(nodes_.size()) {
    std::unordered_map<std::string, std::uint32_t> id;
    for (std::size_t i = 0; i < nodes_.size(); ++i) id[nodes_[i]] = static_cast<std::uint32_t>(i);
    for (std::size_t u = 0; u < nodes_.size(); ++u) {
      const std::string &s = nodes_[u];
      auto link = [&](const std::string &t) { adjacency_[u].push_back(id.at(t)); };
      for (std::size_t i = 0; i < s.size(); ++i) {
        link(s.substr(0, i) + s.substr(i + 1));
        for (char c : alphabet)
          if (c != s[i]) {
            std::string t = s;
            t[i] = c;
            link(t);
          }
      }
      if (s.size() < max_len)
        for (std::size_t i = 0; i <= s.size(); ++i)
          for (char c : alphabet) link(s.substr(0, i) + c + s.substr(i));
    }
  }

  const std::vector<std::string> &nodes() const { return nodes_; }

  std::vector<std::uint8_t> distances_from(std::size_t source) const {
    std::vector<std::uint8_t> dist(nodes_.size(), 0xff);
    std::vector<std::uint32_t> frontier{static_cast<std::uint32_t>(source)};
    dist[source] = 0;
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const std::uint32_t u = frontier[head];
      for (std::uint32_t v : adjacency_[u])
        if (dist[v] == 0xff) {
          dist[v] = static_cast<std::uint8_t>(dist[u] + 1);
          frontier.push_back(v);
        }
    }
    return dist;
  }

 private:
  std::vector<std::string> nodes_;
  std::vector<std::vector<std::uint32_t>> adjacency_;
};

using Rows = std::vector<std::vector<double>>;

inline double cosine(const std::vector<double> &a, const std::vector<double> &b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += static_cast<long double>(a[k]) * b[k];
    na += static_cast<long double>(a[k]) * a[k];
    nb += static_cast<long double>(b[k]) * b[k];
  }
  long double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return static_cast<double>(std::clamp<long double>(c, -1, 1));
}

struct PairwiseOracle {
  double precision, recall, f1;
};

/// Full similarity matrix first, then row and column maxima.
inline PairwiseOracle pairwise(const Rows &ref, const Rows &hyp) {
  std::vector<std::vector<double>> sim(ref.size(), std::vector<double>(hyp.size()));
  for (std::size_t i = 0; i < ref.size(); ++i)
    for (std::size_t j = 0; j < hyp.size(); ++j) sim[i][j] = cosine(ref[i], hyp[j]);
  double p = 0, r = 0;
  for (std::size_t j = 0; j < hyp.size(); ++j) {
    double best = sim[0][j];
    for (std::size_t i = 1; i < ref.size(); ++i) best = std::max(best, sim[i][j]);
    p += best;
  }
  for (std::size_t i = 0; i < ref.size(); ++i)
    r += *std::max_element(sim[i].begin(), sim[i].end());
  p /= static_cast<double>(hyp.size());
  r /= static_cast<double>(ref.size());
  double f1 = (p + r > 0) ? 2 * p * r / (p + r) : 0.0;
  if (f1 < -1) f1 = -1;
  return {p, r, f1};
}

/// Rank by counting strictly smaller (value, id) keys; O(n^2).
template <typename Item, typename Key>
std::vector<std::size_t> counting_ranks(const std::vector<Item> &items, Key key) {
  std::vector<std::size_t> ranks(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::size_t smaller = 0;
    for (std::size_t j = 0; j < items.size(); ++j) {
      if (j == i) continue;
      const double vi = key(items[i]), vj = key(items[j]);
      if (vj < vi || (vj == vi && (items[j].id < items[i].id ||
                                   (items[j].id == items[i].id && j < i))))
        ++smaller;
    }
    ranks[i] = smaller + 1;
  }
  return ranks;
}

}  // namespace oracle

#endif  // SEMDIST_TESTS_SUPPORT_ORACLES_HPP_
