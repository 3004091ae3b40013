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

#ifndef SEMDIST_CORPUS_HPP_
#define SEMDIST_CORPUS_HPP_

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "semdist/edit_metrics.hpp"
#include "semdist/error.hpp"
#include "semdist/semantic_distance.hpp"

namespace semdist {

/// Human rating of a single hypothesis.
enum class RatingLabel : int {
  kExactMatch = 0,
  kUsefulHyp = 1,
  kWrongHyp = 2,
  kNonsenseHyp = 3,
};

/// Side-by-side preference between hypothesis A and B.
enum class ChoiceLabel : int {
  kHypA = -1,
  kEqual = 0,
  kHypB = 1,
};

constexpr int to_int(RatingLabel r) noexcept { return static_cast<int>(r); }
constexpr int to_int(ChoiceLabel c) noexcept { return static_cast<int>(c); }

inline constexpr RatingLabel kAllRatings[] = {
    RatingLabel::kExactMatch, RatingLabel::kUsefulHyp, RatingLabel::kWrongHyp,
    RatingLabel::kNonsenseHyp};

inline std::string_view to_string(RatingLabel r) {
  switch (r) {
    case RatingLabel::kExactMatch: return "exact_match";
    case RatingLabel::kUsefulHyp: return "useful";
    case RatingLabel::kWrongHyp: return "wrong";
    case RatingLabel::kNonsenseHyp: return "nonsense";
  }
  return "?";
}

inline std::string_view to_string(ChoiceLabel c) {
  switch (c) {
    case ChoiceLabel::kHypA: return "a";
    case ChoiceLabel::kEqual: return "equal";
    case ChoiceLabel::kHypB: return "b";
  }
  return "?";
}

/// Downstream NLU correctness for hypothesis A, ingested from an external
/// system.
struct NluOutcome {
  std::optional<bool> intent_correct;
  std::optional<bool> exact_match;
  std::optional<bool> exact_match_tree;

  bool any() const noexcept {
    return intent_correct || exact_match || exact_match_tree;
  }
  friend bool operator==(const NluOutcome &, const NluOutcome &) = default;
};

struct EvalRecord {
  std::string id;
  std::string reference;
  std::string hypothesis_a;
  std::optional<std::string> hypothesis_b;
  std::optional<RatingLabel> rating;  // applies to hypothesis A
  std::optional<ChoiceLabel> choice;  // requires hypothesis B
  std::optional<NluOutcome> nlu;

  friend bool operator==(const EvalRecord &, const EvalRecord &) = default;
};

namespace detail {

inline std::string canonical_label(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return (c == ' ' || c == '-') ? '_' : static_cast<char>(std::tolower(c));
  });
  return s;
}

template <typename Json>
RatingLabel parse_rating(const Json &v) {
  if (v.is_number_integer()) {
    const auto n = v.template get<long long>();
    if (n < 0 || n > 3)
      throw Error(ErrorKind::kConstraintViolation,
                  "rating " + std::to_string(n) + " outside 0..3");
    return static_cast<RatingLabel>(n);
  }
  if (v.is_string()) {
    const auto s = canonical_label(v.template get<std::string>());
    if (s == "exact_match" || s == "exact") return RatingLabel::kExactMatch;
    if (s == "useful" || s == "useful_hyp") return RatingLabel::kUsefulHyp;
    if (s == "wrong" || s == "wrong_hyp") return RatingLabel::kWrongHyp;
    if (s == "nonsense" || s == "nonsense_hyp") return RatingLabel::kNonsenseHyp;
    throw Error(ErrorKind::kConstraintViolation, "unknown rating \"" + s + "\"");
  }
  throw Error(ErrorKind::kParse, "rating must be an integer or string");
}

template <typename Json>
ChoiceLabel parse_choice(const Json &v) {
  if (v.is_number_integer()) {
    const auto n = v.template get<long long>();
    if (n < -1 || n > 1)
      throw Error(ErrorKind::kConstraintViolation,
                  "choice " + std::to_string(n) + " outside -1..1");
    return static_cast<ChoiceLabel>(n);
  }
  if (v.is_string()) {
    const auto s = canonical_label(v.template get<std::string>());
    if (s == "a" || s == "hyp_a") return ChoiceLabel::kHypA;
    if (s == "equal") return ChoiceLabel::kEqual;
    if (s == "b" || s == "hyp_b") return ChoiceLabel::kHypB;
    throw Error(ErrorKind::kConstraintViolation, "unknown choice \"" + s + "\"");
  }
  throw Error(ErrorKind::kParse, "choice must be an integer or string");
}

template <typename Json>
std::optional<bool> parse_flag(const Json &record, const char *key) {
  if (!record.contains(key) || record[key].is_null()) return std::nullopt;
  const auto &v = record[key];
  if (v.is_boolean()) return v.template get<bool>();
  if (v.is_number_integer()) {
    const auto n = v.template get<long long>();
    if (n == 0 || n == 1) return n == 1;
  }
  throw Error(ErrorKind::kParse, std::string("\"") + key + "\" must be a boolean");
}

template <typename Json>
std::optional<std::string> optional_string(const Json &record, const char *key) {
  if (!record.contains(key) || record[key].is_null()) return std::nullopt;
  if (!record[key].is_string())
    throw Error(ErrorKind::kParse, std::string("\"") + key + "\" must be a string");
  return record[key].template get<std::string>();
}

template <typename Json>
std::string required_string(const Json &record, const char *key) {
  auto v = optional_string(record, key);
  if (!v) throw Error(ErrorKind::kParse, std::string("missing \"") + key + "\"");
  return *v;
}

inline std::ofstream open_for_write(const std::filesystem::path &path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

inline void finish_write(std::ofstream &out, const std::filesystem::path &path) {
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

/// Calls fn(json, line_no) for every non-blank line; JSON syntax errors are
/// reported as Parse with the line number.
template <typename Fn>
void for_each_json_line(const std::filesystem::path &path, Fn &&fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &ex) {
      throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) +
                                         ": " + ex.what());
    }
    try {
      fn(value, line_no);
    } catch (const Error &ex) {
      throw Error(ex.kind(), path.string() + ":" + std::to_string(line_no) + ": " +
                                 ex.what());
    } catch (const nlohmann::json::exception &ex) {
      throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) +
                                         ": " + ex.what());
    }
  }
}

}  // namespace detail

/// Validates a single parsed corpus line.
template <typename Json>
EvalRecord parse_record(const Json &j) {
  if (!j.is_object()) throw Error(ErrorKind::kParse, "record is not an object");
  EvalRecord r;
  r.id = detail::required_string(j, "id");
  r.reference = detail::required_string(j, "reference");
  r.hypothesis_a = detail::required_string(j, "hyp_a");
  r.hypothesis_b = detail::optional_string(j, "hyp_b");
  if (j.contains("rating") && !j["rating"].is_null())
    r.rating = detail::parse_rating(j["rating"]);
  if (j.contains("choice") && !j["choice"].is_null())
    r.choice = detail::parse_choice(j["choice"]);
  NluOutcome nlu;
  nlu.intent_correct = detail::parse_flag(j, "intent_correct");
  nlu.exact_match = detail::parse_flag(j, "em");
  nlu.exact_match_tree = detail::parse_flag(j, "em_tree");
  if (nlu.any()) r.nlu = nlu;

  if (r.id.empty()) throw Error(ErrorKind::kConstraintViolation, "empty id");
  if (r.reference.empty())
    throw Error(ErrorKind::kConstraintViolation, "record " + r.id + ": empty reference");
  if (r.choice && !r.hypothesis_b)
    throw Error(ErrorKind::kConstraintViolation,
                "record " + r.id + ": choice given without hyp_b");
  return r;
}

inline nlohmann::ordered_json to_json(const EvalRecord &r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["reference"] = r.reference;
  j["hyp_a"] = r.hypothesis_a;
  if (r.hypothesis_b) j["hyp_b"] = *r.hypothesis_b;
  if (r.rating) j["rating"] = to_int(*r.rating);
  if (r.choice) j["choice"] = to_int(*r.choice);
  if (r.nlu) {
    if (r.nlu->intent_correct) j["intent_correct"] = *r.nlu->intent_correct;
    if (r.nlu->exact_match) j["em"] = *r.nlu->exact_match;
    if (r.nlu->exact_match_tree) j["em_tree"] = *r.nlu->exact_match_tree;
  }
  return j;
}

inline std::vector<EvalRecord> load_corpus(const std::filesystem::path &path) {
  std::vector<EvalRecord> records;
  std::unordered_set<std::string> seen;
  detail::for_each_json_line(path, [&](const nlohmann::json &j, std::size_t) {
    EvalRecord r = parse_record(j);
    if (!seen.insert(r.id).second)
      throw Error(ErrorKind::kDuplicateId, "duplicate id " + r.id);
    records.push_back(std::move(r));
  });
  return records;
}

inline void write_corpus(std::span<const EvalRecord> records,
                         const std::filesystem::path &path) {
  auto out = detail::open_for_write(path);
  for (const auto &r : records) out << to_json(r).dump() << '\n';
  detail::finish_write(out, path);
}

// ---------------------------------------------------------------------------

enum class HypSlot { kA, kB };

inline std::string_view to_string(HypSlot s) { return s == HypSlot::kA ? "a" : "b"; }

/// Every metric computed for one (record, hypothesis) pair. SemDist values
/// are already multiplied by `scale`; variants that were not requested are
/// absent.
struct MetricRow {
  std::string id;
  HypSlot slot = HypSlot::kA;
  std::string reference;
  std::string hypothesis;
  EditStats word;
  EditStats character;
  std::optional<double> semdist_mean;
  std::optional<double> semdist_cls;
  std::optional<double> semdist_pairwise;
  std::optional<PairwiseDetail> pairwise_detail;
  double scale = kDefaultScale;
};

inline constexpr std::string_view kMetricNames[] = {
    "cer", "wer", "semdist_mean", "semdist_cls", "semdist_pairwise"};

inline bool is_metric_name(std::string_view name) {
  return std::find(std::begin(kMetricNames), std::end(kMetricNames), name) !=
         std::end(kMetricNames);
}

inline std::optional<double> metric_value(const MetricRow &row, std::string_view name) {
  if (name == "wer") return row.word.error_rate;
  if (name == "cer") return row.character.error_rate;
  if (name == "semdist_mean") return row.semdist_mean;
  if (name == "semdist_cls") return row.semdist_cls;
  if (name == "semdist_pairwise") return row.semdist_pairwise;
  throw Error(ErrorKind::kConfig, "unknown metric \"" + std::string(name) + "\"");
}

inline nlohmann::ordered_json to_json(const MetricRow &m) {
  nlohmann::ordered_json j;
  j["id"] = m.id;
  j["hyp"] = to_string(m.slot);
  j["reference"] = m.reference;
  j["hypothesis"] = m.hypothesis;
  j["ref_words"] = m.word.reference_length;
  j["word_sub"] = m.word.substitutions;
  j["word_del"] = m.word.deletions;
  j["word_ins"] = m.word.insertions;
  j["wer"] = m.word.error_rate;
  j["ref_chars"] = m.character.reference_length;
  j["char_sub"] = m.character.substitutions;
  j["char_del"] = m.character.deletions;
  j["char_ins"] = m.character.insertions;
  j["cer"] = m.character.error_rate;
  if (m.semdist_mean) j["semdist_mean"] = *m.semdist_mean;
  if (m.semdist_cls) j["semdist_cls"] = *m.semdist_cls;
  if (m.semdist_pairwise) j["semdist_pairwise"] = *m.semdist_pairwise;
  if (m.pairwise_detail) {
    j["pairwise_precision"] = m.pairwise_detail->precision;
    j["pairwise_recall"] = m.pairwise_detail->recall;
    j["pairwise_f1"] = m.pairwise_detail->f1;
  }
  j["alpha"] = m.scale;
  return j;
}

template <typename Json>
MetricRow parse_metric_row(const Json &j) {
  auto edit = [&](const char *len, const char *sub, const char *del,
                  const char *ins, const char *rate) {
    EditStats s;
    s.reference_length = j.at(len).template get<std::size_t>();
    s.substitutions = j.at(sub).template get<std::size_t>();
    s.deletions = j.at(del).template get<std::size_t>();
    s.insertions = j.at(ins).template get<std::size_t>();
    s.error_rate = j.at(rate).template get<double>();
    return s;
  };
  auto opt = [&](const char *key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].template get<double>();
  };
  MetricRow m;
  m.id = j.at("id").template get<std::string>();
  const auto slot = j.at("hyp").template get<std::string>();
  if (slot != "a" && slot != "b")
    throw Error(ErrorKind::kParse, "\"hyp\" must be \"a\" or \"b\"");
  m.slot = slot == "a" ? HypSlot::kA : HypSlot::kB;
  m.reference = j.at("reference").template get<std::string>();
  m.hypothesis = j.at("hypothesis").template get<std::string>();
  m.word = edit("ref_words", "word_sub", "word_del", "word_ins", "wer");
  m.character = edit("ref_chars", "char_sub", "char_del", "char_ins", "cer");
  m.semdist_mean = opt("semdist_mean");
  m.semdist_cls = opt("semdist_cls");
  m.semdist_pairwise = opt("semdist_pairwise");
  if (j.contains("pairwise_precision"))
    m.pairwise_detail = PairwiseDetail{j.at("pairwise_precision").template get<double>(),
                                       j.at("pairwise_recall").template get<double>(),
                                       j.at("pairwise_f1").template get<double>()};
  m.scale = j.at("alpha").template get<double>();
  return m;
}

/// Writes rows in the given order. `records` is used to check that every
/// row joins to a record id.
inline void write_metric_rows(std::span<const EvalRecord> records,
                              std::span<const MetricRow> rows,
                              const std::filesystem::path &path) {
  std::unordered_set<std::string_view> ids;
  for (const auto &r : records) ids.insert(r.id);
  for (const auto &m : rows)
    if (!ids.contains(m.id))
      throw Error(ErrorKind::kConstraintViolation,
                  "metric row for unknown record " + m.id);
  auto out = detail::open_for_write(path);
  for (const auto &m : rows) out << to_json(m).dump() << '\n';
  detail::finish_write(out, path);
}

inline std::vector<MetricRow> read_metric_rows(const std::filesystem::path &path) {
  std::vector<MetricRow> rows;
  detail::for_each_json_line(path, [&](const nlohmann::json &j, std::size_t) {
    rows.push_back(parse_metric_row(j));
  });
  return rows;
}

}  // namespace semdist

#endif  // SEMDIST_CORPUS_HPP_
