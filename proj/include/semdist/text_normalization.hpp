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

#ifndef SEMDIST_TEXT_NORMALIZATION_HPP_
#define SEMDIST_TEXT_NORMALIZATION_HPP_

#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>

#include "semdist/error.hpp"

namespace semdist {

/// A transcript after canonicalization. `normalized` is lowercase NFC text
/// with punctuation from the strip set removed and whitespace collapsed;
/// `tokens` is its single-space split.
struct NormalizedText {
  std::string original;
  std::string normalized;
  std::vector<std::string> tokens;
};

namespace detail {

inline bool is_typographic_apostrophe(UChar32 c) {
  return c == 0x2018 || c == 0x2019 || c == 0x201B;
}

inline bool is_stripped(UChar32 c) {
  switch (c) {
    case '.': case ',': case '?': case '!': case ';': case ':': case '"':
    case 0x00AB: case 0x00BB:                            // « »
    case 0x2018: case 0x2019: case 0x201A: case 0x201B:  // ‘ ’ ‚ ‛
    case 0x201C: case 0x201D: case 0x201E: case 0x201F:  // “ ” „ ‟
    case 0x2039: case 0x203A:                            // ‹ ›
      return true;
    default:
      return false;
  }
}

inline icu::UnicodeString nfc(const icu::UnicodeString &text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2 *normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status))
    throw Error(ErrorKind::kConfig, "ICU NFC normalizer unavailable");
  icu::UnicodeString out = normalizer->normalize(text, status);
  if (U_FAILURE(status))
    throw Error(ErrorKind::kConfig, "ICU NFC normalization failed");
  return out;
}

}  // namespace detail

/// Decodes UTF-8 into code points. Malformed sequences become U+FFFD.
inline std::u32string code_points(std::string_view utf8) {
  icu::UnicodeString text = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  std::u32string out;
  out.reserve(static_cast<std::size_t>(text.countChar32()));
  for (int32_t i = 0; i < text.length(); i = text.moveIndex32(i, 1))
    out.push_back(static_cast<char32_t>(text.char32At(i)));
  return out;
}

inline NormalizedText normalize(std::string_view text) {
  NormalizedText result;
  result.original = std::string(text);

  icu::UnicodeString folded = detail::nfc(icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size()))));
  folded.toLower(icu::Locale::getRoot());
  folded = detail::nfc(folded);

  std::vector<UChar32> chars;
  chars.reserve(static_cast<std::size_t>(folded.countChar32()));
  for (int32_t i = 0; i < folded.length(); i = folded.moveIndex32(i, 1))
    chars.push_back(folded.char32At(i));

  icu::UnicodeString cleaned;
  bool pending_space = false;
  for (std::size_t i = 0; i < chars.size(); ++i) {
    const UChar32 c = chars[i];
    if (u_isUWhiteSpace(c) || c == '\t' || c == '\n' || c == '\r') {
      pending_space = true;
      continue;
    }
    UChar32 emitted = c;
    if (detail::is_stripped(c)) {
      // A curly apostrophe between two word characters is an apostrophe,
      // not a quote ("i’m" -> "i'm").
      const bool inside_word = detail::is_typographic_apostrophe(c) && i > 0 &&
                               i + 1 < chars.size() && u_isalnum(chars[i - 1]) &&
                               u_isalnum(chars[i + 1]);
      if (!inside_word) continue;
      emitted = '\'';
    }
    if (pending_space && !cleaned.isEmpty()) cleaned.append(UChar32{' '});
    pending_space = false;
    cleaned.append(emitted);
  }

  cleaned.toUTF8String(result.normalized);

  std::size_t start = 0;
  const std::string &norm = result.normalized;
  while (start < norm.size()) {
    std::size_t end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    result.tokens.emplace_back(norm.substr(start, end - start));
    start = end + 1;
  }
  return result;
}

}  // namespace semdist

#endif  // SEMDIST_TEXT_NORMALIZATION_HPP_
