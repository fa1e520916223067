// Copyright 2026 The maftprep Authors.
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

#include "maftprep/utf8.h"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "maftprep/error.h"

namespace maftprep::utf8 {
namespace {

template <typename Sink>
void DecodeInto(std::string_view text, std::size_t base_offset, Sink&& sink) {
  const auto* s = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    if (s[i] < 0x80) {
      sink(static_cast<char32_t>(s[i++]));
      continue;
    }
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) {
      Fail(ErrorKind::kDecode,
           "invalid UTF-8 at byte offset " +
               std::to_string(base_offset + static_cast<std::size_t>(start)));
    }
    sink(static_cast<char32_t>(c));
  }
}

}  // namespace

std::u32string Decode(std::string_view text, std::size_t base_offset) {
  std::u32string out;
  out.reserve(text.size());
  DecodeInto(text, base_offset, [&](char32_t c) { out.push_back(c); });
  return out;
}

void Validate(std::string_view text, std::size_t base_offset) {
  DecodeInto(text, base_offset, [](char32_t) {});
}

void Append(char32_t cp, std::string* out) {
  if (cp < 0x80) {
    out->push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out->push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out->push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out->push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string Encode(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t c : cps) Append(c, &out);
  return out;
}

bool IsLetter(char32_t cp) {
  return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & U_GC_L_MASK) != 0;
}

bool IsWhitespace(char32_t cp) {
  if (cp < 0x80) {
    return cp == ' ' || (cp >= '\t' && cp <= '\r');
  }
  return u_isUWhiteSpace(static_cast<UChar32>(cp));
}

std::size_t CountWhitespaceTokens(std::u32string_view cps) {
  std::size_t tokens = 0;
  bool in_token = false;
  for (char32_t c : cps) {
    const bool space = IsWhitespace(c);
    if (!space && !in_token) ++tokens;
    in_token = !space;
  }
  return tokens;
}

}  // namespace maftprep::utf8
