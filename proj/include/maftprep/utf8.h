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

#ifndef MAFTPREP_UTF8_H_
#define MAFTPREP_UTF8_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace maftprep::utf8 {

// Decodes `text` into code points. Throws Error(kDecode) naming the byte
// offset (plus `base_offset`) of the first ill-formed sequence.
std::u32string Decode(std::string_view text, std::size_t base_offset = 0);

// Throws like Decode() without materializing the code points.
void Validate(std::string_view text, std::size_t base_offset = 0);

void Append(char32_t cp, std::string* out);
std::string Encode(std::u32string_view cps);

// Unicode general category L*.
bool IsLetter(char32_t cp);
// Unicode White_Space property.
bool IsWhitespace(char32_t cp);

// Splits on runs of IsWhitespace(); no empty tokens.
std::size_t CountWhitespaceTokens(std::u32string_view cps);

}  // namespace maftprep::utf8

#endif  // MAFTPREP_UTF8_H_
