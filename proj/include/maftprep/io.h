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

#ifndef MAFTPREP_IO_H_
#define MAFTPREP_IO_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace maftprep::io {

std::string ReadFile(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over `path`.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents);

// Streams `path` line by line (without the trailing '\n' or "\r\n").
// `visit` receives the line and its starting byte offset in the file.
void ForEachLine(
    const std::filesystem::path& path,
    const std::function<void(std::string_view line, std::uint64_t offset)>&
        visit);

// Lowercase hex SHA-256.
std::string Sha256Hex(std::string_view bytes);
std::string FingerprintFile(const std::filesystem::path& path);

// RFC 3339 UTC timestamp. Honors SOURCE_DATE_EPOCH for reproducible builds.
std::string Timestamp();

// Runs `fn(i)` for i in [0, n) across at most `threads` workers. Exceptions
// from workers are rethrown (the one with the lowest index wins).
void ParallelFor(std::size_t n, unsigned threads,
                 const std::function<void(std::size_t)>& fn);

unsigned DefaultThreads();

}  // namespace maftprep::io

#endif  // MAFTPREP_IO_H_
