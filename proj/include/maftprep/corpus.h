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

#ifndef MAFTPREP_CORPUS_H_
#define MAFTPREP_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace maftprep::corpus {

inline constexpr int kDefaultMinTokens = 6;
inline constexpr std::size_t kDefaultMinClassSize = 200;

// Returns false for lines without any letter (numbers, punctuation, symbols
// and whitespace only) and for lines with fewer than `min_tokens`
// whitespace-separated tokens. Throws Error(kDecode) on invalid UTF-8;
// `base_offset` is added to the reported byte offset.
bool CleanLine(std::string_view line, int min_tokens = kDefaultMinTokens,
               std::uint64_t base_offset = 0);

struct CleanStats {
  std::uint64_t lines_in = 0;
  std::uint64_t lines_kept = 0;
  std::uint64_t bytes_kept = 0;  // kept lines including their '\n'

  CleanStats& operator+=(const CleanStats& other);
  bool operator==(const CleanStats&) const = default;
};

// Copies the lines of `in` that pass CleanLine() to `out`, '\n'-terminated,
// in input order.
CleanStats PreprocessCorpus(std::istream& in, std::ostream& out,
                            int min_tokens = kDefaultMinTokens);

// File-to-file variant; `output` is replaced atomically. Errors carry the
// input path and byte offset.
CleanStats PreprocessFile(const std::filesystem::path& input,
                          const std::filesystem::path& output,
                          int min_tokens = kDefaultMinTokens);

// language -> script group, e.g. {"amh": "geez", "hau": "latin"}.
using GroupMap = std::map<std::string, std::string>;
GroupMap LoadGroupMap(const std::filesystem::path& path);

struct ShardEntry {
  std::string path;  // relative to the manifest's directory
  std::string language;
  std::string group;
  std::uint64_t line_count = 0;
  std::uint64_t byte_count = 0;
};

struct CorpusManifest {
  std::vector<ShardEntry> shards;
  int min_tokens = kDefaultMinTokens;
  std::vector<std::string> filters_applied;
  std::string created_at;

  nlohmann::ordered_json ToJson() const;
  static CorpusManifest FromJson(const nlohmann::json& j);

  void Save(const std::filesystem::path& path) const;
  static CorpusManifest Load(const std::filesystem::path& path);

  // Checks entry invariants and, when `base_dir` is non-empty, that each
  // shard file exists with the recorded line and byte counts.
  void Validate(const std::filesystem::path& base_dir = {}) const;

  std::set<std::string> Groups() const;
  std::vector<std::filesystem::path> ShardPaths(
      const std::filesystem::path& base_dir, std::string_view group) const;
};

struct ShardInput {
  std::string language;
  std::filesystem::path path;
};

// Cleans every input shard into `out_dir` (shard-parallel, deterministic) and
// returns the manifest describing the outputs. `total` receives merged stats.
CorpusManifest CleanShards(const std::vector<ShardInput>& inputs,
                           const GroupMap& groups,
                           const std::filesystem::path& out_dir,
                           int min_tokens, unsigned threads,
                           CleanStats* total = nullptr);

struct LabeledExample {
  std::string text;
  std::string label;

  bool operator==(const LabeledExample&) const = default;
};

struct CandidateExample {
  std::string text;
  std::set<std::string> labels;
};

// Keeps the examples with exactly one label.
std::vector<LabeledExample> FilterMultilabel(
    const std::vector<CandidateExample>& examples);

struct ClassFilterResult {
  std::vector<LabeledExample> examples;
  std::set<std::string> dropped_classes;
};

ClassFilterResult EnforceMinClassSize(
    const std::vector<LabeledExample>& examples,
    std::size_t min_size = kDefaultMinClassSize);

struct SplitRatios {
  double train = 0.7;
  double dev = 0.1;
  double test = 0.2;
};

struct SplitResult {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> dev;
  std::vector<LabeledExample> test;
};

// Per-class quota for each split: floor(ratio * n), then the leftover
// examples go to the largest fractional remainders (ties to the earlier
// split).
std::vector<std::size_t> AllocateSplitCounts(std::size_t class_size,
                                             const SplitRatios& ratios);

// Stratified split. Membership within a class is drawn by a seeded shuffle;
// each output keeps the input's relative order.
SplitResult StratifiedSplit(const std::vector<LabeledExample>& examples,
                            const SplitRatios& ratios, std::uint64_t seed);

// `label<TAB>text` lines. Multiple candidate labels may be comma-separated
// in the first column.
std::vector<CandidateExample> ReadCandidateTsv(
    const std::filesystem::path& path);
void WriteLabeledTsv(const std::filesystem::path& path,
                     const std::vector<LabeledExample>& examples);

}  // namespace maftprep::corpus

#endif  // MAFTPREP_CORPUS_H_
