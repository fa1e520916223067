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

#ifndef MAFTPREP_VOCAB_SELECT_H_
#define MAFTPREP_VOCAB_SELECT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "maftprep/tokenizer.h"

namespace maftprep::vocab {

using tokenizer::PieceId;

// Exact piece-emission counts for one script group.
struct FreqTable {
  std::vector<std::uint64_t> counts;  // indexed by piece id
  std::uint64_t total = 0;
  std::string group;
  std::string tokenizer_fingerprint;
  PieceId unk_id = 0;

  static FreqTable Empty(const tokenizer::UnigramModel& model,
                         std::string group);

  std::size_t vocab_size() const { return counts.size(); }

  // Adds `other` into this table. Throws Error(kMismatch) when the tables
  // come from different tokenizers or groups.
  void Merge(const FreqTable& other);

  // TSV: one '#' header line, then `piece_id<TAB>piece<TAB>count` for
  // nonzero counts, sorted by count descending then id ascending.
  void Save(const std::filesystem::path& path,
            const tokenizer::UnigramModel& model) const;
  static FreqTable Load(const std::filesystem::path& path);

  bool operator==(const FreqTable&) const = default;
};

FreqTable CountFrequencies(std::span<const std::filesystem::path> shards,
                           const tokenizer::UnigramModel& model,
                           const std::string& group, unsigned threads = 1,
                           tokenizer::UnkMode mode = tokenizer::UnkMode::kMergeRuns);

// Covered occurrences over all occurrences. Unknown emissions are never
// covered. Returns 1.0 for an empty table.
double Coverage(const FreqTable& freq, std::span<const PieceId> selected);

// Every id ordered by count descending, then id ascending.
std::vector<PieceId> RankByCount(const FreqTable& freq);

// The k best-ranked ids, ascending. When `pad_with_unseen` is false the
// result stops at the nonzero-count ids.
std::vector<PieceId> SelectTopK(const FreqTable& freq, std::size_t k,
                                bool pad_with_unseen = true);

struct CoverageSelection {
  std::size_t k = 0;
  std::vector<PieceId> ids;  // ascending
  double coverage = 0.0;
  bool shortfall = false;  // target unreachable; all pieces returned
};

// Smallest k whose top-k coverage reaches `target`.
CoverageSelection SelectForCoverage(const FreqTable& freq, double target);

enum class Strategy { kPooled, kPerGroup };

const char* StrategyName(Strategy strategy);
Strategy ParseStrategy(std::string_view name);

struct Recipe {
  Strategy strategy = Strategy::kPerGroup;
  std::map<std::string, std::size_t> k_per_group;
  std::size_t pooled_k = 0;
  std::size_t original_topn = 0;
  // "id-order" or "frequency-file".
  std::string original_topn_basis = "id-order";
};

struct VocabSelection {
  std::vector<PieceId> keep_ids;  // ascending, unique, specials included
  Recipe recipe;
  std::map<std::string, double> achieved_coverage;
  std::string tokenizer_fingerprint;
  std::size_t vocab_size = 0;

  nlohmann::ordered_json ToJson() const;
  static VocabSelection FromJson(const nlohmann::json& j);
  void Save(const std::filesystem::path& path) const;
  static VocabSelection Load(const std::filesystem::path& path);
  void Validate() const;
};

// The n lowest normal-piece ids. Pretrained inventories are ordered so that
// these are the most frequent pieces of the original training data.
std::vector<PieceId> OriginalTopN(const tokenizer::UnigramModel& model,
                                  std::size_t n);
// The n most frequent normal pieces according to `freq`.
std::vector<PieceId> OriginalTopN(const FreqTable& freq,
                                  const tokenizer::UnigramModel& model,
                                  std::size_t n);

// Union of the group sets, `original_topn_ids` and the model's specials.
// Throws Error(kUsage) if the union of the inputs is empty.
VocabSelection MergeSelections(const std::vector<std::vector<PieceId>>& groups,
                               std::span<const PieceId> original_topn_ids,
                               const tokenizer::UnigramModel& model,
                               Recipe recipe);

// Pooled: sum the tables and take the top pooled_k. Per-group: top-k per
// table, then MergeSelections. `original_topn_ids` overrides the id-order
// basis when present.
VocabSelection SelectStrategy(
    const std::map<std::string, FreqTable>& tables, const Recipe& recipe,
    const tokenizer::UnigramModel& model,
    std::optional<std::vector<PieceId>> original_topn_ids = std::nullopt);

}  // namespace maftprep::vocab

#endif  // MAFTPREP_VOCAB_SELECT_H_
