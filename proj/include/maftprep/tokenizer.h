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

#ifndef MAFTPREP_TOKENIZER_H_
#define MAFTPREP_TOKENIZER_H_

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace maftprep::tokenizer {

using PieceId = std::int32_t;

enum class PieceKind { kNormal, kSpecial };

struct Piece {
  std::string text;
  double score = 0.0;
  PieceKind kind = PieceKind::kNormal;

  bool operator==(const Piece&) const = default;
};

struct SpecialIds {
  PieceId unk = 0;
  PieceId bos = 1;
  PieceId eos = 2;
  PieceId pad = 3;
  PieceId mask = 4;

  std::array<PieceId, 5> All() const { return {unk, bos, eos, pad, mask}; }
  bool operator==(const SpecialIds&) const = default;
};

inline constexpr std::string_view kDefaultBoundary = "\xE2\x96\x81";  // U+2581
inline constexpr std::string_view kUnkSurface = "\xE2\x81\x87";       // U+2047

// Offset below the lowest normal-piece score used for unknown characters
// when the model file does not pin an explicit unk_score.
inline constexpr double kUnkPenalty = 10.0;

// Immutable unigram subword model. Safe to share across threads.
class UnigramModel {
 public:
  // Validates and indexes the inventory. When `unk_score` is empty the
  // unknown-character score is (lowest normal score - kUnkPenalty).
  UnigramModel(std::vector<Piece> pieces, SpecialIds special,
               std::string boundary = std::string(kDefaultBoundary),
               std::optional<double> unk_score = std::nullopt);

  static UnigramModel FromJson(const nlohmann::json& j);
  // The fingerprint of a loaded model is the SHA-256 of the file bytes.
  static UnigramModel Load(const std::filesystem::path& path);

  nlohmann::ordered_json ToJson() const;
  // Canonical serialization; Fingerprint() equals the SHA-256 of these bytes
  // for models that were not loaded from a file.
  std::string Serialize() const;
  void Save(const std::filesystem::path& path) const;

  std::size_t size() const { return pieces_.size(); }
  const Piece& piece(PieceId id) const { return pieces_.at(static_cast<std::size_t>(id)); }
  const std::vector<Piece>& pieces() const { return pieces_; }
  const SpecialIds& special() const { return special_; }
  const std::string& boundary() const { return boundary_; }
  char32_t boundary_codepoint() const { return boundary_cp_; }
  double unk_score() const { return unk_score_; }
  bool has_explicit_unk_score() const { return explicit_unk_score_; }
  const std::string& fingerprint() const { return fingerprint_; }

  std::optional<PieceId> Find(std::string_view piece) const;
  bool IsSpecial(PieceId id) const {
    return pieces_[static_cast<std::size_t>(id)].kind == PieceKind::kSpecial;
  }
  // Ids of kind normal, ascending.
  const std::vector<PieceId>& normal_ids() const { return normal_ids_; }

  // Calls `visit(piece_id, byte_length)` for every normal piece that is a
  // prefix of `text`, shortest first.
  template <typename Visitor>
  void ForEachPrefixMatch(std::string_view text, Visitor&& visit) const;

 private:
  struct TrieEdge {
    std::uint8_t byte;
    std::int32_t node;
  };
  struct TrieNode {
    PieceId piece = -1;
    std::int32_t first_edge = 0;
    std::int32_t edge_count = 0;
  };

  void BuildTrie();

  std::vector<Piece> pieces_;
  SpecialIds special_;
  std::string boundary_;
  char32_t boundary_cp_ = 0;
  double unk_score_ = 0.0;
  bool explicit_unk_score_ = false;
  std::string fingerprint_;
  std::unordered_map<std::string, PieceId> index_;
  std::vector<PieceId> normal_ids_;
  std::vector<TrieNode> nodes_;
  std::vector<TrieEdge> edges_;
};

template <typename Visitor>
void UnigramModel::ForEachPrefixMatch(std::string_view text,
                                      Visitor&& visit) const {
  std::int32_t node = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto byte = static_cast<std::uint8_t>(text[i]);
    const TrieNode& n = nodes_[static_cast<std::size_t>(node)];
    const TrieEdge* begin = edges_.data() + n.first_edge;
    const TrieEdge* end = begin + n.edge_count;
    const TrieEdge* it = std::lower_bound(
        begin, end, byte,
        [](const TrieEdge& e, std::uint8_t b) { return e.byte < b; });
    if (it == end || it->byte != byte) return;
    node = it->node;
    const PieceId id = nodes_[static_cast<std::size_t>(node)].piece;
    if (id >= 0) visit(id, i + 1);
  }
}

// How a run of consecutive unknown characters is reported.
enum class UnkMode {
  kMergeRuns,     // one unk id per maximal run
  kPerCharacter,  // one unk id per character
};

struct TokenSequence {
  std::vector<PieceId> ids;
  // [start, end) code point offsets into the normalized text, ascending.
  std::vector<std::pair<std::size_t, std::size_t>> unk_spans;
  // Sum of edge scores along the chosen path, left to right; each unknown
  // character contributes unk_score().
  double score = 0.0;
};

// Whitespace runs become one boundary marker; a marker is prepended unless
// the text already starts with one. Nothing else changes.
std::string Normalize(std::string_view text, const UnigramModel& model);

// Maximum-score segmentation of Normalize(text). Equal scores prefer the
// longer first piece, then the lower id, applied left to right.
TokenSequence Encode(std::string_view text, const UnigramModel& model,
                     UnkMode mode = UnkMode::kMergeRuns);

// Inverse of Encode() on covered text. Unknown ids decode to kUnkSurface,
// other special pieces to nothing. Throws Error(kUsage) naming the position
// of an out-of-range id.
std::string Decode(std::span<const PieceId> ids, const UnigramModel& model);

struct PruneResult {
  UnigramModel model;
  // old id -> new id, -1 where dropped.
  std::vector<PieceId> remap;
};

// Keeps `keep` plus the five special ids, preserving relative order. The
// result pins unk_score() to the source's value so segmentations only change
// where dropped pieces were used.
PruneResult Prune(const UnigramModel& model, std::span<const PieceId> keep);

void WriteRemapTsv(const std::filesystem::path& path,
                   std::span<const PieceId> remap);
// Returns old id -> new id (-1 for absent rows), sized by the largest old id.
std::vector<PieceId> ReadRemapTsv(const std::filesystem::path& path);

struct UnkCount {
  std::uint64_t unk_tokens = 0;
  std::uint64_t total_tokens = 0;

  bool operator==(const UnkCount&) const = default;
};

// Encodes every line of `path` across `threads` workers. `sink(part, seq)` is
// called with part < max(threads, 1); calls sharing a part are sequential.
void EncodeFile(const std::filesystem::path& path, const UnigramModel& model,
                UnkMode mode, unsigned threads,
                const std::function<void(std::size_t part,
                                         const TokenSequence& seq)>& sink);

UnkCount CountUnks(std::span<const std::string> lines,
                   const UnigramModel& model,
                   UnkMode mode = UnkMode::kMergeRuns);
UnkCount CountUnks(const std::filesystem::path& path,
                   const UnigramModel& model,
                   UnkMode mode = UnkMode::kMergeRuns, unsigned threads = 1);

}  // namespace maftprep::tokenizer

#endif  // MAFTPREP_TOKENIZER_H_
