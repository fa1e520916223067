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

#include "maftprep/tokenizer.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "maftprep/error.h"
#include "maftprep/io.h"
#include "maftprep/utf8.h"

namespace maftprep::tokenizer {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;
constexpr std::string_view kNormalizationNote =
    "whitespace-to-boundary only; no NFKC";

const char* KindName(PieceKind kind) {
  return kind == PieceKind::kSpecial ? "special" : "normal";
}

PieceKind ParseKind(const std::string& name) {
  if (name == "normal") return PieceKind::kNormal;
  if (name == "special") return PieceKind::kSpecial;
  Fail(ErrorKind::kValidation, "unknown piece kind '" + name + "'");
}

}  // namespace

UnigramModel::UnigramModel(std::vector<Piece> pieces, SpecialIds special,
                           std::string boundary,
                           std::optional<double> unk_score)
    : pieces_(std::move(pieces)),
      special_(special),
      boundary_(std::move(boundary)) {
  const std::u32string boundary_cps = utf8::Decode(boundary_);
  if (boundary_cps.size() != 1) {
    Fail(ErrorKind::kValidation, "boundary must be a single code point");
  }
  boundary_cp_ = boundary_cps[0];

  index_.reserve(pieces_.size());
  double min_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const Piece& p = pieces_[i];
    const auto id = static_cast<PieceId>(i);
    if (p.text.empty()) {
      Fail(ErrorKind::kValidation, "piece " + std::to_string(i) + " is empty");
    }
    utf8::Validate(p.text);
    if (!index_.emplace(p.text, id).second) {
      Fail(ErrorKind::kValidation, "duplicate piece '" + p.text + "'");
    }
    if (p.kind == PieceKind::kNormal) {
      if (!std::isfinite(p.score)) {
        Fail(ErrorKind::kValidation,
             "normal piece '" + p.text + "' has a non-finite score");
      }
      min_score = std::min(min_score, p.score);
      normal_ids_.push_back(id);
    }
  }
  for (PieceId id : special_.All()) {
    if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size() ||
        pieces_[static_cast<std::size_t>(id)].kind != PieceKind::kSpecial) {
      Fail(ErrorKind::kValidation, "special id " + std::to_string(id) +
                                       " does not name a special piece");
    }
  }
  if (unk_score.has_value()) {
    if (!std::isfinite(*unk_score)) {
      Fail(ErrorKind::kValidation, "unk_score must be finite");
    }
    unk_score_ = *unk_score;
    explicit_unk_score_ = true;
  } else {
    unk_score_ = (normal_ids_.empty() ? 0.0 : min_score) - kUnkPenalty;
  }
  BuildTrie();
  fingerprint_ = io::Sha256Hex(Serialize());
}

void UnigramModel::BuildTrie() {
  // Insert into a pointer-free staging trie, then flatten breadth-first into
  // sorted edge ranges.
  struct Staging {
    PieceId piece = -1;
    std::map<std::uint8_t, std::int32_t> children;
  };
  std::vector<Staging> staging(1);
  for (PieceId id : normal_ids_) {
    std::int32_t node = 0;
    for (char ch : pieces_[static_cast<std::size_t>(id)].text) {
      const auto byte = static_cast<std::uint8_t>(ch);
      auto it = staging[static_cast<std::size_t>(node)].children.find(byte);
      if (it == staging[static_cast<std::size_t>(node)].children.end()) {
        const auto next = static_cast<std::int32_t>(staging.size());
        staging[static_cast<std::size_t>(node)].children.emplace(byte, next);
        staging.emplace_back();
        node = next;
      } else {
        node = it->second;
      }
    }
    staging[static_cast<std::size_t>(node)].piece = id;
  }
  nodes_.assign(staging.size(), TrieNode{});
  edges_.clear();
  edges_.reserve(staging.size());
  for (std::size_t n = 0; n < staging.size(); ++n) {
    nodes_[n].piece = staging[n].piece;
    nodes_[n].first_edge = static_cast<std::int32_t>(edges_.size());
    nodes_[n].edge_count = static_cast<std::int32_t>(staging[n].children.size());
    for (const auto& [byte, child] : staging[n].children) {
      edges_.push_back({byte, child});
    }
  }
}

UnigramModel UnigramModel::FromJson(const json& j) {
  try {
    if (j.at("version").get<int>() != kFormatVersion) {
      Fail(ErrorKind::kValidation, "unsupported model version");
    }
    std::vector<Piece> pieces;
    const auto& arr = j.at("pieces");
    pieces.reserve(arr.size());
    for (const auto& e : arr) {
      if (!e.is_array() || e.size() != 3) {
        Fail(ErrorKind::kValidation, "piece entries are [text, score, kind]");
      }
      pieces.push_back({e[0].get<std::string>(), e[1].get<double>(),
                        ParseKind(e[2].get<std::string>())});
    }
    const auto& s = j.at("special");
    SpecialIds special{s.at("unk").get<PieceId>(), s.at("bos").get<PieceId>(),
                       s.at("eos").get<PieceId>(), s.at("pad").get<PieceId>(),
                       s.at("mask").get<PieceId>()};
    std::optional<double> unk_score;
    if (j.contains("unk_score")) unk_score = j.at("unk_score").get<double>();
    return UnigramModel(std::move(pieces), special,
                        j.value("boundary", std::string(kDefaultBoundary)),
                        unk_score);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kValidation, std::string("tokenizer model: ") + e.what());
  }
}

UnigramModel UnigramModel::Load(const fs::path& path) {
  const std::string bytes = io::ReadFile(path);
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kValidation, path.string() + ": " + e.what());
  }
  UnigramModel model = FromJson(j);
  model.fingerprint_ = io::Sha256Hex(bytes);
  return model;
}

ordered_json UnigramModel::ToJson() const {
  ordered_json j;
  j["version"] = kFormatVersion;
  j["boundary"] = boundary_;
  j["normalization"] = kNormalizationNote;
  if (explicit_unk_score_) j["unk_score"] = unk_score_;
  j["special"] = {{"unk", special_.unk}, {"bos", special_.bos},
                  {"eos", special_.eos}, {"pad", special_.pad},
                  {"mask", special_.mask}};
  ordered_json arr = ordered_json::array();
  for (const auto& p : pieces_) arr.push_back({p.text, p.score, KindName(p.kind)});
  j["pieces"] = std::move(arr);
  return j;
}

std::string UnigramModel::Serialize() const {
  // One piece per line keeps large inventories diffable.
  ordered_json head = ToJson();
  head.erase("pieces");
  std::string out = head.dump();
  out.pop_back();  // closing brace
  out += ",\"pieces\":[\n";
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    out += json::array({p.text, p.score, KindName(p.kind)}).dump();
    out += i + 1 < pieces_.size() ? ",\n" : "\n";
  }
  out += "]}\n";
  return out;
}

void UnigramModel::Save(const fs::path& path) const {
  io::WriteFileAtomic(path, Serialize());
}

std::optional<PieceId> UnigramModel::Find(std::string_view piece) const {
  const auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Normalize(std::string_view text, const UnigramModel& model) {
  const std::u32string cps = utf8::Decode(text);
  std::string out;
  out.reserve(text.size() + 8);
  if (!cps.empty() && cps.front() != model.boundary_codepoint()) {
    out += model.boundary();
  }
  bool in_space = false;
  for (char32_t c : cps) {
    if (utf8::IsWhitespace(c)) {
      if (!in_space) out += model.boundary();
      in_space = true;
    } else {
      utf8::Append(c, &out);
      in_space = false;
    }
  }
  return out;
}

TokenSequence Encode(std::string_view text, const UnigramModel& model,
                     UnkMode mode) {
  TokenSequence result;
  const std::string norm = Normalize(text, model);
  if (norm.empty()) return result;

  // Code point boundaries of the normalized text.
  std::vector<std::size_t> char_byte;
  std::vector<std::int32_t> byte_char(norm.size() + 1, -1);
  for (std::size_t b = 0; b < norm.size(); ++b) {
    if ((static_cast<std::uint8_t>(norm[b]) & 0xC0) != 0x80) {
      byte_char[b] = static_cast<std::int32_t>(char_byte.size());
      char_byte.push_back(b);
    }
  }
  const std::size_t n = char_byte.size();
  byte_char[norm.size()] = static_cast<std::int32_t>(n);
  char_byte.push_back(norm.size());

  // Backward pass: best[i] is the best score of norm[i:]. Resolving ties at
  // each start position makes the forward walk pick the lexicographically
  // preferred optimum.
  struct Choice {
    std::size_t end = 0;
    PieceId id = -1;
    bool unk = false;
  };
  std::vector<double> best(n + 1, 0.0);
  std::vector<Choice> choice(n);
  const PieceId unk_id = model.special().unk;
  for (std::size_t i = n; i-- > 0;) {
    double best_score = -std::numeric_limits<double>::infinity();
    Choice pick;
    bool single_char = false;
    model.ForEachPrefixMatch(
        std::string_view(norm).substr(char_byte[i]),
        [&](PieceId id, std::size_t length) {
          const auto end = static_cast<std::size_t>(byte_char[char_byte[i] + length]);
          if (end == i + 1) single_char = true;
          const double cand = model.piece(id).score + best[end];
          if (cand > best_score ||
              (cand == best_score &&
               (end > pick.end || (end == pick.end && id < pick.id)))) {
            best_score = cand;
            pick = {end, id, false};
          }
        });
    if (!single_char) {
      const double cand = model.unk_score() + best[i + 1];
      if (cand > best_score ||
          (cand == best_score &&
           (i + 1 > pick.end || (i + 1 == pick.end && unk_id < pick.id)))) {
        best_score = cand;
        pick = {i + 1, unk_id, true};
      }
    }
    best[i] = best_score;
    choice[i] = pick;
  }

  for (std::size_t i = 0; i < n;) {
    const Choice& c = choice[i];
    if (!c.unk) {
      result.ids.push_back(c.id);
      result.score += model.piece(c.id).score;
      i = c.end;
      continue;
    }
    result.score += model.unk_score();
    const bool extend = mode == UnkMode::kMergeRuns &&
                        !result.unk_spans.empty() &&
                        result.unk_spans.back().second == i &&
                        result.ids.back() == unk_id;
    if (extend) {
      result.unk_spans.back().second = i + 1;
    } else {
      result.ids.push_back(unk_id);
      result.unk_spans.emplace_back(i, i + 1);
    }
    i = c.end;
  }
  return result;
}

std::string Decode(std::span<const PieceId> ids, const UnigramModel& model) {
  std::string joined;
  for (std::size_t pos = 0; pos < ids.size(); ++pos) {
    const PieceId id = ids[pos];
    if (id < 0 || static_cast<std::size_t>(id) >= model.size()) {
      Fail(ErrorKind::kUsage, "id " + std::to_string(id) + " at position " +
                                  std::to_string(pos) + " is out of range");
    }
    if (id == model.special().unk) {
      joined += kUnkSurface;
    } else if (!model.IsSpecial(id)) {
      joined += model.piece(id).text;
    }
  }
  std::string out;
  out.reserve(joined.size());
  const std::string& marker = model.boundary();
  for (std::size_t i = 0; i < joined.size();) {
    if (joined.compare(i, marker.size(), marker) == 0) {
      out.push_back(' ');
      i += marker.size();
    } else {
      out.push_back(joined[i++]);
    }
  }
  if (!out.empty() && out.front() == ' ') out.erase(0, 1);
  return out;
}

PruneResult Prune(const UnigramModel& model, std::span<const PieceId> keep) {
  if (keep.empty()) Fail(ErrorKind::kUsage, "keep-set is empty");
  std::vector<bool> kept(model.size(), false);
  for (PieceId id : keep) {
    if (id < 0 || static_cast<std::size_t>(id) >= model.size()) {
      Fail(ErrorKind::kUsage,
           "keep id " + std::to_string(id) + " is not a piece of the model");
    }
    kept[static_cast<std::size_t>(id)] = true;
  }
  for (PieceId id : model.special().All()) kept[static_cast<std::size_t>(id)] = true;

  std::vector<Piece> pieces;
  std::vector<PieceId> remap(model.size(), -1);
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (!kept[i]) continue;
    remap[i] = static_cast<PieceId>(pieces.size());
    pieces.push_back(model.pieces()[i]);
  }
  const SpecialIds& s = model.special();
  SpecialIds special{remap[static_cast<std::size_t>(s.unk)],
                     remap[static_cast<std::size_t>(s.bos)],
                     remap[static_cast<std::size_t>(s.eos)],
                     remap[static_cast<std::size_t>(s.pad)],
                     remap[static_cast<std::size_t>(s.mask)]};
  return {UnigramModel(std::move(pieces), special, model.boundary(),
                       model.unk_score()),
          std::move(remap)};
}

void WriteRemapTsv(const fs::path& path, std::span<const PieceId> remap) {
  std::string out = "# old_size=" + std::to_string(remap.size()) + "\n";
  for (std::size_t i = 0; i < remap.size(); ++i) {
    if (remap[i] < 0) continue;
    out += std::to_string(i);
    out += '\t';
    out += std::to_string(remap[i]);
    out += '\n';
  }
  io::WriteFileAtomic(path, out);
}

std::vector<PieceId> ReadRemapTsv(const fs::path& path) {
  std::vector<std::pair<PieceId, PieceId>> rows;
  long long old_size = -1;
  io::ForEachLine(path, [&](std::string_view line, std::uint64_t offset) {
    if (line.empty()) return;
    constexpr std::string_view kSizeTag = "# old_size=";
    if (line.starts_with(kSizeTag)) {
      old_size = std::atoll(std::string(line.substr(kSizeTag.size())).c_str());
      return;
    }
    long long old_id = -1;
    long long new_id = -1;
    std::istringstream in{std::string(line)};
    if (!(in >> old_id >> new_id) || old_id < 0 || new_id < 0) {
      Fail(ErrorKind::kValidation, path.string() + ": bad remap row at byte offset " +
                                       std::to_string(offset));
    }
    rows.emplace_back(static_cast<PieceId>(old_id), static_cast<PieceId>(new_id));
  });
  PieceId max_old = -1;
  for (const auto& [o, n] : rows) max_old = std::max(max_old, o);
  if (old_size >= 0 && old_size <= max_old) {
    Fail(ErrorKind::kValidation, path.string() + ": remap row beyond old_size");
  }
  std::vector<PieceId> remap(
      static_cast<std::size_t>(old_size >= 0 ? old_size : max_old + 1), -1);
  std::set<PieceId> seen;
  for (const auto& [o, n] : rows) {
    if (remap[static_cast<std::size_t>(o)] >= 0 || !seen.insert(n).second) {
      Fail(ErrorKind::kValidation, path.string() + ": remap is not injective");
    }
    remap[static_cast<std::size_t>(o)] = n;
  }
  return remap;
}

void EncodeFile(const fs::path& path, const UnigramModel& model, UnkMode mode,
                unsigned threads,
                const std::function<void(std::size_t, const TokenSequence&)>& sink) {
  constexpr std::size_t kBatchLines = 4096;
  const std::size_t parts = std::max(1u, threads);
  std::vector<std::string> batch;
  std::vector<std::uint64_t> offsets;
  auto flush = [&] {
    const std::size_t per_part = (batch.size() + parts - 1) / parts;
    io::ParallelFor(parts, threads, [&](std::size_t part) {
      const std::size_t begin = part * per_part;
      const std::size_t end = std::min(batch.size(), begin + per_part);
      for (std::size_t i = begin; i < end; ++i) {
        TokenSequence seq;
        try {
          seq = Encode(batch[i], model, mode);
        } catch (const Error& e) {
          throw Error(e.kind(), path.string() + " (line at byte offset " +
                                    std::to_string(offsets[i]) + "): " + e.what());
        }
        sink(part, seq);
      }
    });
    batch.clear();
    offsets.clear();
  };
  io::ForEachLine(path, [&](std::string_view line, std::uint64_t offset) {
    batch.emplace_back(line);
    offsets.push_back(offset);
    if (batch.size() == kBatchLines) flush();
  });
  if (!batch.empty()) flush();
}

UnkCount CountUnks(std::span<const std::string> lines,
                   const UnigramModel& model, UnkMode mode) {
  UnkCount count;
  const PieceId unk = model.special().unk;
  for (const auto& line : lines) {
    const TokenSequence seq = Encode(line, model, mode);
    count.total_tokens += seq.ids.size();
    count.unk_tokens += static_cast<std::uint64_t>(
        std::count(seq.ids.begin(), seq.ids.end(), unk));
  }
  return count;
}

UnkCount CountUnks(const fs::path& path, const UnigramModel& model,
                   UnkMode mode, unsigned threads) {
  std::vector<UnkCount> parts(std::max(1u, threads));
  const PieceId unk = model.special().unk;
  EncodeFile(path, model, mode, threads,
             [&](std::size_t part, const TokenSequence& seq) {
               parts[part].total_tokens += seq.ids.size();
               parts[part].unk_tokens += static_cast<std::uint64_t>(
                   std::count(seq.ids.begin(), seq.ids.end(), unk));
             });
  UnkCount total;
  for (const auto& p : parts) {
    total.unk_tokens += p.unk_tokens;
    total.total_tokens += p.total_tokens;
  }
  return total;
}

}  // namespace maftprep::tokenizer
