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

#include "maftprep/vocab_select.h"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <set>
#include <sstream>

#include "maftprep/error.h"
#include "maftprep/io.h"

namespace maftprep::vocab {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using tokenizer::UnigramModel;

namespace {

constexpr std::string_view kFreqMagic = "# maftprep-freq v1";

std::string EscapeField(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::uint64_t ParseU64(std::string_view s, const std::string& what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    Fail(ErrorKind::kValidation, "bad " + what + " '" + std::string(s) + "'");
  }
  return v;
}

void CheckModelMatch(const FreqTable& freq, const UnigramModel& model) {
  if (freq.tokenizer_fingerprint != model.fingerprint() ||
      freq.vocab_size() != model.size()) {
    Fail(ErrorKind::kMismatch, "frequency table for group '" + freq.group +
                                   "' was counted with a different tokenizer");
  }
}

}  // namespace

FreqTable FreqTable::Empty(const UnigramModel& model, std::string group) {
  FreqTable t;
  t.counts.assign(model.size(), 0);
  t.group = std::move(group);
  t.tokenizer_fingerprint = model.fingerprint();
  t.unk_id = model.special().unk;
  return t;
}

void FreqTable::Merge(const FreqTable& other) {
  if (other.tokenizer_fingerprint != tokenizer_fingerprint ||
      other.counts.size() != counts.size()) {
    Fail(ErrorKind::kMismatch,
         "cannot merge frequency tables from different tokenizers");
  }
  if (other.group != group) {
    Fail(ErrorKind::kMismatch, "cannot merge frequency tables of groups '" +
                                   group + "' and '" + other.group + "'");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  total += other.total;
}

void FreqTable::Save(const fs::path& path, const UnigramModel& model) const {
  CheckModelMatch(*this, model);
  std::ostringstream out;
  out << kFreqMagic << " fingerprint=" << tokenizer_fingerprint
      << " group=" << group << " vocab_size=" << counts.size()
      << " unk_id=" << unk_id << " total=" << total << '\n';
  for (PieceId id : RankByCount(*this)) {
    const auto count = counts[static_cast<std::size_t>(id)];
    if (count == 0) break;
    out << id << '\t' << EscapeField(model.piece(id).text) << '\t' << count
        << '\n';
  }
  io::WriteFileAtomic(path, out.str());
}

FreqTable FreqTable::Load(const fs::path& path) {
  FreqTable t;
  bool header = false;
  std::uint64_t declared_total = 0;
  io::ForEachLine(path, [&](std::string_view line, std::uint64_t offset) {
    if (!header) {
      if (line.substr(0, kFreqMagic.size()) != kFreqMagic) {
        Fail(ErrorKind::kValidation, path.string() + ": not a frequency table");
      }
      std::istringstream fields{std::string(line.substr(kFreqMagic.size()))};
      std::string field;
      std::map<std::string, std::string> kv;
      while (fields >> field) {
        const auto eq = field.find('=');
        if (eq != std::string::npos) kv[field.substr(0, eq)] = field.substr(eq + 1);
      }
      for (const char* key : {"fingerprint", "group", "vocab_size", "unk_id", "total"}) {
        if (!kv.contains(key)) {
          Fail(ErrorKind::kValidation, path.string() + ": header lacks " + key);
        }
      }
      t.tokenizer_fingerprint = kv["fingerprint"];
      t.group = kv["group"];
      t.counts.assign(ParseU64(kv["vocab_size"], "vocab_size"), 0);
      t.unk_id = static_cast<PieceId>(ParseU64(kv["unk_id"], "unk_id"));
      declared_total = ParseU64(kv["total"], "total");
      header = true;
      return;
    }
    if (line.empty()) return;
    const auto first = line.find('\t');
    const auto last = line.rfind('\t');
    if (first == std::string_view::npos || first == last) {
      Fail(ErrorKind::kValidation, path.string() + ": malformed row at byte offset " +
                                       std::to_string(offset));
    }
    const auto id = ParseU64(line.substr(0, first), "piece id");
    if (id >= t.counts.size()) {
      Fail(ErrorKind::kValidation, path.string() + ": piece id " +
                                       std::to_string(id) + " out of range");
    }
    t.counts[id] = ParseU64(line.substr(last + 1), "count");
    t.total += t.counts[id];
  });
  if (!header) Fail(ErrorKind::kValidation, path.string() + ": empty file");
  if (t.total != declared_total) {
    Fail(ErrorKind::kValidation, path.string() + ": counts do not sum to total");
  }
  return t;
}

FreqTable CountFrequencies(std::span<const fs::path> shards,
                           const UnigramModel& model, const std::string& group,
                           unsigned threads, tokenizer::UnkMode mode) {
  FreqTable table = FreqTable::Empty(model, group);
  for (const auto& shard : shards) {
    std::vector<FreqTable> parts(std::max(1u, threads),
                                 FreqTable::Empty(model, group));
    tokenizer::EncodeFile(shard, model, mode, threads,
                          [&](std::size_t part, const tokenizer::TokenSequence& seq) {
                            auto& p = parts[part];
                            for (PieceId id : seq.ids) {
                              ++p.counts[static_cast<std::size_t>(id)];
                            }
                            p.total += seq.ids.size();
                          });
    for (const auto& p : parts) table.Merge(p);
  }
  return table;
}

double Coverage(const FreqTable& freq, std::span<const PieceId> selected) {
  if (freq.total == 0) return 1.0;
  std::vector<bool> seen(freq.counts.size(), false);
  std::uint64_t covered = 0;
  for (PieceId id : selected) {
    const auto i = static_cast<std::size_t>(id);
    if (i >= freq.counts.size()) {
      Fail(ErrorKind::kUsage, "piece id " + std::to_string(id) + " out of range");
    }
    if (seen[i] || id == freq.unk_id) continue;
    seen[i] = true;
    covered += freq.counts[i];
  }
  return static_cast<double>(covered) / static_cast<double>(freq.total);
}

std::vector<PieceId> RankByCount(const FreqTable& freq) {
  std::vector<PieceId> ids(freq.counts.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(), [&](PieceId a, PieceId b) {
    return freq.counts[static_cast<std::size_t>(a)] >
           freq.counts[static_cast<std::size_t>(b)];
  });
  return ids;
}

std::vector<PieceId> SelectTopK(const FreqTable& freq, std::size_t k,
                                bool pad_with_unseen) {
  std::vector<PieceId> ranked = RankByCount(freq);
  std::size_t take = std::min(k, ranked.size());
  if (!pad_with_unseen) {
    while (take > 0 && freq.counts[static_cast<std::size_t>(ranked[take - 1])] == 0) {
      --take;
    }
  }
  ranked.resize(take);
  std::sort(ranked.begin(), ranked.end());
  return ranked;
}

CoverageSelection SelectForCoverage(const FreqTable& freq, double target) {
  if (!(target >= 0.0 && target <= 1.0)) {
    Fail(ErrorKind::kUsage, "coverage target must lie in [0, 1]");
  }
  const std::vector<PieceId> ranked = RankByCount(freq);
  CoverageSelection result;
  auto coverage_of = [&](std::uint64_t covered) {
    return freq.total == 0 ? 1.0
                           : static_cast<double>(covered) /
                                 static_cast<double>(freq.total);
  };
  std::uint64_t covered = 0;
  std::size_t k = 0;
  while (coverage_of(covered) < target && k < ranked.size()) {
    const PieceId id = ranked[k++];
    if (id != freq.unk_id) covered += freq.counts[static_cast<std::size_t>(id)];
  }
  result.coverage = coverage_of(covered);
  result.shortfall = result.coverage < target;
  result.k = k;
  result.ids.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(result.ids.begin(), result.ids.end());
  return result;
}

const char* StrategyName(Strategy strategy) {
  return strategy == Strategy::kPooled ? "pooled" : "per_group";
}

Strategy ParseStrategy(std::string_view name) {
  if (name == "pooled") return Strategy::kPooled;
  if (name == "per_group" || name == "per-group") return Strategy::kPerGroup;
  Fail(ErrorKind::kUsage, "unknown strategy '" + std::string(name) + "'");
}

ordered_json VocabSelection::ToJson() const {
  ordered_json j;
  j["tokenizer_fingerprint"] = tokenizer_fingerprint;
  j["vocab_size"] = vocab_size;
  ordered_json recipe_json;
  recipe_json["strategy"] = StrategyName(recipe.strategy);
  recipe_json["k_per_group"] = ordered_json::object();
  for (const auto& [g, k] : recipe.k_per_group) recipe_json["k_per_group"][g] = k;
  recipe_json["pooled_k"] = recipe.pooled_k;
  recipe_json["original_topn"] = recipe.original_topn;
  recipe_json["original_topn_basis"] = recipe.original_topn_basis;
  j["recipe"] = std::move(recipe_json);
  j["achieved_coverage"] = ordered_json::object();
  for (const auto& [g, c] : achieved_coverage) j["achieved_coverage"][g] = c;
  j["keep_count"] = keep_ids.size();
  j["keep_ids"] = keep_ids;
  return j;
}

VocabSelection VocabSelection::FromJson(const json& j) {
  VocabSelection s;
  try {
    s.tokenizer_fingerprint = j.at("tokenizer_fingerprint").get<std::string>();
    s.vocab_size = j.at("vocab_size").get<std::size_t>();
    const auto& r = j.at("recipe");
    s.recipe.strategy = ParseStrategy(r.at("strategy").get<std::string>());
    s.recipe.k_per_group =
        r.at("k_per_group").get<std::map<std::string, std::size_t>>();
    s.recipe.pooled_k = r.at("pooled_k").get<std::size_t>();
    s.recipe.original_topn = r.at("original_topn").get<std::size_t>();
    s.recipe.original_topn_basis = r.at("original_topn_basis").get<std::string>();
    s.achieved_coverage =
        j.at("achieved_coverage").get<std::map<std::string, double>>();
    s.keep_ids = j.at("keep_ids").get<std::vector<PieceId>>();
  } catch (const json::exception& e) {
    Fail(ErrorKind::kValidation, std::string("vocab selection: ") + e.what());
  }
  s.Validate();
  return s;
}

void VocabSelection::Save(const fs::path& path) const {
  Validate();
  // keep_ids on one line; everything else indented.
  ordered_json j = ToJson();
  const std::string ids = j["keep_ids"].dump();
  j["keep_ids"] = "@IDS@";
  std::string text = j.dump(2);
  text.replace(text.find("\"@IDS@\""), 7, ids);
  io::WriteFileAtomic(path, text + "\n");
}

VocabSelection VocabSelection::Load(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::ReadFile(path));
  } catch (const json::exception& e) {
    Fail(ErrorKind::kValidation, path.string() + ": " + e.what());
  }
  return FromJson(j);
}

void VocabSelection::Validate() const {
  if (keep_ids.empty()) Fail(ErrorKind::kValidation, "selection keeps no ids");
  for (std::size_t i = 0; i < keep_ids.size(); ++i) {
    if (keep_ids[i] < 0 || static_cast<std::size_t>(keep_ids[i]) >= vocab_size) {
      Fail(ErrorKind::kValidation, "selection id out of range");
    }
    if (i > 0 && keep_ids[i - 1] >= keep_ids[i]) {
      Fail(ErrorKind::kValidation, "selection ids must be ascending and unique");
    }
  }
  for (const auto& [g, c] : achieved_coverage) {
    if (!(c >= 0.0 && c <= 1.0)) {
      Fail(ErrorKind::kValidation, "coverage for group '" + g + "' outside [0, 1]");
    }
  }
}

std::vector<PieceId> OriginalTopN(const UnigramModel& model, std::size_t n) {
  const auto& normal = model.normal_ids();
  return {normal.begin(),
          normal.begin() + static_cast<std::ptrdiff_t>(std::min(n, normal.size()))};
}

std::vector<PieceId> OriginalTopN(const FreqTable& freq,
                                  const UnigramModel& model, std::size_t n) {
  CheckModelMatch(freq, model);
  std::vector<PieceId> out;
  for (PieceId id : RankByCount(freq)) {
    if (out.size() == n) break;
    if (!model.IsSpecial(id)) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

VocabSelection MergeSelections(const std::vector<std::vector<PieceId>>& groups,
                               std::span<const PieceId> original_topn_ids,
                               const UnigramModel& model, Recipe recipe) {
  std::set<PieceId> keep;
  for (const auto& g : groups) keep.insert(g.begin(), g.end());
  keep.insert(original_topn_ids.begin(), original_topn_ids.end());
  if (keep.empty()) Fail(ErrorKind::kUsage, "merged selection is empty");
  for (PieceId id : keep) {
    if (id < 0 || static_cast<std::size_t>(id) >= model.size()) {
      Fail(ErrorKind::kUsage, "piece id " + std::to_string(id) + " out of range");
    }
  }
  for (PieceId id : model.special().All()) keep.insert(id);

  VocabSelection s;
  s.keep_ids.assign(keep.begin(), keep.end());
  s.recipe = std::move(recipe);
  s.tokenizer_fingerprint = model.fingerprint();
  s.vocab_size = model.size();
  return s;
}

VocabSelection SelectStrategy(const std::map<std::string, FreqTable>& tables,
                              const Recipe& recipe, const UnigramModel& model,
                              std::optional<std::vector<PieceId>> original_topn_ids) {
  if (tables.empty()) Fail(ErrorKind::kUsage, "no frequency tables given");
  for (const auto& [group, table] : tables) CheckModelMatch(table, model);

  Recipe r = recipe;
  std::vector<PieceId> topn;
  if (original_topn_ids.has_value()) {
    topn = *original_topn_ids;
    r.original_topn_basis = "frequency-file";
  } else {
    topn = OriginalTopN(model, recipe.original_topn);
    r.original_topn_basis = "id-order";
  }

  std::vector<std::vector<PieceId>> sets;
  if (recipe.strategy == Strategy::kPooled) {
    FreqTable pooled = FreqTable::Empty(model, "pooled");
    for (const auto& [group, table] : tables) {
      for (std::size_t i = 0; i < pooled.counts.size(); ++i) {
        pooled.counts[i] += table.counts[i];
      }
      pooled.total += table.total;
    }
    sets.push_back(SelectTopK(pooled, recipe.pooled_k));
    r.k_per_group.clear();
  } else {
    for (const auto& [group, table] : tables) {
      const auto it = recipe.k_per_group.find(group);
      if (it == recipe.k_per_group.end()) {
        Fail(ErrorKind::kUsage, "no k given for group '" + group + "'");
      }
      sets.push_back(SelectTopK(table, it->second));
    }
    r.pooled_k = 0;
  }

  VocabSelection s = MergeSelections(sets, topn, model, std::move(r));
  for (const auto& [group, table] : tables) {
    s.achieved_coverage[group] = Coverage(table, s.keep_ids);
  }
  return s;
}

}  // namespace maftprep::vocab
