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

#include "maftprep/corpus.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "maftprep/error.h"
#include "maftprep/io.h"
#include "maftprep/random.h"
#include "maftprep/utf8.h"

namespace maftprep::corpus {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::vector<std::string> kFilterNames = {"no_letters", "min_tokens"};

}  // namespace

bool CleanLine(std::string_view line, int min_tokens,
               std::uint64_t base_offset) {
  if (min_tokens < 1) Fail(ErrorKind::kUsage, "min_tokens must be >= 1");
  const std::u32string cps = utf8::Decode(line, base_offset);
  if (std::none_of(cps.begin(), cps.end(), utf8::IsLetter)) return false;
  return utf8::CountWhitespaceTokens(cps) >=
         static_cast<std::size_t>(min_tokens);
}

CleanStats& CleanStats::operator+=(const CleanStats& other) {
  lines_in += other.lines_in;
  lines_kept += other.lines_kept;
  bytes_kept += other.bytes_kept;
  return *this;
}

CleanStats PreprocessCorpus(std::istream& in, std::ostream& out,
                            int min_tokens) {
  CleanStats stats;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    const std::uint64_t consumed = line.size() + (in.eof() ? 0 : 1);
    std::string_view view = line;
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    ++stats.lines_in;
    if (CleanLine(view, min_tokens, offset)) {
      out.write(view.data(), static_cast<std::streamsize>(view.size()));
      out.put('\n');
      ++stats.lines_kept;
      stats.bytes_kept += view.size() + 1;
    }
    offset += consumed;
  }
  if (in.bad()) {
    Fail(ErrorKind::kIo, "read failed at byte offset " + std::to_string(offset));
  }
  if (!out) Fail(ErrorKind::kIo, "write failed");
  return stats;
}

CleanStats PreprocessFile(const fs::path& input, const fs::path& output,
                          int min_tokens) {
  std::ifstream in(input, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + input.string());
  std::ostringstream out;
  CleanStats stats;
  try {
    stats = PreprocessCorpus(in, out, min_tokens);
  } catch (const Error& e) {
    throw Error(e.kind(), input.string() + ": " + e.what());
  }
  io::WriteFileAtomic(output, out.view());
  return stats;
}

GroupMap LoadGroupMap(const fs::path& path) {
  GroupMap groups;
  try {
    const json j = json::parse(io::ReadFile(path));
    for (const auto& [language, group] : j.items()) {
      groups[language] = group.get<std::string>();
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kValidation, path.string() + ": " + e.what());
  }
  return groups;
}

ordered_json CorpusManifest::ToJson() const {
  ordered_json j;
  j["shards"] = ordered_json::array();
  for (const auto& s : shards) {
    ordered_json e;
    e["path"] = s.path;
    e["language"] = s.language;
    e["group"] = s.group;
    e["line_count"] = s.line_count;
    e["byte_count"] = s.byte_count;
    j["shards"].push_back(std::move(e));
  }
  j["preprocessing"] = {{"min_tokens", min_tokens},
                        {"filters_applied", filters_applied}};
  j["created_at"] = created_at;
  return j;
}

CorpusManifest CorpusManifest::FromJson(const json& j) {
  CorpusManifest m;
  try {
    for (const auto& e : j.at("shards")) {
      ShardEntry s;
      s.path = e.at("path").get<std::string>();
      s.language = e.at("language").get<std::string>();
      s.group = e.at("group").get<std::string>();
      s.line_count = e.at("line_count").get<std::uint64_t>();
      s.byte_count = e.at("byte_count").get<std::uint64_t>();
      m.shards.push_back(std::move(s));
    }
    const auto& pre = j.at("preprocessing");
    m.min_tokens = pre.at("min_tokens").get<int>();
    m.filters_applied = pre.at("filters_applied").get<std::vector<std::string>>();
    m.created_at = j.value("created_at", "");
  } catch (const json::exception& e) {
    Fail(ErrorKind::kValidation, std::string("corpus manifest: ") + e.what());
  }
  m.Validate();
  return m;
}

void CorpusManifest::Save(const fs::path& path) const {
  Validate();
  io::WriteFileAtomic(path, ToJson().dump(2) + "\n");
}

CorpusManifest CorpusManifest::Load(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::ReadFile(path));
  } catch (const json::exception& e) {
    Fail(ErrorKind::kValidation, path.string() + ": " + e.what());
  }
  return FromJson(j);
}

void CorpusManifest::Validate(const fs::path& base_dir) const {
  if (min_tokens < 1) {
    Fail(ErrorKind::kValidation, "corpus manifest: min_tokens must be >= 1");
  }
  std::set<std::string> paths;
  for (const auto& s : shards) {
    if (s.path.empty() || s.language.empty() || s.group.empty()) {
      Fail(ErrorKind::kValidation,
           "corpus manifest: shard entries need path, language and group");
    }
    if (!paths.insert(s.path).second) {
      Fail(ErrorKind::kValidation,
           "corpus manifest: duplicate shard path " + s.path);
    }
    if (base_dir.empty()) continue;
    const fs::path file = base_dir / s.path;
    std::uint64_t lines = 0;
    io::ForEachLine(file, [&](std::string_view, std::uint64_t) { ++lines; });
    const auto bytes = fs::file_size(file);
    if (lines != s.line_count || bytes != s.byte_count) {
      Fail(ErrorKind::kValidation,
           "corpus manifest: " + s.path + " has " + std::to_string(lines) +
               " lines / " + std::to_string(bytes) + " bytes, manifest says " +
               std::to_string(s.line_count) + " / " +
               std::to_string(s.byte_count));
    }
  }
}

std::set<std::string> CorpusManifest::Groups() const {
  std::set<std::string> groups;
  for (const auto& s : shards) groups.insert(s.group);
  return groups;
}

std::vector<fs::path> CorpusManifest::ShardPaths(const fs::path& base_dir,
                                                 std::string_view group) const {
  std::vector<fs::path> out;
  for (const auto& s : shards) {
    if (s.group == group) out.push_back(base_dir / s.path);
  }
  return out;
}

CorpusManifest CleanShards(const std::vector<ShardInput>& inputs,
                           const GroupMap& groups, const fs::path& out_dir,
                           int min_tokens, unsigned threads,
                           CleanStats* total) {
  CorpusManifest manifest;
  manifest.min_tokens = min_tokens;
  manifest.filters_applied = kFilterNames;
  manifest.created_at = io::Timestamp();
  manifest.shards.resize(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto it = groups.find(inputs[i].language);
    if (it == groups.end()) {
      Fail(ErrorKind::kValidation,
           "language '" + inputs[i].language + "' has no script group");
    }
    auto& shard = manifest.shards[i];
    shard.language = inputs[i].language;
    shard.group = it->second;
    shard.path = inputs[i].language + "." + inputs[i].path.filename().string();
  }

  std::vector<CleanStats> stats(inputs.size());
  io::ParallelFor(inputs.size(), threads, [&](std::size_t i) {
    stats[i] = PreprocessFile(inputs[i].path, out_dir / manifest.shards[i].path,
                              min_tokens);
  });

  CleanStats merged;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    manifest.shards[i].line_count = stats[i].lines_kept;
    manifest.shards[i].byte_count = stats[i].bytes_kept;
    merged += stats[i];
  }
  manifest.Validate();
  if (total != nullptr) *total = merged;
  return manifest;
}

std::vector<LabeledExample> FilterMultilabel(
    const std::vector<CandidateExample>& examples) {
  std::vector<LabeledExample> out;
  for (const auto& e : examples) {
    if (e.labels.size() == 1) out.push_back({e.text, *e.labels.begin()});
  }
  return out;
}

ClassFilterResult EnforceMinClassSize(
    const std::vector<LabeledExample>& examples, std::size_t min_size) {
  if (min_size < 1) Fail(ErrorKind::kUsage, "min_size must be >= 1");
  std::map<std::string, std::size_t> sizes;
  for (const auto& e : examples) ++sizes[e.label];
  ClassFilterResult result;
  for (const auto& [label, n] : sizes) {
    if (n < min_size) result.dropped_classes.insert(label);
  }
  for (const auto& e : examples) {
    if (!result.dropped_classes.contains(e.label)) result.examples.push_back(e);
  }
  return result;
}

std::vector<std::size_t> AllocateSplitCounts(std::size_t class_size,
                                             const SplitRatios& ratios) {
  const double r[3] = {ratios.train, ratios.dev, ratios.test};
  std::vector<std::size_t> counts(3);
  double remainders[3];
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double quota = r[s] * static_cast<double>(class_size);
    // Absorb representation error so that e.g. 0.7 * 100 floors to 70.
    const double whole = std::floor(quota + 1e-9);
    counts[s] = static_cast<std::size_t>(whole);
    remainders[s] = std::max(0.0, quota - whole);
    assigned += counts[s];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t i = 0; assigned < class_size; ++i, ++assigned) {
    ++counts[order[i % 3]];
  }
  return counts;
}

SplitResult StratifiedSplit(const std::vector<LabeledExample>& examples,
                            const SplitRatios& ratios, std::uint64_t seed) {
  const double r[3] = {ratios.train, ratios.dev, ratios.test};
  for (double v : r) {
    if (!(v > 0.0)) Fail(ErrorKind::kUsage, "split ratios must be positive");
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) {
    Fail(ErrorKind::kUsage, "split ratios must sum to 1");
  }

  // Input indices per class; std::map gives a stable class order.
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    by_class[examples[i].label].push_back(i);
  }

  std::vector<int> assignment(examples.size(), -1);
  for (auto& [label, members] : by_class) {
    if (members.size() < 3) {
      Fail(ErrorKind::kUsage, "class '" + label + "' has " +
                                  std::to_string(members.size()) +
                                  " examples, fewer than the 3 split parts");
    }
    // Each class gets its own stream so adding a class does not perturb the
    // others.
    const std::uint64_t label_key =
        std::stoull(io::Sha256Hex(label).substr(0, 16), nullptr, 16);
    random::Shuffle(std::span(members), random::Mix64(seed ^ label_key));
    const auto counts = AllocateSplitCounts(members.size(), ratios);
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t k = 0; k < counts[s]; ++k) assignment[members[pos++]] = s;
    }
  }

  SplitResult result;
  std::vector<LabeledExample>* outputs[3] = {&result.train, &result.dev,
                                             &result.test};
  for (std::size_t i = 0; i < examples.size(); ++i) {
    outputs[assignment[i]]->push_back(examples[i]);
  }
  return result;
}

std::vector<CandidateExample> ReadCandidateTsv(const fs::path& path) {
  std::vector<CandidateExample> out;
  io::ForEachLine(path, [&](std::string_view line, std::uint64_t offset) {
    if (line.empty()) return;
    utf8::Validate(line, offset);
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      Fail(ErrorKind::kValidation, path.string() + ": missing TAB at byte offset " +
                                       std::to_string(offset));
    }
    CandidateExample e;
    e.text = std::string(line.substr(tab + 1));
    std::string_view labels = line.substr(0, tab);
    while (!labels.empty()) {
      const auto comma = labels.find(',');
      const auto label = labels.substr(0, comma);
      if (!label.empty()) e.labels.emplace(label);
      if (comma == std::string_view::npos) break;
      labels.remove_prefix(comma + 1);
    }
    if (e.labels.empty() || e.text.empty()) {
      Fail(ErrorKind::kValidation, path.string() + ": empty label or text at byte offset " +
                                       std::to_string(offset));
    }
    out.push_back(std::move(e));
  });
  return out;
}

void WriteLabeledTsv(const fs::path& path,
                     const std::vector<LabeledExample>& examples) {
  std::string data;
  for (const auto& e : examples) {
    data += e.label;
    data += '\t';
    data += e.text;
    data += '\n';
  }
  io::WriteFileAtomic(path, data);
}

}  // namespace maftprep::corpus
