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

#ifndef MAFTPREP_REPORT_H_
#define MAFTPREP_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "maftprep/surgery.h"
#include "maftprep/tokenizer.h"
#include "maftprep/vocab_select.h"

namespace maftprep::report {

struct NamedTokenizer {
  std::string name;
  const tokenizer::UnigramModel* model = nullptr;
};

struct NamedDataset {
  std::string name;
  std::filesystem::path path;
};

struct UnkRow {
  std::string tokenizer_name;
  std::string dataset_name;
  std::uint64_t unk_count = 0;
  std::uint64_t total_tokens = 0;
  double unk_rate = 0.0;
  std::optional<std::string> error;  // set when the dataset was unreadable
};

struct UnkReport {
  std::vector<UnkRow> rows;  // tokenizer-major, in argument order
  // "tokenizer:<name>" / "dataset:<name>" -> SHA-256
  std::map<std::string, std::string> generated_from;

  nlohmann::ordered_json ToJson() const;
  // Tokenizers as rows, datasets as #UNK columns.
  std::string RenderText() const;
};

// One row per (tokenizer, dataset) via CountUnks. A dataset that cannot be
// read yields error rows instead of failing the report.
UnkReport MakeUnkReport(std::span<const NamedTokenizer> tokenizers,
                        std::span<const NamedDataset> datasets,
                        tokenizer::UnkMode mode = tokenizer::UnkMode::kMergeRuns,
                        unsigned threads = 1);

struct TargetK {
  double target = 0.0;
  std::size_t k = 0;
  bool shortfall = false;
};

struct GroupCoverage {
  std::string group;
  std::uint64_t total = 0;
  double achieved = 0.0;
  std::vector<TargetK> targets;
};

struct CoverageReport {
  std::string tokenizer_fingerprint;
  std::size_t keep_count = 0;
  std::vector<GroupCoverage> groups;

  nlohmann::ordered_json ToJson() const;
  std::string RenderText() const;
};

CoverageReport MakeCoverageReport(
    const vocab::VocabSelection& selection,
    const std::map<std::string, vocab::FreqTable>& tables,
    std::span<const double> targets);

std::string RenderSizeText(const surgery::SizeReport& size);

// Writes `<stem>.json` ({"header": {...timestamp...}, "report": content}) and
// `<stem>.txt`. Only the header varies between identical runs.
void WriteReport(const std::filesystem::path& stem,
                 const nlohmann::ordered_json& content, const std::string& text);

}  // namespace maftprep::report

#endif  // MAFTPREP_REPORT_H_
