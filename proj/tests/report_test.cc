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

#include "maftprep/report.h"

#include <gtest/gtest.h>

#include "maftprep/error.h"
#include "maftprep/io.h"
#include "testing/oracles.h"

namespace maftprep::report {
namespace {

using tokenizer::PieceKind;
using tokenizer::UnigramModel;

UnigramModel Model(const std::vector<std::string>& normal) {
  auto pieces = testing::SpecialPieces();
  for (const auto& p : normal) pieces.push_back({p, -1.0, PieceKind::kNormal});
  return UnigramModel(std::move(pieces), tokenizer::SpecialIds{});
}

TEST(UnkReport, PrunedTokenizerHasMoreUnks) {
  const auto dir = testing::TempDir("report_unk");
  io::WriteFileAtomic(dir / "minor.txt", "ሰላም ላም\nab ሰ\n");
  io::WriteFileAtomic(dir / "major.txt", "ab ba ab\n");
  const auto full = Model({"▁", "a", "b", "ሰ", "ላ", "ም"});
  const auto pruned = tokenizer::Prune(full, std::vector<tokenizer::PieceId>{5, 6, 7}).model;
  const std::vector<NamedTokenizer> toks = {{"full", &full}, {"pruned", &pruned}, {"again", &full}};
  const std::vector<NamedDataset> data = {{"minor", dir / "minor.txt"}, {"major", dir / "major.txt"}};
  const auto r = MakeUnkReport(toks, data, tokenizer::UnkMode::kMergeRuns, 2);
  ASSERT_EQ(r.rows.size(), 6u);
  EXPECT_EQ(r.rows[0].unk_count, 0u);
  EXPECT_EQ(r.rows[2].unk_count, 3u);
  EXPECT_EQ(r.rows[3].unk_count, 0u);
  EXPECT_EQ(r.rows[4].unk_count, r.rows[0].unk_count);
  EXPECT_EQ(r.rows[4].total_tokens, r.rows[0].total_tokens);
  EXPECT_EQ(r.generated_from.at("dataset:minor"), io::FingerprintFile(dir / "minor.txt"));
  const std::string text = r.RenderText();
  EXPECT_NE(text.find("minor #UNK"), std::string::npos);
  EXPECT_NE(text.find("pruned"), std::string::npos);
}

TEST(UnkReport, UnreadableDatasetMarksRowsOnly) {
  const auto dir = testing::TempDir("report_missing");
  io::WriteFileAtomic(dir / "ok.txt", "ab\n");
  const auto m = Model({"▁", "a", "b"});
  const std::vector<NamedTokenizer> toks = {{"m", &m}};
  const std::vector<NamedDataset> data = {{"ok", dir / "ok.txt"}, {"gone", dir / "gone.txt"}};
  const auto r = MakeUnkReport(toks, data);
  EXPECT_FALSE(r.rows[0].error.has_value());
  EXPECT_TRUE(r.rows[1].error.has_value());
  EXPECT_TRUE(r.ToJson()["rows"][1].contains("error"));
}

TEST(CoverageReport, HandComputedPrefixSums) {
  const auto m = Model({"a", "b", "c", "d"});
  vocab::FreqTable g1 = vocab::FreqTable::Empty(m, "g1");
  g1.counts = {0, 0, 0, 0, 0, 6, 3, 1, 0};
  g1.total = 10;
  vocab::FreqTable g2 = vocab::FreqTable::Empty(m, "g2");
  g2.counts = {0, 0, 0, 0, 0, 0, 0, 2, 2};
  g2.total = 4;
  const auto sel = vocab::MergeSelections({{5, 6}}, {}, m, vocab::Recipe{});
  const std::vector<double> targets = {0.9, 0.996};
  const auto r = MakeCoverageReport(sel, {{"g1", g1}, {"g2", g2}}, targets);
  ASSERT_EQ(r.groups.size(), 2u);
  EXPECT_DOUBLE_EQ(r.groups[0].achieved, 0.9);
  EXPECT_DOUBLE_EQ(r.groups[1].achieved, 0.0);
  EXPECT_EQ(r.groups[0].targets[0].k, 2u);
  EXPECT_EQ(r.groups[0].targets[1].k, vocab::SelectForCoverage(g1, 0.996).k);
  EXPECT_EQ(r.groups[1].targets[1].k, 2u);
}

TEST(CoverageReport, FullVocabularyCoversEverything) {
  const auto m = Model({"a", "b"});
  vocab::FreqTable g = vocab::FreqTable::Empty(m, "g");
  g.counts = {0, 0, 0, 0, 0, 4, 1};
  g.total = 5;
  const auto sel = vocab::MergeSelections({{5, 6}}, {}, m, vocab::Recipe{});
  EXPECT_DOUBLE_EQ(MakeCoverageReport(sel, {{"g", g}}, {}).groups[0].achieved, 1.0);
  g.tokenizer_fingerprint = "other";
  EXPECT_THROW(MakeCoverageReport(sel, {{"g", g}}, {}), Error);
}

TEST(WriteReport, JsonHeaderAndText) {
  const auto dir = testing::TempDir("report_write");
  WriteReport(dir / "r", {{"x", 1}}, "table\n");
  const auto j = nlohmann::json::parse(io::ReadFile(dir / "r.json"));
  EXPECT_EQ(j["header"]["tool"], "maftprep");
  EXPECT_TRUE(j["header"].contains("generated_at"));
  EXPECT_EQ(j["report"]["x"], 1);
  EXPECT_EQ(io::ReadFile(dir / "r.txt"), "table\n");
}

}  // namespace
}  // namespace maftprep::report
