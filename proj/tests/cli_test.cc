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

#include "cli.h"

#include <gtest/gtest.h>

#include "maftprep/io.h"
#include "maftprep/vocab_select.h"
#include "testing/fixture.h"

namespace maftprep::cli {
namespace {

namespace fs = std::filesystem;

int Call(std::vector<std::string> args) {
  args.insert(args.begin(), "maftprep");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return Run(static_cast<int>(argv.size()), argv.data());
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testing::TempDir("cli");
    fixture_ = testing::WriteFixture(dir_ / "fx");
    out_ = (dir_ / "out").string();
  }
  fs::path dir_;
  testing::Fixture fixture_;
  std::string out_;
};

TEST_F(CliTest, CleanWritesShardsAndStats) {
  ::testing::internal::CaptureStdout();
  const int rc = Call({"--out-dir", out_, "clean", "--min-tokens", "6", "--input",
                       "hau=" + fixture_.latin.string(), "--groups", fixture_.groups.string()});
  const std::string stdout_text = ::testing::internal::GetCapturedStdout();
  ASSERT_EQ(rc, kExitOk);
  const auto stats = nlohmann::json::parse(stdout_text);
  EXPECT_GT(stats["lines_in"].get<int>(), stats["lines_kept"].get<int>());
  EXPECT_TRUE(fs::exists(dir_ / "out" / "corpus_manifest.json"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "hau.hau.txt"));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Call({}), kExitUsage);
  EXPECT_EQ(Call({"frobnicate"}), kExitUsage);
  EXPECT_EQ(Call({"clean", "--input", "hau=x"}), kExitUsage);
  EXPECT_EQ(Call({"--out-dir", out_, "clean", "--input", "nolang", "--groups",
                  fixture_.groups.string()}),
            kExitUsage);
  io::WriteFileAtomic(dir_ / "labels.tsv", "A\tx\n");
  EXPECT_EQ(Call({"--out-dir", out_, "split", "--input", (dir_ / "labels.tsv").string()}),
            kExitUsage);
}

TEST_F(CliTest, ValidationAndIoErrors) {
  io::WriteFileAtomic(dir_ / "bad.json", "{not json");
  fs::create_directories(out_);
  const std::string manifest = (dir_ / "m.json").string();
  ASSERT_EQ(Call({"--out-dir", out_, "clean", "--input", "hau=" + fixture_.latin.string(),
                  "--groups", fixture_.groups.string(), "--manifest", manifest}),
            kExitOk);
  EXPECT_EQ(Call({"--out-dir", out_, "count", "--manifest", manifest, "--tokenizer",
                  (dir_ / "bad.json").string()}),
            kExitValidation);
  EXPECT_EQ(Call({"--out-dir", out_, "clean", "--input",
                  "hau=" + (dir_ / "missing.txt").string(), "--groups",
                  fixture_.groups.string()}),
            kExitIo);
  io::WriteFileAtomic(dir_ / "bin.txt", "fine line here\n\xff\xfe\n");
  EXPECT_EQ(Call({"--out-dir", out_, "clean", "--input", "hau=" + (dir_ / "bin.txt").string(),
                  "--groups", fixture_.groups.string()}),
            kExitValidation);
}

TEST_F(CliTest, MismatchedSelectionIsRejected) {
  const auto other = testing::TempDir("cli_other");
  const auto model = tokenizer::UnigramModel::Load(fixture_.tokenizer);
  auto pieces = model.pieces();
  pieces.push_back({"▁extra", -1.0, tokenizer::PieceKind::kNormal});
  tokenizer::UnigramModel(pieces, model.special()).Save(other / "tok.json");
  const auto bigger = tokenizer::UnigramModel::Load(other / "tok.json");
  vocab::MergeSelections({{5, 6}}, {}, bigger, vocab::Recipe{}).Save(other / "sel.json");
  EXPECT_EQ(Call({"--out-dir", out_, "prune-tokenizer", "--tokenizer",
                  fixture_.tokenizer.string(), "--selection", (other / "sel.json").string()}),
            kExitMismatch);
  EXPECT_EQ(Call({"--out-dir", out_, "prune-model", "--checkpoint",
                  fixture_.checkpoint.string(), "--selection", (other / "sel.json").string()}),
            kExitMismatch);
}

TEST_F(CliTest, ConfigFileSuppliesOptionsAndFlagsWin) {
  fs::create_directories(out_);
  const std::string config = (dir_ / "cfg.json").string();
  nlohmann::json c = {{"out-dir", out_},
                      {"clean", {{"min-tokens", 100}, {"groups", fixture_.groups.string()}}}};
  io::WriteFileAtomic(config, c.dump());
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(Call({"--config", config, "clean", "--input", "hau=" + fixture_.latin.string()}),
            kExitOk);
  auto stats = nlohmann::json::parse(::testing::internal::GetCapturedStdout());
  EXPECT_EQ(stats["lines_kept"], 0);
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(Call({"--config", config, "clean", "--min-tokens", "6", "--input",
                  "hau=" + fixture_.latin.string()}),
            kExitOk);
  stats = nlohmann::json::parse(::testing::internal::GetCapturedStdout());
  EXPECT_GT(stats["lines_kept"].get<int>(), 0);
}

TEST_F(CliTest, SplitWritesThreeFiles) {
  std::string tsv;
  for (int i = 0; i < 300; ++i) tsv += std::string(i % 3 == 0 ? "A" : "B") + "\ttext " + std::to_string(i) + "\n";
  tsv += "A,B\tambiguous\n";
  io::WriteFileAtomic(dir_ / "labels.tsv", tsv);
  fs::create_directories(out_);
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(Call({"--out-dir", out_, "split", "--input", (dir_ / "labels.tsv").string(),
                  "--seed", "3", "--min-class-size", "50"}),
            kExitOk);
  const auto summary = nlohmann::json::parse(::testing::internal::GetCapturedStdout());
  EXPECT_EQ(summary["dropped_multilabel"], 1);
  EXPECT_EQ(summary["train"], 210);
  EXPECT_EQ(summary["dev"], 30);
  EXPECT_EQ(summary["test"], 60);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "dev.tsv"));
}

TEST_F(CliTest, ReportsToStdoutAndFiles) {
  fs::create_directories(out_);
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(Call({"--out-dir", out_, "report-unk", "--tokenizer",
                  "base=" + fixture_.tokenizer.string(), "--dataset",
                  "amh=" + fixture_.geez.string()}),
            kExitOk);
  const std::string table = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(table.find("amh #UNK"), std::string::npos);
  EXPECT_EQ(io::ReadFile(dir_ / "out" / "unk_report.txt"), table);
}

}  // namespace
}  // namespace maftprep::cli
