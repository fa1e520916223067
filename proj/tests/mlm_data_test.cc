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

#include "maftprep/mlm_data.h"

#include <gtest/gtest.h>

#include <numeric>

#include "maftprep/corpus.h"
#include "maftprep/error.h"
#include "maftprep/io.h"
#include "testing/oracles.h"

namespace maftprep::mlm {
namespace {

using tokenizer::PieceKind;
using tokenizer::UnigramModel;

UnigramModel LetterModel() {
  auto pieces = testing::SpecialPieces();
  pieces.push_back({"▁", -2.0, PieceKind::kNormal});
  for (char c = 'a'; c <= 'z'; ++c) pieces.push_back({std::string(1, c), -3.0, PieceKind::kNormal});
  return UnigramModel(std::move(pieces), tokenizer::SpecialIds{});
}

std::vector<PieceId> Range(PieceId from, std::size_t n) {
  std::vector<PieceId> v(n);
  std::iota(v.begin(), v.end(), from);
  return v;
}

TEST(ChunkTokens, PacksWithBosAndEos) {
  const auto chunks = ChunkTokens(Range(10, 10), 6, 1, 2, 3);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0], (std::vector<PieceId>{1, 10, 11, 12, 13, 2}));
  EXPECT_EQ(chunks[1], (std::vector<PieceId>{1, 14, 15, 16, 17, 2}));
  EXPECT_EQ(chunks[2], (std::vector<PieceId>{1, 18, 19, 2}));
}

TEST(ChunkTokens, ShortTailIsDropped) {
  const auto chunks = ChunkTokens(Range(10, 10), 6, 1, 2);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[1].back(), 2);
}

TEST(ChunkTokens, EmptyAndShortStreams) {
  EXPECT_TRUE(ChunkTokens({}, 16, 1, 2).empty());
  const auto one = ChunkTokens(Range(10, 3), 16, 1, 2);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], (std::vector<PieceId>{1, 10, 11, 12, 2}));
  EXPECT_THROW(ChunkTokens(Range(10, 3), 2, 1, 2), Error);
}

TEST(AdaptConfig, DefaultsAndPresets) {
  const AdaptConfig d;
  EXPECT_EQ(d.epochs, 3);
  EXPECT_DOUBLE_EQ(d.learning_rate, 5e-5);
  EXPECT_EQ(d.batch_size, 10);
  EXPECT_EQ(AdaptConfig::Preset("maft-afriberta").batch_size, 32);
  const auto ner = AdaptConfig::Preset("ner");
  EXPECT_EQ(ner.epochs, 50);
  EXPECT_EQ(ner.max_seq_len, 164);
  EXPECT_EQ(AdaptConfig::Preset("topic").epochs, 25);
  EXPECT_EQ(AdaptConfig::Preset("topic").max_seq_len, 500);
  EXPECT_EQ(AdaptConfig::Preset("sentiment").epochs, 20);
  EXPECT_EQ(AdaptConfig::Preset("sentiment").max_seq_len, 128);
  EXPECT_DOUBLE_EQ(AdaptConfig::Preset("sentiment-xlmr").learning_rate, 2e-5);
  EXPECT_THROW(AdaptConfig::Preset("bogus"), Error);
}

TEST(AdaptConfig, JsonRoundTripAndValidation) {
  AdaptConfig c = AdaptConfig::Preset("ner");
  c.gradient_accumulation = 4;
  const AdaptConfig back = AdaptConfig::FromJson(nlohmann::json::parse(c.ToJson().dump()));
  EXPECT_EQ(back.ToJson(), c.ToJson());
  EXPECT_THROW(AdaptConfig::FromJson({{"mask_split", {0.5, 0.5, 0.5}}}), Error);
  EXPECT_THROW(AdaptConfig::FromJson({{"max_seq_len", 4}}), Error);
  EXPECT_THROW(AdaptConfig::FromJson({{"epochs", "three"}}), Error);
}

std::vector<std::vector<PieceId>> RandomChunks(const UnigramModel& m, std::size_t rows,
                                               std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, m.normal_ids().size() - 1);
  std::vector<std::vector<PieceId>> out;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<PieceId> body;
    for (std::size_t i = 0; i < len - r % 5; ++i) body.push_back(m.normal_ids()[pick(rng)]);
    auto c = ChunkTokens(body, len + 2, m.special().bos, m.special().eos);
    out.push_back(c.front());
  }
  return out;
}

TEST(MaskBatch, ZeroRateLeavesInputUnchanged) {
  const auto m = LetterModel();
  AdaptConfig c;
  c.mask_rate = 0.0;
  const auto chunks = RandomChunks(m, 10, 20, 1);
  const auto b = MaskBatch(chunks, c, m, 5);
  for (std::size_t r = 0; r < chunks.size(); ++r) {
    for (std::size_t p = 0; p < b.seq; ++p) {
      const std::size_t at = r * b.seq + p;
      EXPECT_EQ(b.labels[at], kIgnoreLabel);
      if (p < chunks[r].size()) {
        EXPECT_EQ(b.input_ids[at], chunks[r][p]);
        EXPECT_EQ(b.attention_mask[at], 1);
      } else {
        EXPECT_EQ(b.input_ids[at], m.special().pad);
        EXPECT_EQ(b.attention_mask[at], 0);
      }
    }
  }
}

TEST(MaskBatch, LabelsAndReplacementsAreConsistent) {
  const auto m = LetterModel();
  const auto chunks = RandomChunks(m, 200, 60, 2);
  const auto b = MaskBatch(chunks, AdaptConfig{}, m, 17, 3);
  std::uint64_t selected = 0;
  for (std::size_t r = 0; r < chunks.size(); ++r) {
    for (std::size_t p = 0; p < chunks[r].size(); ++p) {
      const std::size_t at = r * b.seq + p;
      if (b.labels[at] == kIgnoreLabel) {
        EXPECT_EQ(b.input_ids[at], chunks[r][p]);
        continue;
      }
      ++selected;
      EXPECT_EQ(b.labels[at], chunks[r][p]);
      EXPECT_FALSE(m.IsSpecial(chunks[r][p]));
      const PieceId in = b.input_ids[at];
      EXPECT_TRUE(in == m.special().mask || !m.IsSpecial(in));
    }
  }
  EXPECT_EQ(selected, b.stats.selected);
  EXPECT_EQ(b.stats.masked + b.stats.randomized + b.stats.kept, b.stats.selected);
  EXPECT_EQ(b.stats.special_selected, 0u);
}

TEST(MaskBatch, DeterministicAcrossThreadCounts) {
  const auto m = LetterModel();
  const auto chunks = RandomChunks(m, 64, 40, 3);
  const auto a = MaskBatch(chunks, AdaptConfig{}, m, 99, 1);
  const auto b = MaskBatch(chunks, AdaptConfig{}, m, 99, 4);
  const auto c = MaskBatch(chunks, AdaptConfig{}, m, 100, 1);
  EXPECT_EQ(a.input_ids, b.input_ids);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.labels, c.labels);
}

TEST(MaskBatch, ShardedRunsMatchOneRun) {
  const auto m = LetterModel();
  const auto chunks = RandomChunks(m, 20, 30, 4);
  const auto whole = MaskBatch(chunks, AdaptConfig{}, m, 8);
  const std::span<const std::vector<PieceId>> all(chunks);
  const auto tail = MaskBatch(all.subspan(10), AdaptConfig{}, m, 8, 1, 10);
  for (std::size_t r = 10; r < 20; ++r) {
    for (std::size_t p = 0; p < chunks[r].size(); ++p) {
      EXPECT_EQ(whole.labels[r * whole.seq + p], tail.labels[(r - 10) * tail.seq + p]);
    }
  }
}

TEST(MaskedBatch, TensorRoundTrip) {
  const auto m = LetterModel();
  const auto b = MaskBatch(RandomChunks(m, 4, 10, 5), AdaptConfig{}, m, 1);
  const auto back = MaskedBatch::FromTensors(b.ToTensors());
  EXPECT_EQ(back.input_ids, b.input_ids);
  EXPECT_EQ(back.labels, b.labels);
  EXPECT_EQ(back.attention_mask, b.attention_mask);
  EXPECT_EQ(back.seq, b.seq);
}

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testing::TempDir("mlm_manifest");
    io::WriteFileAtomic(dir_ / "en.txt", "the cat sat on the mat now\n");
    io::WriteFileAtomic(dir_ / "yo.txt", "mo fe lati ka iwe ni gbogbo\n");
    const corpus::GroupMap groups{{"eng", "latin"}, {"yor", "latin"}};
    corpus::CleanShards({{"eng", dir_ / "en.txt"}, {"yor", dir_ / "yo.txt"}}, groups,
                        dir_ / "c", 6, 1)
        .Save(dir_ / "c" / "corpus_manifest.json");
    corpus::CleanShards({{"eng", dir_ / "en.txt"}}, groups, dir_ / "one", 6, 1)
        .Save(dir_ / "one" / "corpus_manifest.json");
    LetterModel().Save(dir_ / "tok.json");
    io::WriteFileAtomic(dir_ / "ckpt.bin", "x");
  }
  ManifestInputs Inputs(const char* corpus) const {
    ManifestInputs in;
    in.corpus_manifest = dir_ / corpus / "corpus_manifest.json";
    in.tokenizer = dir_ / "tok.json";
    in.checkpoint = dir_ / "ckpt.bin";
    return in;
  }
  std::filesystem::path dir_;
};

TEST_F(ManifestTest, DefaultsAreRecorded) {
  const auto m = BuildManifest(AdaptConfig{}, Inputs("c"));
  EXPECT_EQ(m["schema"], "maftprep-adapt-manifest/1");
  EXPECT_EQ(m["config"]["epochs"], 3);
  EXPECT_DOUBLE_EQ(m["config"]["learning_rate"].get<double>(), 5e-5);
  EXPECT_EQ(m["languages"].size(), 2u);
  EXPECT_EQ(m["corpus"]["shards"].size(), 2u);
  EXPECT_EQ(m["tokenizer"]["fingerprint"], io::FingerprintFile(dir_ / "tok.json"));
  const auto ner = BuildManifest(AdaptConfig::Preset("ner"), Inputs("c"));
  EXPECT_EQ(ner["config"]["epochs"], 50);
  EXPECT_EQ(ner["config"]["max_seq_len"], 164);
}

TEST_F(ManifestTest, MissingCheckpointIsAnError) {
  auto in = Inputs("c");
  in.checkpoint = dir_ / "nope.bin";
  EXPECT_THROW(BuildManifest(AdaptConfig{}, in), Error);
}

TEST_F(ManifestTest, ModeLanguageRules) {
  auto laft = Inputs("c");
  laft.mode = "laft";
  EXPECT_THROW(BuildManifest(AdaptConfig{}, laft), Error);
  laft.corpus_manifest = dir_ / "one" / "corpus_manifest.json";
  EXPECT_NO_THROW(BuildManifest(AdaptConfig{}, laft));
  EXPECT_THROW(BuildManifest(AdaptConfig{}, Inputs("one")), Error);
}

}  // namespace
}  // namespace maftprep::mlm
