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

#include "maftprep/surgery.h"

#include <gtest/gtest.h>

#include <cstring>
#include <numeric>

#include "maftprep/error.h"
#include "maftprep/io.h"
#include "testing/oracles.h"

namespace maftprep::surgery {
namespace {

using container::Tensor;

Checkpoint FiveByTwo() {
  Checkpoint c;
  const std::vector<float> rows = {0, 1, 10, 11, 20, 21, 30, 31, 40, 41};
  c.Add(kDefaultEmbeddingTensor, Tensor::FromFloats({5, 2}, rows));
  c.metadata[kVocabSizeKey] = "5";
  c.metadata[kTiedKey] = "true";
  return c;
}

TEST(ParamCount, SingleTensor) { EXPECT_EQ(ParamCount(FiveByTwo()), 10u); }

TEST(ParamCount, TiedHeadCountedOnce) {
  Checkpoint c = FiveByTwo();
  c.Add("lm_head.weight", *c.Find(kDefaultEmbeddingTensor));
  c.metadata[kOutputHeadKey] = "lm_head.weight";
  EXPECT_EQ(ParamCount(c), 10u);
  c.metadata[kTiedKey] = "false";
  EXPECT_EQ(ParamCount(c), 20u);
}

TEST(PruneEmbeddings, KeepsSelectedRowsInOrder) {
  const Checkpoint c = FiveByTwo();
  const auto plan = MakePlan(ReadLayout(c), std::vector<std::int32_t>{4, 0, 3});
  const Checkpoint p = PruneEmbeddings(c, plan);
  const Tensor* e = p.Find(kDefaultEmbeddingTensor);
  EXPECT_EQ(e->shape, (std::vector<std::int64_t>{3, 2}));
  EXPECT_EQ(e->ToFloats(), (std::vector<float>{0, 1, 30, 31, 40, 41}));
  EXPECT_EQ(p.metadata.at(kVocabSizeKey), "3");
  EXPECT_EQ(plan.remap, (std::vector<std::int64_t>{0, -1, -1, 1, 2}));
}

TEST(PruneEmbeddings, KeepAllIsIdentity) {
  const Checkpoint c = testing::SmallCheckpoint(50, 8, 2, true);
  std::vector<std::int32_t> all(50);
  std::iota(all.begin(), all.end(), 0);
  const Checkpoint p = PruneEmbeddings(c, MakePlan(ReadLayout(c), all));
  ASSERT_EQ(p.tensors.size(), c.tensors.size());
  for (std::size_t i = 0; i < c.tensors.size(); ++i) {
    EXPECT_EQ(p.tensors[i].tensor, c.tensors[i].tensor);
  }
  EXPECT_EQ(p.metadata, c.metadata);
}

TEST(PruneEmbeddings, UntiedHeadAndBiasFollowEmbedding) {
  const Checkpoint c = testing::SmallCheckpoint(20, 4, 1, false);
  const std::vector<std::int32_t> keep = {2, 5, 19};
  const Checkpoint p = PruneEmbeddings(c, MakePlan(ReadLayout(c), keep));
  for (const char* name : {kDefaultEmbeddingTensor, "lm_head.weight"}) {
    const auto src = c.Find(name)->ToFloats();
    const auto dst = p.Find(name)->ToFloats();
    ASSERT_EQ(dst.size(), 12u);
    for (std::size_t r = 0; r < keep.size(); ++r) {
      for (std::size_t d = 0; d < 4; ++d) {
        EXPECT_EQ(dst[r * 4 + d], src[static_cast<std::size_t>(keep[r]) * 4 + d]);
      }
    }
  }
  const auto bias = c.Find("lm_head.bias")->ToFloats();
  EXPECT_EQ(p.Find("lm_head.bias")->ToFloats(),
            (std::vector<float>{bias[2], bias[5], bias[19]}));
  EXPECT_EQ(p.Find("encoder.layer.0.dense.weight")->data,
            c.Find("encoder.layer.0.dense.weight")->data);
}

TEST(PruneEmbeddings, ExtraMetadataIsMerged) {
  const Checkpoint c = FiveByTwo();
  const auto plan = MakePlan(ReadLayout(c), std::vector<std::int32_t>{1});
  const Checkpoint p = PruneEmbeddings(c, plan, {{"selection_sha256", "abc"}});
  EXPECT_EQ(p.metadata.at("selection_sha256"), "abc");
}

TEST(ReadLayout, RejectsInconsistentMetadata) {
  Checkpoint c = FiveByTwo();
  c.metadata[kVocabSizeKey] = "6";
  EXPECT_THROW(ReadLayout(c), Error);
  c = FiveByTwo();
  c.metadata.erase(kTiedKey);
  EXPECT_THROW(ReadLayout(c), Error);
  c = FiveByTwo();
  c.metadata[kTiedKey] = "false";
  EXPECT_THROW(ReadLayout(c), Error);
  c = FiveByTwo();
  c.metadata[kEmbeddingKey] = "missing";
  EXPECT_THROW(ReadLayout(c), Error);
}

TEST(MakePlan, RejectsBadKeepSets) {
  const auto layout = ReadLayout(FiveByTwo());
  EXPECT_THROW(MakePlan(layout, std::vector<std::int32_t>{}), Error);
  EXPECT_THROW(MakePlan(layout, std::vector<std::int32_t>{5}), Error);
  EXPECT_THROW(MakePlan(layout, std::vector<std::int32_t>{-1}), Error);
}

TEST(SurgeryPlan, MismatchedPlanIsRejected) {
  const Checkpoint c = FiveByTwo();
  const Checkpoint big = testing::SmallCheckpoint(7, 2, 0, true);
  const auto plan = MakePlan(ReadLayout(big), std::vector<std::int32_t>{0, 1});
  EXPECT_THROW(PruneEmbeddings(c, plan), Error);
  auto broken = MakePlan(ReadLayout(c), std::vector<std::int32_t>{0, 1});
  broken.remap[1] = 0;
  EXPECT_THROW(broken.Validate(), Error);
}

TEST(PruneCheckpointFile, MatchesInMemoryPrune) {
  const auto dir = testing::TempDir("surgery_stream");
  for (bool tied : {true, false}) {
    const Checkpoint c = testing::SmallCheckpoint(64, 8, 3, tied, tied ? 1 : 2);
    container::Save(dir / "in.bin", c);
    const std::vector<std::int32_t> keep = {0, 1, 2, 3, 4, 9, 33, 63};
    const auto plan = MakePlan(ReadLayout(c), keep);
    PruneCheckpointFile(dir / "in.bin", dir / "out.bin", plan, {{"k", "v"}});
    container::Save(dir / "mem.bin", PruneEmbeddings(c, plan, {{"k", "v"}}));
    EXPECT_EQ(io::ReadFile(dir / "out.bin"), io::ReadFile(dir / "mem.bin"));
  }
}

TEST(PruneCheckpointFile, TiedHeadMustMatchEmbedding) {
  const auto dir = testing::TempDir("surgery_tied");
  Checkpoint c = FiveByTwo();
  Tensor head = *c.Find(kDefaultEmbeddingTensor);
  head.data[0] ^= 1;
  c.Add("lm_head.weight", head);
  c.metadata[kOutputHeadKey] = "lm_head.weight";
  container::Save(dir / "in.bin", c);
  const auto plan = MakePlan(ReadLayout(c), std::vector<std::int32_t>{0, 2});
  EXPECT_THROW(PruneCheckpointFile(dir / "in.bin", dir / "out.bin", plan), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "out.bin"));
  EXPECT_THROW(PruneEmbeddings(c, plan), Error);
}

TEST(SizeReport, IdenticalAndPruned) {
  const Checkpoint c = testing::SmallCheckpoint(100, 4, 1, true);
  EXPECT_EQ(MakeSizeReport(c, c).reduction_fraction, 0.0);
  Checkpoint meta_only = c;
  meta_only.metadata["note"] = "x";
  EXPECT_EQ(MakeSizeReport(c, meta_only).reduction_fraction, 0.0);
  std::vector<std::int32_t> keep(50);
  std::iota(keep.begin(), keep.end(), 0);
  const Checkpoint p = PruneEmbeddings(c, MakePlan(ReadLayout(c), keep));
  const SizeReport r = MakeSizeReport(c, p);
  // 50 embedding rows of width 4 plus 50 bias entries.
  EXPECT_EQ(r.params_before - r.params_after, 250u);
  EXPECT_EQ(r.bytes_before - r.bytes_after, 1000u);
  EXPECT_DOUBLE_EQ(r.reduction_fraction, 250.0 / static_cast<double>(r.params_before));
}

}  // namespace
}  // namespace maftprep::surgery
