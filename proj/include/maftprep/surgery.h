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

#ifndef MAFTPREP_SURGERY_H_
#define MAFTPREP_SURGERY_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "maftprep/container.h"

namespace maftprep::surgery {

// Metadata keys of a model checkpoint.
inline constexpr char kVocabSizeKey[] = "vocab_size";
inline constexpr char kHiddenDimKey[] = "hidden_dim";
inline constexpr char kTiedKey[] = "tie_word_embeddings";
inline constexpr char kEmbeddingKey[] = "embedding_tensor";
inline constexpr char kOutputHeadKey[] = "output_head_tensor";
inline constexpr char kOutputBiasKey[] = "output_bias_tensor";

inline constexpr char kDefaultEmbeddingTensor[] =
    "embeddings.word_embeddings.weight";

using Checkpoint = container::TensorFile;

// Where the vocabulary-indexed tensors live, per the checkpoint metadata.
struct VocabLayout {
  std::string embedding_tensor;
  std::optional<std::string> output_head_tensor;
  std::optional<std::string> output_bias_tensor;
  bool tied = true;
  std::uint64_t vocab_size = 0;
  std::uint64_t hidden_dim = 0;
};

// Reads and checks the layout: tensors exist, are F32, have vocab_size rows
// (hidden_dim columns), and the tying flag is present.
VocabLayout ReadLayout(const container::Header& header);
VocabLayout ReadLayout(const Checkpoint& ckpt);

// Container validation plus the model invariants above; a tied checkpoint
// that also stores an output head must store an identical copy.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);
void ValidateCheckpoint(const Checkpoint& ckpt);

struct SurgeryPlan {
  std::string embedding_tensor;
  std::optional<std::string> output_head_tensor;
  std::optional<std::string> output_bias_tensor;
  bool tied = true;
  std::vector<std::int64_t> keep_rows;  // old ids, ascending
  std::vector<std::int64_t> remap;      // old id -> new id, -1 if dropped

  // remap injective, new ids contiguous from 0, consistent with keep_rows.
  void Validate() const;
};

// Builds the row selection for `keep` (sorted and deduplicated, so kept rows
// keep their relative order). Throws Error(kUsage) for out-of-range ids.
SurgeryPlan MakePlan(const VocabLayout& layout, std::span<const std::int32_t> keep);

// Row selection on the embedding, the untied output head and the output
// bias. Every other tensor is copied unchanged; vocab_size is updated and
// `extra_metadata` merged in.
Checkpoint PruneEmbeddings(const Checkpoint& ckpt, const SurgeryPlan& plan,
                           const container::Metadata& extra_metadata = {});

// File-to-file variant holding one tensor in memory at a time. The output is
// written to a temp file and renamed into place.
void PruneCheckpointFile(const std::filesystem::path& src,
                         const std::filesystem::path& dst,
                         const SurgeryPlan& plan,
                         const container::Metadata& extra_metadata = {});

// Sum of element counts; a tied output head stored alongside the embedding
// is counted once.
std::uint64_t ParamCount(const Checkpoint& ckpt);
std::uint64_t ParamCount(const container::Header& header);

struct SizeReport {
  std::uint64_t params_before = 0;
  std::uint64_t params_after = 0;
  double reduction_fraction = 0.0;
  std::uint64_t bytes_before = 0;  // tensor payload bytes
  std::uint64_t bytes_after = 0;

  nlohmann::ordered_json ToJson() const;
};

SizeReport MakeSizeReport(const Checkpoint& before, const Checkpoint& after);
SizeReport MakeSizeReport(const container::Header& before,
                          const container::Header& after);

}  // namespace maftprep::surgery

#endif  // MAFTPREP_SURGERY_H_
