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

#ifndef MAFTPREP_MLM_DATA_H_
#define MAFTPREP_MLM_DATA_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "maftprep/container.h"
#include "maftprep/tokenizer.h"

namespace maftprep::mlm {

using tokenizer::PieceId;

inline constexpr std::int32_t kIgnoreLabel = -100;
inline constexpr std::size_t kMinChunkLength = 8;

// Adaptation hyper-parameters. Defaults are the multilingual adaptive
// fine-tuning setting: 3 epochs at 5e-5, batch size 10.
struct AdaptConfig {
  int epochs = 3;
  double learning_rate = 5e-5;
  int batch_size = 10;
  int gradient_accumulation = 1;
  int max_seq_len = 256;
  double mask_rate = 0.15;
  double mask_frac = 0.8;
  double random_frac = 0.1;
  double keep_frac = 0.1;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static AdaptConfig FromJson(const nlohmann::json& j);

  // "maft", "maft-afriberta", "ner", "topic", "sentiment", "sentiment-xlmr".
  static AdaptConfig Preset(std::string_view name);
};

// Greedy packing: each chunk is bos, up to max_seq_len - 2 tokens, eos.
// Every token lands in some chunk except those of a trailing partial chunk
// shorter than `min_length` (bos/eos included) that follows at least one
// other chunk; that remainder is dropped.
std::vector<std::vector<PieceId>> ChunkTokens(std::span<const PieceId> tokens,
                                              std::size_t max_seq_len,
                                              PieceId bos, PieceId eos,
                                              std::size_t min_length = kMinChunkLength);

// Encodes every line of `path` and packs the concatenated stream.
std::vector<std::vector<PieceId>> ChunkFile(const std::filesystem::path& path,
                                            const tokenizer::UnigramModel& model,
                                            std::size_t max_seq_len);

struct MaskStats {
  std::uint64_t maskable = 0;  // non-special positions
  std::uint64_t selected = 0;
  std::uint64_t masked = 0;
  std::uint64_t randomized = 0;
  std::uint64_t kept = 0;
  std::uint64_t special_selected = 0;

  MaskStats& operator+=(const MaskStats& other);
};

// Row-major [batch x seq] matrices; rows are right-padded with the pad id.
struct MaskedBatch {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::vector<std::int32_t> input_ids;
  std::vector<std::int32_t> labels;
  std::vector<std::int32_t> attention_mask;
  MaskStats stats;

  container::TensorFile ToTensors() const;
  static MaskedBatch FromTensors(const container::TensorFile& file);
};

// Selects each non-special position with probability mask_rate; selected
// positions become the mask id, a uniform random normal piece, or stay, in
// mask/random/keep proportions. Draws are a pure function of (seed, global
// sequence index, position), so output does not depend on `threads`.
// `first_index` is the global index of chunks[0].
MaskedBatch MaskBatch(std::span<const std::vector<PieceId>> chunks,
                      const AdaptConfig& config,
                      const tokenizer::UnigramModel& model, std::uint64_t seed,
                      unsigned threads = 1, std::uint64_t first_index = 0);

struct ManifestInputs {
  std::filesystem::path corpus_manifest;
  std::filesystem::path tokenizer;
  std::filesystem::path checkpoint;
  std::filesystem::path selection;  // optional
  std::vector<std::filesystem::path> batches;  // optional
  std::string mode = "maft";  // maft | laft
};

// Binds corpus, tokenizer, checkpoint, selection and config into one JSON
// document (see docs/manifest.md). Referenced files must exist.
nlohmann::ordered_json BuildManifest(const AdaptConfig& config,
                                     const ManifestInputs& inputs);
void EmitManifest(const AdaptConfig& config, const ManifestInputs& inputs,
                  const std::filesystem::path& out);

}  // namespace maftprep::mlm

#endif  // MAFTPREP_MLM_DATA_H_
