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

#include <cmath>
#include <set>

#include "maftprep/corpus.h"
#include "maftprep/error.h"
#include "maftprep/io.h"
#include "maftprep/random.h"

namespace maftprep::mlm {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

enum Stream : std::uint64_t { kSelect = 0, kCategory = 1, kRandomId = 2 };

constexpr char kManifestSchema[] = "maftprep-adapt-manifest/1";
constexpr char kPacking[] = "greedy-within-shard";

}  // namespace

void AdaptConfig::Validate() const {
  auto fail = [](const std::string& msg) { Fail(ErrorKind::kValidation, msg); };
  if (epochs < 0) fail("epochs must be >= 0");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (gradient_accumulation < 1) fail("gradient_accumulation must be >= 1");
  if (max_seq_len < static_cast<int>(kMinChunkLength)) {
    fail("max_seq_len must be >= " + std::to_string(kMinChunkLength));
  }
  if (!(mask_rate > 0.0 && mask_rate < 1.0)) fail("mask_rate must lie in (0, 1)");
  if (mask_frac < 0 || random_frac < 0 || keep_frac < 0 ||
      std::abs(mask_frac + random_frac + keep_frac - 1.0) > 1e-9) {
    fail("mask/random/keep fractions must be non-negative and sum to 1");
  }
}

ordered_json AdaptConfig::ToJson() const {
  return {{"epochs", epochs},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"gradient_accumulation", gradient_accumulation},
          {"max_seq_len", max_seq_len},
          {"mask_rate", mask_rate},
          {"mask_split", {mask_frac, random_frac, keep_frac}}};
}

AdaptConfig AdaptConfig::FromJson(const json& j) {
  AdaptConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.gradient_accumulation = j.value("gradient_accumulation", c.gradient_accumulation);
    c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
    c.mask_rate = j.value("mask_rate", c.mask_rate);
    if (j.contains("mask_split")) {
      const auto split = j.at("mask_split").get<std::vector<double>>();
      if (split.size() != 3) Fail(ErrorKind::kValidation, "mask_split needs 3 values");
      c.mask_frac = split[0];
      c.random_frac = split[1];
      c.keep_frac = split[2];
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kValidation, std::string("adapt config: ") + e.what());
  }
  c.Validate();
  return c;
}

AdaptConfig AdaptConfig::Preset(std::string_view name) {
  AdaptConfig c;
  if (name == "maft") return c;
  if (name == "maft-afriberta") {
    c.batch_size = 32;
    return c;
  }
  // Downstream fine-tuning presets.
  if (name == "ner") {
    c.epochs = 50;
    c.max_seq_len = 164;
    return c;
  }
  if (name == "topic") {
    c.epochs = 25;
    c.max_seq_len = 500;
    return c;
  }
  if (name == "sentiment" || name == "sentiment-xlmr") {
    c.epochs = 20;
    c.max_seq_len = 128;
    if (name == "sentiment-xlmr") c.learning_rate = 2e-5;
    return c;
  }
  Fail(ErrorKind::kUsage, "unknown preset '" + std::string(name) + "'");
}

std::vector<std::vector<PieceId>> ChunkTokens(std::span<const PieceId> tokens,
                                              std::size_t max_seq_len,
                                              PieceId bos, PieceId eos,
                                              std::size_t min_length) {
  if (max_seq_len < 3) Fail(ErrorKind::kUsage, "max_seq_len must leave room for a token");
  const std::size_t body = max_seq_len - 2;
  std::vector<std::vector<PieceId>> chunks;
  for (std::size_t pos = 0; pos < tokens.size(); pos += body) {
    const std::size_t n = std::min(body, tokens.size() - pos);
    const bool last = pos + n == tokens.size();
    if (last && pos > 0 && n < body && n + 2 < min_length) break;
    std::vector<PieceId> chunk;
    chunk.reserve(n + 2);
    chunk.push_back(bos);
    chunk.insert(chunk.end(), tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                 tokens.begin() + static_cast<std::ptrdiff_t>(pos + n));
    chunk.push_back(eos);
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

std::vector<std::vector<PieceId>> ChunkFile(const fs::path& path,
                                            const tokenizer::UnigramModel& model,
                                            std::size_t max_seq_len) {
  std::vector<PieceId> stream;
  tokenizer::EncodeFile(path, model, tokenizer::UnkMode::kMergeRuns, 1,
                        [&](std::size_t, const tokenizer::TokenSequence& seq) {
                          stream.insert(stream.end(), seq.ids.begin(), seq.ids.end());
                        });
  return ChunkTokens(stream, max_seq_len, model.special().bos, model.special().eos);
}

MaskStats& MaskStats::operator+=(const MaskStats& other) {
  maskable += other.maskable;
  selected += other.selected;
  masked += other.masked;
  randomized += other.randomized;
  kept += other.kept;
  special_selected += other.special_selected;
  return *this;
}

container::TensorFile MaskedBatch::ToTensors() const {
  container::TensorFile file;
  const std::vector<std::int64_t> shape = {static_cast<std::int64_t>(batch),
                                           static_cast<std::int64_t>(seq)};
  file.Add("input_ids", container::Tensor::FromInts(shape, input_ids));
  file.Add("labels", container::Tensor::FromInts(shape, labels));
  file.Add("attention_mask", container::Tensor::FromInts(shape, attention_mask));
  file.metadata["ignore_label"] = std::to_string(kIgnoreLabel);
  return file;
}

MaskedBatch MaskedBatch::FromTensors(const container::TensorFile& file) {
  MaskedBatch b;
  const auto* ids = file.Find("input_ids");
  const auto* labels = file.Find("labels");
  const auto* mask = file.Find("attention_mask");
  if (ids == nullptr || labels == nullptr || mask == nullptr) {
    Fail(ErrorKind::kValidation, "batch file lacks input_ids/labels/attention_mask");
  }
  if (ids->shape.size() != 2 || labels->shape != ids->shape || mask->shape != ids->shape) {
    Fail(ErrorKind::kValidation, "batch tensors must share one 2-D shape");
  }
  b.batch = static_cast<std::size_t>(ids->shape[0]);
  b.seq = static_cast<std::size_t>(ids->shape[1]);
  b.input_ids = ids->ToInts();
  b.labels = labels->ToInts();
  b.attention_mask = mask->ToInts();
  return b;
}

MaskedBatch MaskBatch(std::span<const std::vector<PieceId>> chunks,
                      const AdaptConfig& config,
                      const tokenizer::UnigramModel& model, std::uint64_t seed,
                      unsigned threads, std::uint64_t first_index) {
  if (chunks.empty()) Fail(ErrorKind::kUsage, "no sequences to mask");
  if (!(config.mask_rate >= 0.0 && config.mask_rate < 1.0)) {
    Fail(ErrorKind::kUsage, "mask_rate must lie in [0, 1)");
  }
  const auto& normal = model.normal_ids();
  if (normal.empty()) Fail(ErrorKind::kUsage, "model has no normal pieces");

  MaskedBatch b;
  b.batch = chunks.size();
  for (const auto& c : chunks) b.seq = std::max(b.seq, c.size());
  b.input_ids.assign(b.batch * b.seq, model.special().pad);
  b.labels.assign(b.batch * b.seq, kIgnoreLabel);
  b.attention_mask.assign(b.batch * b.seq, 0);

  std::vector<MaskStats> row_stats(b.batch);
  io::ParallelFor(b.batch, threads, [&](std::size_t row) {
    const auto& chunk = chunks[row];
    const std::uint64_t index = first_index + row;
    MaskStats& st = row_stats[row];
    for (std::size_t p = 0; p < chunk.size(); ++p) {
      const PieceId original = chunk[p];
      if (original < 0 || static_cast<std::size_t>(original) >= model.size()) {
        Fail(ErrorKind::kUsage, "sequence " + std::to_string(index) +
                                    " holds out-of-range id " + std::to_string(original));
      }
      const std::size_t at = row * b.seq + p;
      b.input_ids[at] = original;
      b.attention_mask[at] = 1;
      if (model.IsSpecial(original)) continue;
      ++st.maskable;
      if (random::ToUnit(random::CounterDraw(seed, index, p, kSelect)) >=
          config.mask_rate) {
        continue;
      }
      ++st.selected;
      b.labels[at] = original;
      const double u = random::ToUnit(random::CounterDraw(seed, index, p, kCategory));
      if (u < config.mask_frac) {
        b.input_ids[at] = model.special().mask;
        ++st.masked;
      } else if (u < config.mask_frac + config.random_frac) {
        const auto pick = random::ToBounded(
            random::CounterDraw(seed, index, p, kRandomId), normal.size());
        b.input_ids[at] = normal[static_cast<std::size_t>(pick)];
        ++st.randomized;
      } else {
        ++st.kept;
      }
    }
  });
  for (const auto& st : row_stats) b.stats += st;
  return b;
}

ordered_json BuildManifest(const AdaptConfig& config, const ManifestInputs& inputs) {
  config.Validate();
  auto require = [](const fs::path& p, const char* what) {
    if (p.empty() || !fs::exists(p)) {
      Fail(ErrorKind::kValidation, std::string(what) + " '" + p.string() +
                                       "' does not exist");
    }
  };
  require(inputs.corpus_manifest, "corpus manifest");
  require(inputs.tokenizer, "tokenizer");
  require(inputs.checkpoint, "checkpoint");
  if (!inputs.selection.empty()) require(inputs.selection, "selection");
  for (const auto& b : inputs.batches) require(b, "batch file");

  const auto corpus = corpus::CorpusManifest::Load(inputs.corpus_manifest);
  std::set<std::string> languages;
  for (const auto& s : corpus.shards) languages.insert(s.language);
  if (inputs.mode == "laft" && languages.size() != 1) {
    Fail(ErrorKind::kValidation, "laft mode needs exactly one language");
  }
  if (inputs.mode == "maft" && languages.size() < 2) {
    Fail(ErrorKind::kValidation, "maft mode needs at least two languages");
  }
  if (inputs.mode != "maft" && inputs.mode != "laft") {
    Fail(ErrorKind::kUsage, "mode must be maft or laft");
  }

  auto artifact = [](const fs::path& p) {
    return ordered_json{{"path", p.generic_string()},
                        {"fingerprint", io::FingerprintFile(p)}};
  };
  ordered_json m;
  m["schema"] = kManifestSchema;
  m["mode"] = inputs.mode;
  m["languages"] = languages;
  m["config"] = config.ToJson();
  m["packing"] = kPacking;
  m["corpus"] = artifact(inputs.corpus_manifest);
  ordered_json shards = ordered_json::array();
  const fs::path base = inputs.corpus_manifest.parent_path();
  for (const auto& s : corpus.shards) {
    shards.push_back({{"path", (base / s.path).generic_string()},
                      {"language", s.language},
                      {"group", s.group}});
  }
  m["corpus"]["shards"] = std::move(shards);
  m["tokenizer"] = artifact(inputs.tokenizer);
  m["checkpoint"] = artifact(inputs.checkpoint);
  if (!inputs.selection.empty()) m["selection"] = artifact(inputs.selection);
  ordered_json batches = ordered_json::array();
  for (const auto& b : inputs.batches) batches.push_back(artifact(b));
  m["batches"] = std::move(batches);
  return m;
}

void EmitManifest(const AdaptConfig& config, const ManifestInputs& inputs,
                  const fs::path& out) {
  io::WriteFileAtomic(out, BuildManifest(config, inputs).dump(2) + "\n");
}

}  // namespace maftprep::mlm
