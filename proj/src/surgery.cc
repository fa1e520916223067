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

#include <algorithm>
#include <cstring>
#include <fstream>

#include "maftprep/error.h"
#include "maftprep/io.h"

namespace maftprep::surgery {

namespace fs = std::filesystem;
using container::DType;
using container::Header;
using container::Metadata;
using container::Tensor;
using container::TensorInfo;

namespace {

std::uint64_t ParseCount(const Metadata& meta, const char* key) {
  const auto it = meta.find(key);
  if (it == meta.end()) {
    Fail(ErrorKind::kValidation, std::string("checkpoint metadata lacks '") + key + "'");
  }
  try {
    std::size_t used = 0;
    const auto v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    Fail(ErrorKind::kValidation, std::string("metadata '") + key +
                                     "' is not a count: " + it->second);
  }
}

std::optional<std::string> OptionalName(const Metadata& meta, const char* key) {
  const auto it = meta.find(key);
  if (it == meta.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

Header HeaderOf(const Checkpoint& ckpt) {
  Header h;
  h.metadata = ckpt.metadata;
  for (const auto& t : ckpt.tensors) {
    h.tensors.push_back({t.name, t.tensor.dtype, t.tensor.shape, 0, 0});
  }
  return h;
}

const TensorInfo& Require(const Header& h, const std::string& name,
                          const char* role) {
  const TensorInfo* t = h.Find(name);
  if (t == nullptr) {
    Fail(ErrorKind::kValidation, std::string(role) + " tensor '" + name + "' is missing");
  }
  if (t->dtype != DType::kF32) {
    Fail(ErrorKind::kValidation, std::string(role) + " tensor '" + name + "' is not F32");
  }
  return *t;
}

// Does this tensor get row-selected, and with what row width (elements)?
std::optional<std::uint64_t> RowWidth(const SurgeryPlan& plan,
                                      const TensorInfo& info) {
  const bool matrix = info.name == plan.embedding_tensor ||
                      plan.output_head_tensor == info.name;
  if (matrix) return info.numel() / static_cast<std::uint64_t>(info.shape[0]);
  if (plan.output_bias_tensor == info.name) return 1;
  return std::nullopt;
}

std::vector<std::uint8_t> GatherRows(std::span<const std::uint8_t> src,
                                     std::uint64_t row_bytes,
                                     std::span<const std::int64_t> rows) {
  std::vector<std::uint8_t> out(rows.size() * row_bytes);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::memcpy(out.data() + r * row_bytes,
                src.data() + static_cast<std::uint64_t>(rows[r]) * row_bytes,
                row_bytes);
  }
  return out;
}

TensorInfo PrunedInfo(const SurgeryPlan& plan, const TensorInfo& info) {
  TensorInfo out = info;
  if (RowWidth(plan, info).has_value()) {
    out.shape[0] = static_cast<std::int64_t>(plan.keep_rows.size());
  }
  return out;
}

Metadata PrunedMetadata(const Metadata& meta, const SurgeryPlan& plan,
                        const Metadata& extra) {
  Metadata out = meta;
  out[kVocabSizeKey] = std::to_string(plan.keep_rows.size());
  for (const auto& [k, v] : extra) out[k] = v;
  return out;
}

void CheckPlanAgainst(const VocabLayout& layout, const SurgeryPlan& plan) {
  plan.Validate();
  if (plan.embedding_tensor != layout.embedding_tensor ||
      plan.tied != layout.tied ||
      plan.output_head_tensor != layout.output_head_tensor ||
      plan.output_bias_tensor != layout.output_bias_tensor) {
    Fail(ErrorKind::kMismatch, "surgery plan does not match the checkpoint layout");
  }
  if (plan.remap.size() != layout.vocab_size) {
    Fail(ErrorKind::kMismatch, "surgery plan covers " +
                                   std::to_string(plan.remap.size()) +
                                   " rows, checkpoint has " +
                                   std::to_string(layout.vocab_size));
  }
}

}  // namespace

VocabLayout ReadLayout(const Header& header) {
  const Metadata& meta = header.metadata;
  VocabLayout layout;
  layout.embedding_tensor =
      OptionalName(meta, kEmbeddingKey).value_or(kDefaultEmbeddingTensor);
  layout.output_head_tensor = OptionalName(meta, kOutputHeadKey);
  layout.output_bias_tensor = OptionalName(meta, kOutputBiasKey);
  const auto tied = meta.find(kTiedKey);
  if (tied == meta.end() || (tied->second != "true" && tied->second != "false")) {
    Fail(ErrorKind::kValidation,
         std::string("checkpoint metadata needs '") + kTiedKey + "' = true|false");
  }
  layout.tied = tied->second == "true";
  layout.vocab_size = ParseCount(meta, kVocabSizeKey);

  const TensorInfo& emb = Require(header, layout.embedding_tensor, "embedding");
  if (emb.shape.size() != 2) {
    Fail(ErrorKind::kValidation, "embedding tensor must be 2-D");
  }
  if (static_cast<std::uint64_t>(emb.shape[0]) != layout.vocab_size) {
    Fail(ErrorKind::kValidation,
         "vocab_size " + std::to_string(layout.vocab_size) +
             " does not match embedding rows " + std::to_string(emb.shape[0]));
  }
  layout.hidden_dim = static_cast<std::uint64_t>(emb.shape[1]);
  if (meta.contains(kHiddenDimKey) &&
      ParseCount(meta, kHiddenDimKey) != layout.hidden_dim) {
    Fail(ErrorKind::kValidation, "hidden_dim does not match embedding columns");
  }
  if (layout.output_head_tensor) {
    const TensorInfo& head = Require(header, *layout.output_head_tensor, "output head");
    if (head.shape != emb.shape) {
      Fail(ErrorKind::kValidation, "output head shape differs from embedding");
    }
  }
  if (layout.output_bias_tensor) {
    const TensorInfo& bias = Require(header, *layout.output_bias_tensor, "output bias");
    if (bias.shape.size() != 1 ||
        static_cast<std::uint64_t>(bias.shape[0]) != layout.vocab_size) {
      Fail(ErrorKind::kValidation, "output bias must have vocab_size entries");
    }
  }
  if (!layout.tied && !layout.output_head_tensor) {
    Fail(ErrorKind::kValidation, "untied checkpoint must name its output head");
  }
  return layout;
}

VocabLayout ReadLayout(const Checkpoint& ckpt) { return ReadLayout(HeaderOf(ckpt)); }

void ValidateCheckpoint(const Checkpoint& ckpt) {
  for (const auto& t : ckpt.tensors) {
    if (t.tensor.dtype != DType::kF32) {
      Fail(ErrorKind::kValidation, "model tensor '" + t.name + "' is not F32");
    }
    if (t.tensor.data.size() != t.tensor.numel() * container::kElementSize) {
      Fail(ErrorKind::kValidation, "tensor '" + t.name + "' buffer does not match shape");
    }
  }
  const VocabLayout layout = ReadLayout(ckpt);
  if (layout.tied && layout.output_head_tensor &&
      ckpt.Find(*layout.output_head_tensor)->data !=
          ckpt.Find(layout.embedding_tensor)->data) {
    Fail(ErrorKind::kValidation,
         "tied checkpoint stores an output head that differs from the embedding");
  }
}

Checkpoint LoadCheckpoint(const fs::path& path) {
  Checkpoint ckpt = container::Load(path);
  try {
    ValidateCheckpoint(ckpt);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
  return ckpt;
}

void SurgeryPlan::Validate() const {
  if (keep_rows.empty()) Fail(ErrorKind::kUsage, "surgery plan keeps no rows");
  std::size_t mapped = 0;
  for (std::size_t old = 0; old < remap.size(); ++old) {
    if (remap[old] < 0) continue;
    const auto n = static_cast<std::size_t>(remap[old]);
    if (n >= keep_rows.size() || keep_rows[n] != static_cast<std::int64_t>(old)) {
      Fail(ErrorKind::kValidation, "surgery remap is not a contiguous injection");
    }
    ++mapped;
  }
  if (mapped != keep_rows.size()) {
    Fail(ErrorKind::kValidation, "surgery remap does not cover every kept row");
  }
  if (tied && output_head_tensor && output_head_tensor == embedding_tensor) {
    Fail(ErrorKind::kValidation, "output head cannot alias the embedding name");
  }
}

SurgeryPlan MakePlan(const VocabLayout& layout, std::span<const std::int32_t> keep) {
  std::vector<std::int64_t> rows(keep.begin(), keep.end());
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  if (rows.empty()) Fail(ErrorKind::kUsage, "keep-set is empty");
  if (rows.front() < 0 || static_cast<std::uint64_t>(rows.back()) >= layout.vocab_size) {
    Fail(ErrorKind::kUsage, "keep id out of range for " +
                                std::to_string(layout.vocab_size) + " embedding rows");
  }
  SurgeryPlan plan;
  plan.embedding_tensor = layout.embedding_tensor;
  plan.output_head_tensor = layout.output_head_tensor;
  plan.output_bias_tensor = layout.output_bias_tensor;
  plan.tied = layout.tied;
  plan.remap.assign(layout.vocab_size, -1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    plan.remap[static_cast<std::size_t>(rows[i])] = static_cast<std::int64_t>(i);
  }
  plan.keep_rows = std::move(rows);
  return plan;
}

Checkpoint PruneEmbeddings(const Checkpoint& ckpt, const SurgeryPlan& plan,
                           const Metadata& extra_metadata) {
  ValidateCheckpoint(ckpt);
  CheckPlanAgainst(ReadLayout(ckpt), plan);
  Checkpoint out;
  out.metadata = PrunedMetadata(ckpt.metadata, plan, extra_metadata);
  for (const auto& t : ckpt.tensors) {
    const TensorInfo info{t.name, t.tensor.dtype, t.tensor.shape, 0, 0};
    const auto width = RowWidth(plan, info);
    if (!width) {
      out.tensors.push_back(t);
      continue;
    }
    Tensor pruned;
    pruned.dtype = t.tensor.dtype;
    pruned.shape = PrunedInfo(plan, info).shape;
    pruned.data = GatherRows(t.tensor.data, *width * container::kElementSize,
                             plan.keep_rows);
    out.tensors.push_back({t.name, std::move(pruned)});
  }
  return out;
}

void PruneCheckpointFile(const fs::path& src, const fs::path& dst,
                         const SurgeryPlan& plan, const Metadata& extra_metadata) {
  std::ifstream in(src, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + src.string());
  const Header header = container::ReadHeader(in, fs::file_size(src), src.string());
  for (const auto& t : header.tensors) {
    if (t.dtype != DType::kF32) {
      Fail(ErrorKind::kValidation, "model tensor '" + t.name + "' is not F32");
    }
  }
  const VocabLayout layout = ReadLayout(header);
  CheckPlanAgainst(layout, plan);

  std::vector<TensorInfo> out_infos;
  for (const auto& t : header.tensors) out_infos.push_back(PrunedInfo(plan, t));
  container::StreamWriter writer(
      dst, out_infos, PrunedMetadata(header.metadata, plan, extra_metadata));

  std::string embedding_digest;
  std::string head_digest;
  for (const auto& info : header.tensors) {
    std::vector<std::uint8_t> data =
        container::ReadPayload(in, header, info, src.string());
    if (layout.tied && layout.output_head_tensor) {
      const std::string_view bytes(reinterpret_cast<const char*>(data.data()),
                                   data.size());
      if (info.name == layout.embedding_tensor) embedding_digest = io::Sha256Hex(bytes);
      if (info.name == *layout.output_head_tensor) head_digest = io::Sha256Hex(bytes);
    }
    if (const auto width = RowWidth(plan, info)) {
      data = GatherRows(data, *width * container::kElementSize, plan.keep_rows);
    }
    writer.Write(data);
  }
  if (embedding_digest != head_digest) {
    Fail(ErrorKind::kValidation,
         "tied checkpoint stores an output head that differs from the embedding");
  }
  writer.Commit();
}

std::uint64_t ParamCount(const Header& header) {
  std::optional<std::string> skip;
  if (header.metadata.contains(kTiedKey) &&
      header.metadata.at(kTiedKey) == "true") {
    skip = OptionalName(header.metadata, kOutputHeadKey);
  }
  std::uint64_t total = 0;
  for (const auto& t : header.tensors) {
    if (skip && t.name == *skip) continue;
    total += t.numel();
  }
  return total;
}

std::uint64_t ParamCount(const Checkpoint& ckpt) { return ParamCount(HeaderOf(ckpt)); }

nlohmann::ordered_json SizeReport::ToJson() const {
  return {{"params_before", params_before},
          {"params_after", params_after},
          {"reduction_fraction", reduction_fraction},
          {"bytes_before", bytes_before},
          {"bytes_after", bytes_after}};
}

SizeReport MakeSizeReport(const Header& before, const Header& after) {
  SizeReport r;
  r.params_before = ParamCount(before);
  r.params_after = ParamCount(after);
  r.reduction_fraction =
      r.params_before == 0
          ? 0.0
          : 1.0 - static_cast<double>(r.params_after) /
                      static_cast<double>(r.params_before);
  for (const auto& t : before.tensors) r.bytes_before += t.nbytes();
  for (const auto& t : after.tensors) r.bytes_after += t.nbytes();
  return r;
}

SizeReport MakeSizeReport(const Checkpoint& before, const Checkpoint& after) {
  return MakeSizeReport(HeaderOf(before), HeaderOf(after));
}

}  // namespace maftprep::surgery
