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

#include "maftprep/container.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>
#include <set>

#include "json.hpp"
#include "maftprep/error.h"

namespace maftprep::container {

static_assert(std::endian::native == std::endian::little,
              "container payloads are little-endian");

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kMaxHeaderBytes = 256ull << 20;
constexpr std::string_view kMetadataKey = "__metadata__";

DType ParseDType(const std::string& name, const std::string& tensor) {
  if (name == "F32") return DType::kF32;
  if (name == "I32") return DType::kI32;
  Fail(ErrorKind::kValidation,
       "tensor '" + tensor + "' has unsupported dtype '" + name + "'");
}

std::uint64_t Numel(const std::vector<std::int64_t>& shape) {
  std::uint64_t n = 1;
  for (auto d : shape) {
    if (d < 0) Fail(ErrorKind::kValidation, "negative dimension");
    n *= static_cast<std::uint64_t>(d);
  }
  return n;
}

}  // namespace

const char* DTypeName(DType dtype) {
  return dtype == DType::kF32 ? "F32" : "I32";
}

std::uint64_t TensorInfo::numel() const { return Numel(shape); }

const TensorInfo* Header::Find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::uint64_t Header::payload_bytes() const {
  return tensors.empty() ? 0 : tensors.back().end;
}

std::string EncodeHeader(std::vector<TensorInfo>& tensors,
                         const Metadata& metadata) {
  ordered_json j;
  ordered_json meta = ordered_json::object();
  for (const auto& [k, v] : metadata) meta[k] = v;
  j[std::string(kMetadataKey)] = std::move(meta);
  std::uint64_t offset = 0;
  std::set<std::string> names;
  for (auto& t : tensors) {
    if (t.name == kMetadataKey || !names.insert(t.name).second) {
      Fail(ErrorKind::kValidation, "duplicate or reserved tensor name '" + t.name + "'");
    }
    t.begin = offset;
    t.end = offset + t.nbytes();
    offset = t.end;
    j[t.name] = {{"dtype", DTypeName(t.dtype)},
                 {"shape", t.shape},
                 {"data_offsets", {t.begin, t.end}}};
  }
  std::string body = j.dump();
  body.append((8 - body.size() % 8) % 8, ' ');
  std::string out(8, '\0');
  const std::uint64_t n = body.size();
  std::memcpy(out.data(), &n, sizeof(n));
  return out + body;
}

Header ReadHeader(std::istream& in, std::uint64_t file_size,
                  const std::string& source) {
  auto fail = [&](const std::string& msg) {
    Fail(ErrorKind::kValidation, source + ": " + msg);
  };
  std::uint64_t n = 0;
  if (file_size < 8 || !in.read(reinterpret_cast<char*>(&n), sizeof(n))) {
    fail("missing header length");
  }
  if (n > kMaxHeaderBytes || n > file_size - 8) {
    fail("header length " + std::to_string(n) + " exceeds file");
  }
  std::string text(n, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(n))) fail("short header");

  json j;
  std::set<std::string> keys;
  std::string duplicate;
  const json::parser_callback_t track_keys =
      [&](int depth, json::parse_event_t event, json& parsed) {
        if (depth == 1 && event == json::parse_event_t::key &&
            !keys.insert(parsed.get<std::string>()).second) {
          duplicate = parsed.get<std::string>();
        }
        return true;
      };
  try {
    j = json::parse(text, track_keys);
  } catch (const json::exception& e) {
    fail(std::string("malformed header: ") + e.what());
  }
  if (!j.is_object()) fail("header is not a JSON object");
  if (!duplicate.empty()) fail("duplicate tensor name '" + duplicate + "'");

  Header h;
  h.payload_offset = 8 + n;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == kMetadataKey) {
        for (const auto& [mk, mv] : value.items()) {
          h.metadata[mk] = mv.get<std::string>();
        }
        continue;
      }
      TensorInfo t;
      t.name = key;
      t.dtype = ParseDType(value.at("dtype").get<std::string>(), key);
      t.shape = value.at("shape").get<std::vector<std::int64_t>>();
      const auto offsets = value.at("data_offsets").get<std::vector<std::uint64_t>>();
      if (offsets.size() != 2 || offsets[1] < offsets[0]) {
        fail("tensor '" + key + "' has invalid data_offsets");
      }
      t.begin = offsets[0];
      t.end = offsets[1];
      if (t.end - t.begin != t.nbytes()) {
        fail("tensor '" + key + "' byte range does not match shape");
      }
      h.tensors.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    fail(std::string("malformed header: ") + e.what());
  }

  std::sort(h.tensors.begin(), h.tensors.end(),
            [](const TensorInfo& a, const TensorInfo& b) {
              return a.begin < b.begin || (a.begin == b.begin && a.end < b.end);
            });
  std::uint64_t expected = 0;
  for (const auto& t : h.tensors) {
    if (t.begin != expected) {
      fail("tensor '" + t.name + "' overlaps or leaves a gap in the payload");
    }
    expected = t.end;
    if (h.payload_offset + t.end > file_size) {
      fail("payload truncated inside tensor '" + t.name + "'");
    }
  }
  if (h.payload_offset + expected != file_size) {
    fail("trailing bytes after the last tensor");
  }
  return h;
}

Header ReadHeader(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  return ReadHeader(in, fs::file_size(path), path.string());
}

std::uint64_t Tensor::numel() const { return Numel(shape); }

Tensor Tensor::FromFloats(std::vector<std::int64_t> shape,
                          std::span<const float> values) {
  Tensor t;
  t.dtype = DType::kF32;
  t.shape = std::move(shape);
  if (t.numel() != values.size()) {
    Fail(ErrorKind::kUsage, "value count does not match shape");
  }
  t.data.resize(values.size_bytes());
  std::memcpy(t.data.data(), values.data(), values.size_bytes());
  return t;
}

Tensor Tensor::FromInts(std::vector<std::int64_t> shape,
                        std::span<const std::int32_t> values) {
  Tensor t;
  t.dtype = DType::kI32;
  t.shape = std::move(shape);
  if (t.numel() != values.size()) {
    Fail(ErrorKind::kUsage, "value count does not match shape");
  }
  t.data.resize(values.size_bytes());
  std::memcpy(t.data.data(), values.data(), values.size_bytes());
  return t;
}

std::vector<float> Tensor::ToFloats() const {
  if (dtype != DType::kF32) Fail(ErrorKind::kUsage, "tensor is not F32");
  std::vector<float> out(data.size() / sizeof(float));
  std::memcpy(out.data(), data.data(), data.size());
  return out;
}

std::vector<std::int32_t> Tensor::ToInts() const {
  if (dtype != DType::kI32) Fail(ErrorKind::kUsage, "tensor is not I32");
  std::vector<std::int32_t> out(data.size() / sizeof(std::int32_t));
  std::memcpy(out.data(), data.data(), data.size());
  return out;
}

const Tensor* TensorFile::Find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.tensor;
  }
  return nullptr;
}

Tensor* TensorFile::Find(std::string_view name) {
  for (auto& t : tensors) {
    if (t.name == name) return &t.tensor;
  }
  return nullptr;
}

void TensorFile::Add(std::string name, Tensor tensor) {
  if (Find(name) != nullptr) {
    Fail(ErrorKind::kValidation, "duplicate tensor name '" + name + "'");
  }
  if (tensor.data.size() != tensor.numel() * kElementSize) {
    Fail(ErrorKind::kValidation, "tensor '" + name + "' buffer does not match shape");
  }
  tensors.push_back({std::move(name), std::move(tensor)});
}

std::vector<std::uint8_t> ReadPayload(std::istream& in, const Header& header,
                                      const TensorInfo& info,
                                      const std::string& source) {
  std::vector<std::uint8_t> data(info.nbytes());
  in.seekg(static_cast<std::streamoff>(header.payload_offset + info.begin));
  if (!in.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(data.size()))) {
    Fail(ErrorKind::kIo, source + ": short read in tensor '" + info.name + "'");
  }
  return data;
}

TensorFile Load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  const Header header = ReadHeader(in, fs::file_size(path), path.string());
  TensorFile file;
  file.metadata = header.metadata;
  for (const auto& info : header.tensors) {
    Tensor t;
    t.dtype = info.dtype;
    t.shape = info.shape;
    t.data = ReadPayload(in, header, info, path.string());
    file.tensors.push_back({info.name, std::move(t)});
  }
  return file;
}

void Save(const fs::path& path, const TensorFile& file) {
  std::vector<TensorInfo> infos;
  for (const auto& t : file.tensors) {
    infos.push_back({t.name, t.tensor.dtype, t.tensor.shape, 0, 0});
  }
  StreamWriter writer(path, infos, file.metadata);
  for (const auto& t : file.tensors) writer.Write(t.tensor.data);
  writer.Commit();
}

StreamWriter::StreamWriter(fs::path path, std::vector<TensorInfo> tensors,
                           const Metadata& metadata)
    : path_(std::move(path)), tensors_(std::move(tensors)) {
  const std::string header = EncodeHeader(tensors_, metadata);
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  tmp_ = path_;
  tmp_ += ".tmp";
  out_.open(tmp_, std::ios::binary | std::ios::trunc);
  if (!out_) Fail(ErrorKind::kIo, "cannot write " + tmp_.string());
  out_.write(header.data(), static_cast<std::streamsize>(header.size()));
}

StreamWriter::~StreamWriter() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    fs::remove(tmp_, ec);
  }
}

void StreamWriter::Write(std::span<const std::uint8_t> bytes) {
  if (next_ >= tensors_.size()) {
    Fail(ErrorKind::kUsage, "more tensors written than declared");
  }
  const TensorInfo& info = tensors_[next_++];
  if (bytes.size() != info.nbytes()) {
    Fail(ErrorKind::kUsage, "tensor '" + info.name + "' has " +
                                std::to_string(bytes.size()) + " bytes, expected " +
                                std::to_string(info.nbytes()));
  }
  out_.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!out_) Fail(ErrorKind::kIo, "write failed for " + tmp_.string());
}

void StreamWriter::Commit() {
  if (next_ != tensors_.size()) {
    Fail(ErrorKind::kUsage, "not all declared tensors were written");
  }
  out_.close();
  if (!out_) Fail(ErrorKind::kIo, "write failed for " + tmp_.string());
  std::error_code ec;
  fs::rename(tmp_, path_, ec);
  if (ec) Fail(ErrorKind::kIo, "cannot rename into " + path_.string());
  committed_ = true;
}

}  // namespace maftprep::container
