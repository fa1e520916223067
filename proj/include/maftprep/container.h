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

#ifndef MAFTPREP_CONTAINER_H_
#define MAFTPREP_CONTAINER_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace maftprep::container {

// Self-describing tensor file:
//   u64 little-endian header length N
//   N bytes of JSON: {"__metadata__": {str: str}, name: {"dtype": "F32",
//                     "shape": [...], "data_offsets": [begin, end]}, ...}
//   payload; offsets are relative to its start, contiguous and ascending.
// Only F32 and I32 are accepted; anything else is rejected.

enum class DType { kF32, kI32 };

const char* DTypeName(DType dtype);
constexpr std::size_t kElementSize = 4;

using Metadata = std::map<std::string, std::string>;

struct TensorInfo {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::int64_t> shape;
  std::uint64_t begin = 0;
  std::uint64_t end = 0;

  std::uint64_t numel() const;
  std::uint64_t nbytes() const { return numel() * kElementSize; }
};

struct Header {
  std::vector<TensorInfo> tensors;  // payload order
  Metadata metadata;
  std::uint64_t payload_offset = 0;  // 8 + N

  const TensorInfo* Find(std::string_view name) const;
  std::uint64_t payload_bytes() const;
};

// Assigns contiguous offsets in the given order and serializes the header
// (JSON padded with spaces to a multiple of 8 bytes), length prefix included.
std::string EncodeHeader(std::vector<TensorInfo>& tensors,
                         const Metadata& metadata);

// Parses and validates the header of an open stream positioned at 0.
// `file_size` is used to detect truncated payloads.
Header ReadHeader(std::istream& in, std::uint64_t file_size,
                  const std::string& source);
Header ReadHeader(const std::filesystem::path& path);

struct Tensor {
  DType dtype = DType::kF32;
  std::vector<std::int64_t> shape;
  std::vector<std::uint8_t> data;  // row-major, little-endian

  std::uint64_t numel() const;
  static Tensor FromFloats(std::vector<std::int64_t> shape,
                           std::span<const float> values);
  static Tensor FromInts(std::vector<std::int64_t> shape,
                         std::span<const std::int32_t> values);
  std::vector<float> ToFloats() const;
  std::vector<std::int32_t> ToInts() const;

  bool operator==(const Tensor&) const = default;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// In-memory tensor map that keeps insertion (payload) order.
struct TensorFile {
  std::vector<NamedTensor> tensors;
  Metadata metadata;

  const Tensor* Find(std::string_view name) const;
  Tensor* Find(std::string_view name);
  void Add(std::string name, Tensor tensor);
};

TensorFile Load(const std::filesystem::path& path);
void Save(const std::filesystem::path& path, const TensorFile& file);

// Writes tensors one at a time in header order, then renames into place.
class StreamWriter {
 public:
  StreamWriter(std::filesystem::path path, std::vector<TensorInfo> tensors,
               const Metadata& metadata);
  ~StreamWriter();
  StreamWriter(const StreamWriter&) = delete;
  StreamWriter& operator=(const StreamWriter&) = delete;

  void Write(std::span<const std::uint8_t> bytes);
  void Commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::vector<TensorInfo> tensors_;
  std::size_t next_ = 0;
  std::ofstream out_;
  bool committed_ = false;
};

// Reads one tensor's payload from an open container stream.
std::vector<std::uint8_t> ReadPayload(std::istream& in, const Header& header,
                                      const TensorInfo& info,
                                      const std::string& source);

}  // namespace maftprep::container

#endif  // MAFTPREP_CONTAINER_H_
