// Copyright 2026 The OMLC Authors. All Rights Reserved.
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

// Container format for compressed images.
//
// All multi-byte fields are big-endian.
//
//   "OMC1"  version:u8  width:u16  height:u16  patch_size:u16
//   K:u8  metric_id:u8  quality_index:u8  model_checksum:u32
//   then for every patch in row-major order:
//   K x lambda:fp16  payload_len:u32  payload[payload_len]

#ifndef OMLC_BITSTREAM_H_
#define OMLC_BITSTREAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "omlc/image.h"

namespace omlc {

inline constexpr uint8_t kContainerVersion = 1;
inline constexpr size_t kHeaderBytes = 18;
inline constexpr size_t kPayloadLengthBytes = 4;

// IEEE 754 binary16, round to nearest even. NaN maps to a quiet NaN.
uint16_t DoubleToHalfBits(double x);
double HalfBitsToDouble(uint16_t bits);
inline double RoundToHalf(double x) {
  return HalfBitsToDouble(DoubleToHalfBits(x));
}

enum class MetricId : uint8_t { kMse = 0, kMsssim = 1 };

struct ContainerHeader {
  uint16_t width = 0;
  uint16_t height = 0;
  uint16_t patch_size = 0;
  uint8_t num_lambdas = 0;
  MetricId metric = MetricId::kMse;
  uint8_t quality_index = 0;
  uint32_t model_checksum = 0;
  bool operator==(const ContainerHeader&) const = default;
};

struct PatchRecord {
  std::vector<uint16_t> lambda_bits;
  std::vector<uint8_t> payload;
  bool operator==(const PatchRecord&) const = default;
};

struct Container {
  ContainerHeader header;
  std::vector<PatchRecord> patches;
  bool operator==(const Container&) const = default;
};

// ceil(height / patch_size) * ceil(width / patch_size).
size_t PatchCount(const ContainerHeader& header);

// Validates the header and patch count, then serializes.
std::vector<uint8_t> WriteContainer(const Container& container);
// Errors: kBadMagic, kBadVersion, kTruncated, kFormat (inconsistent fields
// or trailing bytes).
Container ReadContainer(std::span<const uint8_t> bytes);

// Bit accounting of a serialized container. The three parts sum to the
// total exactly.
struct BitBreakdown {
  uint64_t payload_bits = 0;
  uint64_t side_info_bits = 0;
  // Header plus per-patch length fields.
  uint64_t framing_bits = 0;
  uint64_t total_bits() const {
    return payload_bits + side_info_bits + framing_bits;
  }
};
BitBreakdown CountBits(const Container& container);

struct BppReport {
  double total = 0.0;
  double payload = 0.0;
  double side_info = 0.0;
  double framing = 0.0;
};
BppReport ComputeBpp(const BitBreakdown& bits, size_t num_pixels);
// Parses `bytes` and normalizes by the header's width * height.
BppReport ContainerBpp(std::span<const uint8_t> bytes);

struct PatchRect {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
  bool operator==(const PatchRect&) const = default;
};

// Row-major non-overlapping grid; boundary patches keep their true size.
std::vector<PatchRect> PatchGrid(int height, int width, int patch_size);

struct Patch {
  PatchRect rect;
  ImageTensor image;
};

// `patch_size` must be a positive multiple of 16.
std::vector<Patch> Tile(const ImageTensor& x, int patch_size);
// Inverse of Tile. Every pixel must be covered exactly once.
ImageTensor Assemble(const std::vector<Patch>& patches, int height,
                     int width);

}  // namespace omlc

#endif  // OMLC_BITSTREAM_H_
