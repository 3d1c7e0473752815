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

#include "omlc/bitstream.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "omlc/error.h"

namespace omlc {
namespace {

constexpr uint8_t kMagic[4] = {'O', 'M', 'C', '1'};

class ByteWriter {
 public:
  void U8(uint8_t v) { out_.push_back(v); }
  void U16(uint16_t v) {
    U8(static_cast<uint8_t>(v >> 8));
    U8(static_cast<uint8_t>(v));
  }
  void U32(uint32_t v) {
    U16(static_cast<uint16_t>(v >> 16));
    U16(static_cast<uint16_t>(v));
  }
  void Bytes(std::span<const uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
  }
  std::vector<uint8_t> Take() { return std::move(out_); }

 private:
  std::vector<uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> in) : in_(in) {}
  uint8_t U8() {
    Need(1);
    return in_[pos_++];
  }
  uint16_t U16() {
    const uint16_t hi = U8();
    return static_cast<uint16_t>((hi << 8) | U8());
  }
  uint32_t U32() {
    const uint32_t hi = U16();
    return (hi << 16) | U16();
  }
  std::span<const uint8_t> Bytes(size_t n) {
    Need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  size_t remaining() const { return in_.size() - pos_; }

 private:
  void Need(size_t n) const {
    if (in_.size() - pos_ < n) {
      throw Error(ErrorCode::kTruncated, "container truncated at byte " +
                                             std::to_string(in_.size()));
    }
  }
  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

void ValidateHeader(const ContainerHeader& h, ErrorCode code) {
  auto fail = [code](const std::string& msg) {
    throw Error(code, "container header: " + msg);
  };
  if (h.width == 0 || h.height == 0) fail("zero image dimension");
  if (h.patch_size == 0) fail("zero patch size");
  if (h.num_lambdas == 0) fail("K must be >= 1");
  if (h.metric != MetricId::kMse && h.metric != MetricId::kMsssim) {
    fail("unknown metric id " + std::to_string(static_cast<int>(h.metric)));
  }
}

}  // namespace

uint16_t DoubleToHalfBits(double x) {
  const uint16_t sign = std::signbit(x) ? 0x8000 : 0;
  if (std::isnan(x)) return sign | 0x7E00;
  const double a = std::fabs(x);
  // 65520 is the midpoint between the largest half (65504) and 2^16.
  if (a >= 65520.0) return sign | 0x7C00;
  if (a < 0x1p-14) {
    // Subnormal: multiples of 2^-24. A result of 1024 is the smallest normal.
    const auto q = static_cast<uint16_t>(std::nearbyint(a * 0x1p24));
    return sign | q;
  }
  int exp = 0;
  const double m = std::frexp(a, &exp);  // a = m * 2^exp, m in [0.5, 1)
  int e = exp - 1;
  auto frac = static_cast<uint32_t>(std::nearbyint((2.0 * m - 1.0) * 1024.0));
  if (frac == 1024) {
    frac = 0;
    ++e;
  }
  return sign | static_cast<uint16_t>(((e + 15) << 10) | frac);
}

double HalfBitsToDouble(uint16_t bits) {
  const double sign = (bits & 0x8000) ? -1.0 : 1.0;
  const int e = (bits >> 10) & 0x1F;
  const int frac = bits & 0x3FF;
  if (e == 0) return sign * std::ldexp(frac, -24);
  if (e == 31) {
    return frac == 0 ? sign * std::numeric_limits<double>::infinity()
                     : std::numeric_limits<double>::quiet_NaN();
  }
  return sign * std::ldexp(1024 + frac, e - 25);
}

size_t PatchCount(const ContainerHeader& header) {
  const size_t p = header.patch_size;
  return ((header.height + p - 1) / p) * ((header.width + p - 1) / p);
}

std::vector<uint8_t> WriteContainer(const Container& container) {
  const ContainerHeader& h = container.header;
  ValidateHeader(h, ErrorCode::kInvalidArgument);
  OMLC_CHECK_ARG(container.patches.size() == PatchCount(h),
                 "container has " + std::to_string(container.patches.size()) +
                     " patches, header implies " +
                     std::to_string(PatchCount(h)));
  ByteWriter w;
  w.Bytes(kMagic);
  w.U8(kContainerVersion);
  w.U16(h.width);
  w.U16(h.height);
  w.U16(h.patch_size);
  w.U8(h.num_lambdas);
  w.U8(static_cast<uint8_t>(h.metric));
  w.U8(h.quality_index);
  w.U32(h.model_checksum);
  for (const PatchRecord& p : container.patches) {
    OMLC_CHECK_ARG(p.lambda_bits.size() == h.num_lambdas,
                   "patch lambda count does not match K");
    OMLC_CHECK_ARG(p.payload.size() <= std::numeric_limits<uint32_t>::max(),
                   "payload too large");
    for (uint16_t bits : p.lambda_bits) w.U16(bits);
    w.U32(static_cast<uint32_t>(p.payload.size()));
    w.Bytes(p.payload);
  }
  return w.Take();
}

Container ReadContainer(std::span<const uint8_t> bytes) {
  const size_t head = std::min<size_t>(bytes.size(), 4);
  if (!std::equal(kMagic, kMagic + head, bytes.begin())) {
    throw Error(ErrorCode::kBadMagic, "not an OMC1 container");
  }
  if (head < 4) throw Error(ErrorCode::kTruncated, "container is truncated");
  ByteReader r(bytes.subspan(4));
  const uint8_t version = r.U8();
  if (version != kContainerVersion) {
    throw Error(ErrorCode::kBadVersion,
                "unsupported container version " + std::to_string(version));
  }
  Container c;
  ContainerHeader& h = c.header;
  h.width = r.U16();
  h.height = r.U16();
  h.patch_size = r.U16();
  h.num_lambdas = r.U8();
  h.metric = static_cast<MetricId>(r.U8());
  h.quality_index = r.U8();
  h.model_checksum = r.U32();
  ValidateHeader(h, ErrorCode::kFormat);
  const size_t n = PatchCount(h);
  c.patches.resize(n);
  for (PatchRecord& p : c.patches) {
    p.lambda_bits.resize(h.num_lambdas);
    for (uint16_t& bits : p.lambda_bits) bits = r.U16();
    const uint32_t len = r.U32();
    const auto payload = r.Bytes(len);
    p.payload.assign(payload.begin(), payload.end());
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kFormat,
                std::to_string(r.remaining()) + " trailing bytes in container");
  }
  return c;
}

BitBreakdown CountBits(const Container& container) {
  BitBreakdown b;
  b.framing_bits = 8 * kHeaderBytes;
  for (const PatchRecord& p : container.patches) {
    b.payload_bits += 8 * p.payload.size();
    b.side_info_bits += 16 * p.lambda_bits.size();
    b.framing_bits += 8 * kPayloadLengthBytes;
  }
  return b;
}

BppReport ComputeBpp(const BitBreakdown& bits, size_t num_pixels) {
  OMLC_CHECK_ARG(num_pixels > 0, "bpp needs a positive pixel count");
  const double n = static_cast<double>(num_pixels);
  BppReport r;
  r.total = static_cast<double>(bits.total_bits()) / n;
  r.payload = static_cast<double>(bits.payload_bits) / n;
  r.side_info = static_cast<double>(bits.side_info_bits) / n;
  r.framing = static_cast<double>(bits.framing_bits) / n;
  return r;
}

BppReport ContainerBpp(std::span<const uint8_t> bytes) {
  const Container c = ReadContainer(bytes);
  return ComputeBpp(CountBits(c), static_cast<size_t>(c.header.width) *
                                      c.header.height);
}

std::vector<PatchRect> PatchGrid(int height, int width, int patch_size) {
  OMLC_CHECK_ARG(height >= 1 && width >= 1, "image must be non-empty");
  OMLC_CHECK_ARG(patch_size >= 16 && patch_size % 16 == 0,
                 "patch size must be a positive multiple of 16");
  std::vector<PatchRect> rects;
  for (int top = 0; top < height; top += patch_size) {
    for (int left = 0; left < width; left += patch_size) {
      rects.push_back({top, left, std::min(patch_size, height - top),
                       std::min(patch_size, width - left)});
    }
  }
  return rects;
}

std::vector<Patch> Tile(const ImageTensor& x, int patch_size) {
  std::vector<Patch> patches;
  for (const PatchRect& r : PatchGrid(x.height(), x.width(), patch_size)) {
    patches.push_back({r, Crop(x, r.top, r.left, r.height, r.width)});
  }
  return patches;
}

ImageTensor Assemble(const std::vector<Patch>& patches, int height,
                     int width) {
  OMLC_CHECK_ARG(height >= 1 && width >= 1, "image must be non-empty");
  Tensor out(3, height, width);
  std::vector<uint8_t> covered(static_cast<size_t>(height) * width, 0);
  for (const Patch& p : patches) {
    const PatchRect& r = p.rect;
    OMLC_CHECK_ARG(r.top >= 0 && r.left >= 0 && r.height >= 1 &&
                       r.width >= 1 && r.top + r.height <= height &&
                       r.left + r.width <= width,
                   "patch outside the image");
    OMLC_CHECK_ARG(p.image.height() == r.height && p.image.width() == r.width,
                   "patch image does not match its rectangle");
    for (int y = 0; y < r.height; ++y) {
      for (int x = 0; x < r.width; ++x) {
        uint8_t& cov =
            covered[static_cast<size_t>(r.top + y) * width + r.left + x];
        OMLC_CHECK_ARG(cov == 0, "overlapping patches");
        cov = 1;
        for (int c = 0; c < 3; ++c) {
          out.at(c, r.top + y, r.left + x) = p.image.at(c, y, x);
        }
      }
    }
  }
  for (uint8_t cov : covered) OMLC_CHECK_ARG(cov == 1, "missing patch");
  return ImageTensor(std::move(out));
}

}  // namespace omlc
