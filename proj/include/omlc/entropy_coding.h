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

// Static-model range coding of quantized latents.
//
// The coder keeps a 32-bit range and a 33-bit low register with deferred
// carry propagation (one cached byte plus a run of pending 0xFF bytes).
// Frequencies use 16-bit precision. The always-zero leading byte is not
// emitted, and the flush writes only the leading non-zero bytes of a code
// value inside the final interval; the decoder reads missing tail bytes as
// zero. An empty message therefore encodes to zero bytes.

#ifndef OMLC_ENTROPY_CODING_H_
#define OMLC_ENTROPY_CODING_H_

#include <cstdint>
#include <span>
#include <vector>

#include "omlc/codec.h"

namespace omlc {

inline constexpr int kFrequencyBits = 16;
inline constexpr uint32_t kFrequencyTotal = 1u << kFrequencyBits;
inline constexpr int kDefaultSymbolMin = -127;
inline constexpr int kDefaultSymbolMax = 127;

// Per-channel cumulative frequencies over [symbol_min, symbol_max] followed
// by one escape slot. cumulative[c] has num_slots() + 1 entries, starting at
// 0 and ending at 2^16.
struct CdfTable {
  int symbol_min = kDefaultSymbolMin;
  int symbol_max = kDefaultSymbolMax;
  std::vector<std::vector<uint32_t>> cumulative;

  int num_channels() const { return static_cast<int>(cumulative.size()); }
  int num_slots() const { return symbol_max - symbol_min + 2; }
  int escape_slot() const { return symbol_max - symbol_min + 1; }
  uint32_t Frequency(int channel, int slot) const {
    return cumulative[channel][slot + 1] - cumulative[channel][slot];
  }
};

// Quantizes the logistic pmf of every channel to integer frequencies with a
// floor of 1 per slot, distributing the rest by largest remainder.
CdfTable BuildCdfTable(const EntropyModel& model,
                       int symbol_min = kDefaultSymbolMin,
                       int symbol_max = kDefaultSymbolMax);

// Largest-remainder quantization of arbitrary non-negative masses.
std::vector<uint32_t> QuantizeFrequencies(std::span<const double> masses);

class RangeEncoder {
 public:
  // Codes the interval [start, start + size) out of 2^total_bits.
  void Encode(uint32_t start, uint32_t size, int total_bits);
  std::vector<uint8_t> Finish();

 private:
  void ShiftLow();
  void Emit(uint8_t byte);

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  bool skipped_lead_ = false;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  // Reads past the end of `payload` yield zero bytes, up to the four a
  // flush may omit; beyond that the decoder throws kTruncated.
  explicit RangeDecoder(std::span<const uint8_t> payload);

  // Returns the target cumulative frequency; must be followed by Consume().
  uint32_t Peek(int total_bits);
  void Consume(uint32_t start, uint32_t size);

 private:
  uint8_t NextByte();

  std::span<const uint8_t> in_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t step_ = 0;
};

// Single-channel sequence coding with channel `channel` of the table.
// Values outside the table range are sent as escape + raw 16-bit literal.
std::vector<uint8_t> RangeEncode(std::span<const int32_t> symbols,
                                 const CdfTable& table, int channel = 0);
std::vector<int32_t> RangeDecode(std::span<const uint8_t> payload,
                                 const CdfTable& table, size_t count,
                                 int channel = 0);

// Whole latent, channel-major, each channel with its own frequencies.
std::vector<uint8_t> EncodeSymbols(const QuantizedLatent& z,
                                   const CdfTable& table);
QuantizedLatent DecodeSymbols(std::span<const uint8_t> payload,
                              const CdfTable& table, const Shape& shape);

// Ideal code length under the quantized table, counting 16 literal bits
// per escaped value.
double TableRateBits(const QuantizedLatent& z, const CdfTable& table);

inline uint64_t MeasuredBits(std::span<const uint8_t> payload) {
  return 8 * static_cast<uint64_t>(payload.size());
}

}  // namespace omlc

#endif  // OMLC_ENTROPY_CODING_H_
