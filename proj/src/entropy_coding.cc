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

#include "omlc/entropy_coding.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "omlc/error.h"

namespace omlc {
namespace {

constexpr uint32_t kTopValue = 1u << 24;
// Bytes the decoder may synthesize past the end of a payload: the encoder
// drops trailing zero bytes of its final code value.
constexpr size_t kMaxImplicitBytes = 4;

void CheckChannel(const CdfTable& table, int channel) {
  OMLC_CHECK_ARG(channel >= 0 && channel < table.num_channels(),
                 "cdf table has no channel " + std::to_string(channel));
}

void EncodeValue(int32_t v, const CdfTable& table, int channel,
                 RangeEncoder* enc) {
  const std::vector<uint32_t>& cum = table.cumulative[channel];
  if (v >= table.symbol_min && v <= table.symbol_max) {
    const int slot = v - table.symbol_min;
    enc->Encode(cum[slot], cum[slot + 1] - cum[slot], kFrequencyBits);
    return;
  }
  if (v < std::numeric_limits<int16_t>::min() ||
      v > std::numeric_limits<int16_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument,
                "latent value " + std::to_string(v) +
                    " exceeds the 16-bit escape literal");
  }
  const int slot = table.escape_slot();
  enc->Encode(cum[slot], cum[slot + 1] - cum[slot], kFrequencyBits);
  const auto raw = static_cast<uint16_t>(static_cast<int16_t>(v));
  enc->Encode(raw >> 8, 1, 8);
  enc->Encode(raw & 0xFF, 1, 8);
}

int32_t DecodeValue(const CdfTable& table, int channel, RangeDecoder* dec) {
  const std::vector<uint32_t>& cum = table.cumulative[channel];
  const uint32_t target = dec->Peek(kFrequencyBits);
  const auto it = std::upper_bound(cum.begin(), cum.end(), target);
  const int slot = static_cast<int>(it - cum.begin()) - 1;
  dec->Consume(cum[slot], cum[slot + 1] - cum[slot]);
  if (slot != table.escape_slot()) return table.symbol_min + slot;
  const uint32_t hi = dec->Peek(8);
  dec->Consume(hi, 1);
  const uint32_t lo = dec->Peek(8);
  dec->Consume(lo, 1);
  return static_cast<int16_t>(static_cast<uint16_t>((hi << 8) | lo));
}

}  // namespace

std::vector<uint32_t> QuantizeFrequencies(std::span<const double> masses) {
  const size_t n = masses.size();
  OMLC_CHECK_ARG(n >= 1 && n <= kFrequencyTotal,
                 "slot count must be in [1, 65536]");
  const uint32_t available = kFrequencyTotal - static_cast<uint32_t>(n);
  double total = 0.0;
  for (double m : masses) {
    OMLC_CHECK_ARG(m >= 0.0 && std::isfinite(m), "masses must be finite >= 0");
    total += m;
  }
  std::vector<uint32_t> freq(n, 1);
  std::vector<double> remainder(n, 0.0);
  uint32_t assigned = 0;
  if (total > 0.0) {
    for (size_t i = 0; i < n; ++i) {
      const double exact = masses[i] / total * available;
      const auto base = static_cast<uint32_t>(std::floor(exact));
      freq[i] += base;
      assigned += base;
      remainder[i] = exact - base;
    }
  }
  // Floating-point rounding can leave the floors a few counts off in either
  // direction; fix up by remainder order.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return remainder[a] > remainder[b];
  });
  size_t k = 0;
  while (assigned < available) {
    ++freq[order[k % n]];
    ++assigned;
    ++k;
  }
  while (assigned > available) {
    auto it = std::max_element(freq.begin(), freq.end());
    --*it;
    --assigned;
  }
  return freq;
}

CdfTable BuildCdfTable(const EntropyModel& model, int symbol_min,
                       int symbol_max) {
  OMLC_CHECK_ARG(symbol_min < symbol_max, "symbol_min must be < symbol_max");
  CdfTable table;
  table.symbol_min = symbol_min;
  table.symbol_max = symbol_max;
  const int slots = table.num_slots();
  OMLC_CHECK_ARG(static_cast<uint32_t>(slots) <= kFrequencyTotal,
                 "symbol range too wide for 16-bit frequencies");
  std::vector<double> masses(slots);
  for (int c = 0; c < model.channels(); ++c) {
    for (int v = symbol_min; v <= symbol_max; ++v) {
      masses[v - symbol_min] = model.Pmf(c, v);
    }
    masses[table.escape_slot()] = model.TailMass(c, symbol_min, symbol_max);
    const std::vector<uint32_t> freq = QuantizeFrequencies(masses);
    std::vector<uint32_t> cum(slots + 1, 0);
    for (int s = 0; s < slots; ++s) cum[s + 1] = cum[s] + freq[s];
    table.cumulative.push_back(std::move(cum));
  }
  return table;
}

// --- Range encoder -----------------------------------------------------------

void RangeEncoder::Emit(uint8_t byte) {
  if (!skipped_lead_) {
    // The code value lies in [0, 2^32): its leading byte is always zero.
    skipped_lead_ = true;
    return;
  }
  out_.push_back(byte);
}

void RangeEncoder::ShiftLow() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t pending = cache_;
    do {
      Emit(static_cast<uint8_t>(pending + carry));
      pending = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::Encode(uint32_t start, uint32_t size, int total_bits) {
  const uint32_t r = range_ >> total_bits;
  low_ += static_cast<uint64_t>(start) * r;
  range_ = size * r;
  while (range_ < kTopValue) {
    range_ <<= 8;
    ShiftLow();
  }
}

std::vector<uint8_t> RangeEncoder::Finish() {
  // Pick the value in [low, low + range) with the most trailing zero bytes;
  // the decoder supplies those zeros implicitly.
  int bytes = 4;
  uint64_t value = low_;
  for (int k = 0; k <= 4; ++k) {
    const uint64_t unit = uint64_t{1} << (32 - 8 * k);
    const uint64_t candidate = (low_ + unit - 1) / unit * unit;
    if (candidate <= low_ + range_ - 1) {
      bytes = k;
      value = candidate;
      break;
    }
  }
  low_ = value;
  for (int i = 0; i <= bytes; ++i) ShiftLow();
  return std::move(out_);
}

// --- Range decoder -----------------------------------------------------------

RangeDecoder::RangeDecoder(std::span<const uint8_t> payload) : in_(payload) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | NextByte();
}

uint8_t RangeDecoder::NextByte() {
  if (pos_ < in_.size()) return in_[pos_++];
  if (++pos_ > in_.size() + kMaxImplicitBytes) {
    throw Error(ErrorCode::kTruncated, "range decoder ran past the payload");
  }
  return 0;
}

uint32_t RangeDecoder::Peek(int total_bits) {
  step_ = range_ >> total_bits;
  const uint32_t value = code_ / step_;
  if (value >> total_bits != 0) {
    throw Error(ErrorCode::kFormat, "corrupt range-coded payload");
  }
  return value;
}

void RangeDecoder::Consume(uint32_t start, uint32_t size) {
  code_ -= start * step_;
  range_ = size * step_;
  while (range_ < kTopValue) {
    code_ = (code_ << 8) | NextByte();
    range_ <<= 8;
  }
}

// --- Sequence / latent coding ------------------------------------------------

std::vector<uint8_t> RangeEncode(std::span<const int32_t> symbols,
                                 const CdfTable& table, int channel) {
  CheckChannel(table, channel);
  RangeEncoder enc;
  for (int32_t v : symbols) EncodeValue(v, table, channel, &enc);
  return enc.Finish();
}

std::vector<int32_t> RangeDecode(std::span<const uint8_t> payload,
                                 const CdfTable& table, size_t count,
                                 int channel) {
  CheckChannel(table, channel);
  if (count > 0 && payload.empty()) {
    throw Error(ErrorCode::kTruncated, "empty payload for non-empty message");
  }
  RangeDecoder dec(payload);
  std::vector<int32_t> out(count);
  for (size_t i = 0; i < count; ++i) out[i] = DecodeValue(table, channel, &dec);
  return out;
}

std::vector<uint8_t> EncodeSymbols(const QuantizedLatent& z,
                                   const CdfTable& table) {
  if (z.shape.channels != table.num_channels()) {
    throw Error(ErrorCode::kShapeMismatch,
                "latent has " + std::to_string(z.shape.channels) +
                    " channels, table has " +
                    std::to_string(table.num_channels()));
  }
  RangeEncoder enc;
  const size_t plane =
      static_cast<size_t>(z.shape.height) * z.shape.width;
  for (int c = 0; c < z.shape.channels; ++c) {
    for (size_t i = 0; i < plane; ++i) {
      EncodeValue(z.values[c * plane + i], table, c, &enc);
    }
  }
  return enc.Finish();
}

QuantizedLatent DecodeSymbols(std::span<const uint8_t> payload,
                              const CdfTable& table, const Shape& shape) {
  if (shape.channels != table.num_channels()) {
    throw Error(ErrorCode::kShapeMismatch,
                "latent shape does not match the cdf table");
  }
  QuantizedLatent z{shape, std::vector<int32_t>(shape.size())};
  if (shape.size() > 0 && payload.empty()) {
    throw Error(ErrorCode::kTruncated, "empty payload for non-empty latent");
  }
  RangeDecoder dec(payload);
  const size_t plane = static_cast<size_t>(shape.height) * shape.width;
  for (int c = 0; c < shape.channels; ++c) {
    for (size_t i = 0; i < plane; ++i) {
      z.values[c * plane + i] = DecodeValue(table, c, &dec);
    }
  }
  return z;
}

double TableRateBits(const QuantizedLatent& z, const CdfTable& table) {
  const size_t plane = static_cast<size_t>(z.shape.height) * z.shape.width;
  double bits = 0.0;
  for (int c = 0; c < z.shape.channels; ++c) {
    for (size_t i = 0; i < plane; ++i) {
      const int32_t v = z.values[c * plane + i];
      const bool escaped = v < table.symbol_min || v > table.symbol_max;
      const int slot = escaped ? table.escape_slot() : v - table.symbol_min;
      bits -= std::log2(static_cast<double>(table.Frequency(c, slot)) /
                        kFrequencyTotal);
      if (escaped) bits += 16.0;
    }
  }
  return bits;
}

}  // namespace omlc
