// Copyright 2026 The NoPain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian primitives for the on-disk formats. Internal header.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "nopain/error.hpp"

namespace nopain::detail {

class ByteWriter {
 public:
  void magic(const char (&tag)[5]) {
    bytes_.insert(bytes_.end(), tag, tag + 4);
  }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t b = 0; b < sizeof(U); ++b)
      bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }

  std::vector<std::uint8_t> bytes_;
};

/// Bounds-checked cursor; every short read raises MalformedFile naming the
/// format.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string format)
      : bytes_(bytes), format_(std::move(format)) {}

  void expect_magic(const char (&tag)[5]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, tag, 4) != 0)
      throw MalformedFile(format_ + ": bad magic bytes");
    pos_ += 4;
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(get<std::uint64_t>()); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& format() const { return format_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      throw MalformedFile(format_ + ": truncated file");
  }
  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b)
      v |= static_cast<U>(bytes_[pos_ + b]) << (8 * b);
    pos_ += sizeof(U);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string format_;
};

/// Checks that `count` items of `item_size` bytes fit in `available` without
/// overflow.
inline bool payload_fits(std::uint64_t a, std::uint64_t b,
                         std::uint64_t item_size, std::uint64_t available) {
  if (a != 0 && b > UINT64_MAX / a) return false;
  const std::uint64_t items = a * b;
  if (items != 0 && item_size > UINT64_MAX / items) return false;
  return items * item_size <= available;
}

}  // namespace nopain::detail
