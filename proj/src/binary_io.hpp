#pragma once

// Little-endian primitives shared by the FFB1 and AFM1 containers.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "filterlens/errors.hpp"

namespace filterlens::detail {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& os) : os_(os) {}

  void bytes(const char* data, std::size_t n) {
    os_.write(data, static_cast<std::streamsize>(n));
    if (!os_) throw IoError(written_, "write failed at byte " + std::to_string(written_));
    written_ += n;
  }
  void u8(std::uint8_t v) { bytes(reinterpret_cast<const char*>(&v), 1); }
  void u16(std::uint16_t v) {
    const std::array<char, 2> b{static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    bytes(b.data(), b.size());
  }
  void u32(std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    bytes(b.data(), b.size());
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  std::uint64_t written() const noexcept { return written_; }

 private:
  std::ostream& os_;
  std::uint64_t written_ = 0;
};

class LeReader {
 public:
  explicit LeReader(std::istream& is) : is_(is) {}

  void bytes(char* out, std::size_t n, const char* what) {
    is_.read(out, static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(is_.gcount());
    if (got != n) {
      throw FormatError(FormatError::Kind::Truncated, offset_ + got,
                        std::string("truncated while reading ") + what + " at byte " +
                            std::to_string(offset_ + got));
    }
    offset_ += n;
  }
  std::uint16_t u16(const char* what) {
    std::array<unsigned char, 2> b{};
    bytes(reinterpret_cast<char*>(b.data()), 2, what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32(const char* what) {
    std::array<unsigned char, 4> b{};
    bytes(reinterpret_cast<char*>(b.data()), 4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::istream& is_;
  std::uint64_t offset_ = 0;
};

}  // namespace filterlens::detail
