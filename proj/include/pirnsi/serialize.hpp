#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace pirnsi {

/// Little-endian byte writer for the canonical wire/file encodings.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    buf_.push_back(std::uint8_t(v));
    buf_.push_back(std::uint8_t(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void bytes(const std::uint8_t* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  void bytes(const std::vector<std::uint8_t>& v) { bytes(v.data(), v.size()); }

  std::vector<std::uint8_t> take() { return std::move(buf_); }
  const std::vector<std::uint8_t>& data() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  explicit ByteReader(const std::vector<std::uint8_t>& v) : p_(v.data()), n_(v.size()) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    auto* p = take(2);
    return std::uint16_t(p[0]) | std::uint16_t(p[1]) << 8;
  }
  std::uint32_t u32() {
    auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return v;
  }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    auto* p = take(n);
    return std::vector<std::uint8_t>(p, p + n);
  }
  bool done() const { return off_ == n_; }
  std::size_t remaining() const { return n_ - off_; }

 private:
  const std::uint8_t* take(std::size_t n) {
    if (off_ + n > n_) throw std::runtime_error("serialize: truncated input");
    const std::uint8_t* r = p_ + off_;
    off_ += n;
    return r;
  }
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t off_ = 0;
};

/// SHA-256 hex digest of a byte buffer (transcript fixtures).
std::string sha256_hex(const std::vector<std::uint8_t>& data);

}  // namespace pirnsi
