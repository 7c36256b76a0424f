#pragma once

// Little-endian framing shared by the dataset (GLAB) and model (GMOD) containers:
// 4 magic bytes, u16 version, payload, trailing CRC32 over everything before it.

#include "guidelab/core.hpp"

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

namespace guidelab::io {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  /// u32 length followed by the bytes.
  void text(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }

  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  void put_le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }

  std::vector<unsigned char> bytes_;
};

class ByteReader {
 public:
  ByteReader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  double f64() { return std::bit_cast<double>(get_le(8)); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  std::string text() { return raw(u32()); }

  std::size_t remaining() const { return size_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > size_ - pos_) throw FormatError(FormatError::Kind::truncated, "unexpected end of data");
  }

  std::uint64_t get_le(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{data_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(const unsigned char* data, std::size_t size) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, data, static_cast<uInt>(size));
  return static_cast<std::uint32_t>(crc);
}

/// Layout: magic, u16 version, u64 payload length, payload, CRC32 of everything before it.
inline std::vector<unsigned char> frame(std::string_view magic, std::uint16_t version,
                                        const std::vector<unsigned char>& payload) {
  ByteWriter w;
  w.raw(magic);
  w.u16(version);
  w.u64(payload.size());
  std::vector<unsigned char> out = w.bytes();
  out.insert(out.end(), payload.begin(), payload.end());
  const std::uint32_t crc = crc32_of(out.data(), out.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(crc >> (8 * i)));
  return out;
}

/// Validates magic, version, length and CRC, in that order, and returns the payload bytes.
inline std::vector<unsigned char> unframe(std::string_view magic, std::uint16_t version,
                                          const std::vector<unsigned char>& file) {
  const std::size_t header = magic.size() + 2 + 8;
  if (file.size() < magic.size()) {
    throw FormatError(FormatError::Kind::truncated, "file too short for magic bytes");
  }
  if (std::memcmp(file.data(), magic.data(), magic.size()) != 0) {
    throw FormatError(FormatError::Kind::bad_magic, "expected magic '" + std::string(magic) + "'");
  }
  if (file.size() < magic.size() + 2) throw FormatError(FormatError::Kind::truncated, "file too short for version");
  const std::uint16_t found = static_cast<std::uint16_t>(file[magic.size()] | (file[magic.size() + 1] << 8));
  if (found != version) {
    throw FormatError(FormatError::Kind::version_mismatch,
                      "format version " + std::to_string(found) + ", expected " + std::to_string(version));
  }
  if (file.size() < header) throw FormatError(FormatError::Kind::truncated, "file too short for header");
  std::uint64_t length = 0;
  for (int i = 0; i < 8; ++i) length |= std::uint64_t{file[magic.size() + 2 + static_cast<std::size_t>(i)]} << (8 * i);
  if (length > file.size() || file.size() - header < length + 4) {
    throw FormatError(FormatError::Kind::truncated, "file ends before the declared payload and checksum");
  }
  if (file.size() - header > length + 4) throw FormatError(FormatError::Kind::malformed, "trailing bytes after checksum");
  const std::size_t body = file.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= std::uint32_t{file[body + static_cast<std::size_t>(i)]} << (8 * i);
  if (crc32_of(file.data(), body) != stored) {
    throw FormatError(FormatError::Kind::checksum, "CRC32 mismatch");
  }
  return {file.begin() + static_cast<std::ptrdiff_t>(header), file.begin() + static_cast<std::ptrdiff_t>(body)};
}

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::io, "write failed for " + path);
}

}  // namespace guidelab::io
