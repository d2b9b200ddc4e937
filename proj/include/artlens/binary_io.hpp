#ifndef ARTLENS_BINARY_IO_HPP
#define ARTLENS_BINARY_IO_HPP

// Little-endian primitive encoding shared by the EMB1 and PRB1 formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace artlens::detail {

inline std::uint32_t byteswap32(std::uint32_t x) noexcept {
  return (x >> 24) | ((x >> 8) & 0xFF00U) | ((x << 8) & 0xFF0000U) | (x << 24);
}

class ByteWriter {
public:
  void raw(std::string_view bytes) { buf_.append(bytes); }

  void u32(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
    buf_.append(reinterpret_cast<const char*>(&v), sizeof v);
  }

  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v & 0xFFFFFFFFULL));
    u32(static_cast<std::uint32_t>(v >> 32));
  }

  void f32(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
      buf_.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
    } else {
      for (float f : values) u32(std::bit_cast<std::uint32_t>(f));
    }
  }

  const std::string& bytes() const noexcept { return buf_; }

private:
  std::string buf_;
};

class ByteReader {
public:
  explicit ByteReader(std::string_view bytes) noexcept : bytes_(bytes) {}

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  std::string_view raw(std::size_t n, const char* what) {
    need(n, what);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint32_t u32(const char* what) {
    std::uint32_t v;
    std::memcpy(&v, raw(sizeof v, what).data(), sizeof v);
    if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
    return v;
  }

  std::uint64_t u64(const char* what) {
    const std::uint64_t lo = u32(what);
    const std::uint64_t hi = u32(what);
    return lo | (hi << 32);
  }

  void f32(std::span<float> out, const char* what) {
    auto src = raw(out.size_bytes(), what);
    std::memcpy(out.data(), src.data(), src.size());
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& f : out) f = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(f)));
    }
  }

private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw FormatError(std::string("truncated ") + what);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

/// FNV-1a, 64-bit. Used for content fingerprints embedded in file footers.
inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

} // namespace artlens::detail

#endif // ARTLENS_BINARY_IO_HPP
