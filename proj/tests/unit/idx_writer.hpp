#pragma once

// Test-only IDX writer, the inverse of read_idx.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

namespace iadfp::test_support {

inline void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

inline void write_idx_images(const std::filesystem::path& path, std::uint32_t count, std::uint32_t rows,
                             std::uint32_t cols, const std::vector<std::uint8_t>& pixels) {
  std::ofstream out(path, std::ios::binary);
  put_be32(out, 0x00000803);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

inline void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  put_be32(out, 0x00000801);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

}  // namespace iadfp::test_support
