#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace glonet {

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string to_hex(std::uint64_t v);

/// Append/read little-endian primitives for the binary container formats.
struct ByteWriter {
  std::vector<std::uint8_t> bytes;
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(const std::string& s);
  void f64_array(const std::vector<double>& v);
};

struct ByteReader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;
  explicit ByteReader(const std::vector<std::uint8_t>& b) : bytes(b) {}
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  std::vector<double> f64_array(std::size_t n);
  void require(std::size_t n) const;
};

}  // namespace glonet
