#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

namespace lfr::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

/// Appends little-endian records to a byte buffer.
class Writer {
 public:
  void bytes(const void* p, std::size_t n);
  void tag(std::string_view four);
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }
  void f64s(const double* p, std::size_t n) { bytes(p, n * sizeof(double)); }
  void str(std::string_view s);

  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

/// Reads records back; every read is bounds-checked and throws IoError.
class Reader {
 public:
  explicit Reader(std::string data) : buf_(std::move(data)) {}

  void bytes(void* p, std::size_t n);
  void expect_tag(std::string_view four);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void f64s(double* p, std::size_t n);
  std::string str();
  bool done() const { return pos_ == buf_.size(); }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace lfr::io
