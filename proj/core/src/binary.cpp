#include "lfr/io/binary.hpp"

#include <cstring>
#include <system_error>

#include "lfr/errors.hpp"

namespace lfr::io {

void Writer::bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }

void Writer::tag(std::string_view four) {
  if (four.size() != 4) throw std::logic_error("tags are four bytes");
  bytes(four.data(), 4);
}

void Writer::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s.data(), s.size());
}

void Reader::bytes(void* p, std::size_t n) {
  if (n > buf_.size() - pos_) throw IoError("unexpected end of file");
  std::memcpy(p, buf_.data() + pos_, n);
  pos_ += n;
}

void Reader::expect_tag(std::string_view four) {
  char got[4];
  bytes(got, 4);
  if (std::string_view(got, 4) != four) throw IoError("bad magic: expected '" + std::string(four) + "'");
}

std::uint32_t Reader::u32() {
  std::uint32_t v;
  bytes(&v, sizeof v);
  return v;
}

std::uint64_t Reader::u64() {
  std::uint64_t v;
  bytes(&v, sizeof v);
  return v;
}

double Reader::f64() {
  double v;
  bytes(&v, sizeof v);
  return v;
}

void Reader::f64s(double* p, std::size_t n) {
  if (n > (buf_.size() - pos_) / sizeof(double)) throw IoError("unexpected end of file");
  bytes(p, n * sizeof(double));
}

std::string Reader::str() {
  const std::uint32_t n = u32();
  if (n > buf_.size() - pos_) throw IoError("unexpected end of file");
  std::string s(buf_.data() + pos_, n);
  pos_ += n;
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return data;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

}  // namespace lfr::io
