#pragma once

#include "phasectl/errors.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace phasectl::binio {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

inline void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

inline void put_f64(std::string& out, double v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

// Sequential reader over an in-memory blob; every failure names the byte offset.
class Reader {
 public:
  Reader(std::string_view bytes, std::string context)
      : bytes_(bytes), context_(std::move(context)) {}

  void expect_magic(std::string_view magic, std::uint8_t version) {
    need(magic.size() + 1, "header");
    if (bytes_.substr(pos_, magic.size()) != magic) {
      fail("bad magic, expected \"" + std::string(magic) + "\"");
    }
    pos_ += magic.size();
    auto got = static_cast<std::uint8_t>(bytes_[pos_]);
    if (got != version) {
      fail("unsupported version " + std::to_string(got));
    }
    ++pos_;
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    double v;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    if (!std::isfinite(v)) fail(std::string("non-finite ") + what);
    pos_ += 8;
    return v;
  }

  void expect_end() {
    if (pos_ != bytes_.size()) fail("trailing bytes after payload");
  }

  std::size_t pos() const { return pos_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(context_ + ": " + msg + " at byte " + std::to_string(pos_));
  }

 private:
  void need(std::size_t count, const char* what) {
    if (bytes_.size() - pos_ < count) {
      fail(std::string("truncated ") + what + " (need " + std::to_string(count) +
           " bytes, " + std::to_string(bytes_.size() - pos_) + " left)");
    }
  }

  std::string_view bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

}  // namespace phasectl::binio
