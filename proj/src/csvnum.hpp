#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>

namespace phasectl::csvnum {

// Shortest decimal that round-trips to the same double; "inf", "-inf", "nan" otherwise.
inline std::string format(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Whole-string parse; returns false on junk or trailing characters.
inline bool parse(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

}  // namespace phasectl::csvnum
