#pragma once

#include <charconv>
#include <string>

namespace riskrrt {

/// Shortest round-trip decimal form, locale independent. Used by every
/// serializer so that identical values always print identical bytes.
inline std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

/// Fixed-precision form for rendering output.
inline std::string fmt_fixed(double v, int precision) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace riskrrt
