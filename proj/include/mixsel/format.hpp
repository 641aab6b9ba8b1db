#ifndef MIXSEL_FORMAT_HPP
#define MIXSEL_FORMAT_HPP

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace mixsel {

// Shortest round-trip decimal form: parse(format_double(x)) == x bit-exactly,
// and re-serializing a parsed value reproduces the same bytes. This canonical
// form is what makes CSV round trips byte-identical.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double out = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a finite decimal number: '" + std::string(s) + "'");
  return out;
}

}  // namespace mixsel

#endif
