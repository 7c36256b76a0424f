#pragma once

// Locale-independent number formatting. Doubles use the shortest representation
// that round-trips exactly, so text written here reloads bit-for-bit.

#include "guidelab/core.hpp"

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace guidelab::text {

inline std::string format(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline std::string format(long long v) { return std::to_string(v); }

/// Fixed-width lowercase hex, used for hashes and fingerprints.
inline std::string hex(std::uint64_t v) {
  char buf[17];
  static constexpr char digits[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[v & 0xf];
    v >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline bool try_parse(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

template <typename Int>
bool try_parse_int(std::string_view s, Int& out) {
  s = trim(s);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

inline double parse_double(std::string_view s, const std::string& what) {
  double v = 0;
  if (!try_parse(s, v)) throw InvalidArgument("cannot parse " + what + " from '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s, const std::string& what) {
  long long v = 0;
  if (!try_parse_int(s, v)) throw InvalidArgument("cannot parse " + what + " from '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::string join(const Vector& v, char sep = ',') {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format(v[i]);
  }
  return out;
}

inline Vector parse_vector(std::string_view s, const std::string& what) {
  const auto parts = split(s, ',');
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_double(parts[i], what);
  return v;
}

}  // namespace guidelab::text
