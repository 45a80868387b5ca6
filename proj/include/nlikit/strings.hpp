#pragma once

// strings.hpp — small text helpers used by ingestion, filtering and decoding.

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>

namespace nlikit {

inline bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

// Position of the first case-insensitive occurrence of `needle` in
// `haystack`, or npos.
inline std::size_t find_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty() || needle.size() > haystack.size()) {
    return std::string_view::npos;
  }
  const std::string h = to_lower(haystack);
  const std::string n = to_lower(needle);
  return h.find(n);
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
  return find_ci(haystack, needle) != std::string_view::npos;
}

inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

}  // namespace nlikit
