#pragma once
// Text normalization shared by the lexical index and the column embedder.

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace colnet {

// Base error for all library failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, records, references).
struct DataError : Error {
  using Error::Error;
};

// A caller violated an operation's precondition.
struct PreconditionError : Error {
  using Error::Error;
};

inline std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Drops a leading "ns:" qualifier such as "dbr:" or "dbo:". A colon followed by
// whitespace ("Alien: Resurrection") is ordinary punctuation and is kept.
inline std::string_view strip_namespace(std::string_view s) {
  s = trim(s);
  std::size_t i = 0;
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return s;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c == ':') break;
    if (!(std::isalnum(c) || c == '-' || c == '_')) return s;
    ++i;
  }
  if (i + 1 >= s.size() || std::isspace(static_cast<unsigned char>(s[i + 1]))) return s;
  return s.substr(i + 1);
}

// Lowercases ASCII, turns punctuation and underscores into separators and
// splits on whitespace. Non-ASCII bytes pass through untouched.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : strip_namespace(text)) {
    auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && (std::isspace(c) || std::ispunct(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

inline std::set<std::string> token_set(std::string_view text) {
  auto tokens = tokenize(text);
  return {tokens.begin(), tokens.end()};
}

// |a ∩ b| / |a ∪ b|, zero when both are empty.
inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

// "dbr:Apple_Inc." -> "Apple Inc."
inline std::string label_from_id(std::string_view id) {
  std::string out(strip_namespace(id));
  std::replace(out.begin(), out.end(), '_', ' ');
  return std::string(trim(out));
}

}  // namespace colnet
