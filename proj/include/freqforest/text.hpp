#pragma once

// Helpers shared by the line-oriented text formats.

#include <charconv>
#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "freqforest/errors.hpp"

namespace freqforest::text {

// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw IoError("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline std::optional<double> parse_double(std::string_view token) {
  double value = 0.0;
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

inline std::optional<std::size_t> parse_size(std::string_view token) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

// Identifiers written into the text formats may not contain whitespace or '#'.
inline bool is_token(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '#') return false;
  }
  return true;
}

// Yields tokenized non-blank lines with '#' comments stripped, tracking the
// 1-based line number for error messages.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  // Returns false at end of input.
  bool next() {
    while (std::getline(in_, line_)) {
      ++line_no_;
      const auto hash = line_.find('#');
      if (hash != std::string::npos) line_.erase(hash);
      tokens_ = split(line_);
      if (!tokens_.empty()) return true;
    }
    tokens_.clear();
    return false;
  }

  const std::vector<std::string_view>& tokens() const noexcept { return tokens_; }
  std::size_t line() const noexcept { return line_no_; }
  const std::string& source() const noexcept { return source_; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }

  // Advances and fails with `what` if the input ended.
  void require_next(const std::string& what) {
    if (!next()) throw ParseError(source_, line_no_, "unexpected end of file, expected " + what);
  }

  double number(std::size_t index, std::string_view field) const {
    if (index >= tokens_.size()) fail("missing " + std::string(field));
    const auto v = parse_double(tokens_[index]);
    if (!v) fail("malformed number '" + std::string(tokens_[index]) + "' for " + std::string(field));
    return *v;
  }

  std::size_t count(std::size_t index, std::string_view field) const {
    if (index >= tokens_.size()) fail("missing " + std::string(field));
    const auto v = parse_size(tokens_[index]);
    if (!v) fail("malformed integer '" + std::string(tokens_[index]) + "' for " + std::string(field));
    return *v;
  }

  void expect_size(std::size_t n, std::string_view what) const {
    if (tokens_.size() != n) {
      fail("expected " + std::to_string(n) + " fields for " + std::string(what) + ", found " +
           std::to_string(tokens_.size()));
    }
  }

  void expect_keyword(std::string_view keyword) const {
    if (tokens_.empty() || tokens_[0] != keyword) fail("expected '" + std::string(keyword) + "'");
  }

 private:
  std::istream& in_;
  std::string source_;
  std::string line_;
  std::vector<std::string_view> tokens_;
  std::size_t line_no_ = 0;
};

}  // namespace freqforest::text
