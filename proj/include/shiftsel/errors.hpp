#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shiftsel {

/// Precondition violation on caller-supplied values (bad label, bad ratio, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. `line` is 1-based for text formats; `offset` is a
/// byte offset for binary formats. Unused positions are zero.
class ParseError : public std::runtime_error {
 public:
  enum class Kind { kHeader, kNonNumeric, kNonFinite, kRagged, kDimension, kTruncated };

  ParseError(Kind kind, std::string message, std::size_t line, std::size_t offset);

  Kind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t line_;
  std::size_t offset_;
};

/// Filesystem failure (open, read, write) on `path`.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace shiftsel
