#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace filterlens {

/// Binary container parse failure. Carries the byte offset where parsing stopped.
class FormatError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, UnsupportedVersion, InvalidHeader, Truncated, NonFinite, InvalidValue };

  FormatError(Kind kind, std::uint64_t offset, const std::string& what);

  Kind kind() const noexcept { return kind_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::uint64_t offset_;
};

/// A sink refused bytes; `position` is the number of bytes successfully written before the failure.
class IoError : public std::runtime_error {
 public:
  IoError(std::uint64_t position, const std::string& what);
  std::uint64_t position() const noexcept { return position_; }

 private:
  std::uint64_t position_;
};

class CsvError : public std::runtime_error {
 public:
  enum class Kind { OutOfRange, DuplicateCell, Unparsable };

  CsvError(Kind kind, std::size_t line, const std::string& what);
  Kind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

/// Cluster list inconsistent with the Boolean matrix it claims to describe.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not agree (labels, filters, units, weight arrays).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite loss.
class TrainingFailure : public std::runtime_error {
 public:
  TrainingFailure(std::size_t epoch, const std::string& what);
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace filterlens
