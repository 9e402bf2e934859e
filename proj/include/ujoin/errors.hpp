#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ujoin {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable page/file contents.
class StorageError : public Error {
 public:
  StorageError(const std::string& what, std::uint32_t page_id)
      : Error(what + " (page " + std::to_string(page_id) + ")"), page_id_(page_id) {}
  explicit StorageError(const std::string& what) : Error(what) {}

  std::uint32_t page_id() const noexcept { return page_id_; }

 private:
  std::uint32_t page_id_ = 0xFFFFFFFFu;
};

/// A record identifier referenced by a join pipeline is missing from its relation.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// An index no longer matches the relation it was built on.
class StaleIndexError : public Error {
 public:
  using Error::Error;
};

/// Invalid generator or experiment parameters.
class SpecError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A bench CSV whose header or rows do not follow the result schema.
class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace ujoin
