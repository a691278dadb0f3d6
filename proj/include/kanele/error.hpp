#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kanele {

/// Error categories. The CLI prints the code as a stable, greppable token.
enum class ErrorCode {
  invalid_argument,
  config,
  data,
  schema,
  invariant,
  overflow,
  numeric,
  io,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// JSON document violations; `path()` is a JSON pointer into the offending document.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message)
      : Error(ErrorCode::schema, path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace kanele
