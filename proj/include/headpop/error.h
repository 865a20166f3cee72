#ifndef HEADPOP_ERROR_H
#define HEADPOP_ERROR_H

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace headpop {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input data. `line` is 1-based when the error is tied to a line.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::optional<std::size_t> line = std::nullopt)
      : Error(line ? "line " + std::to_string(*line) + ": " + what : what), line_(line) {}
  std::optional<std::size_t> line() const { return line_; }

 private:
  std::optional<std::size_t> line_;
};

// Model files.
class FormatVersionError : public Error {
 public:
  using Error::Error;
};

class TruncatedFileError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss or parameter.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, std::string checkpoint)
      : NumericError(what + (checkpoint.empty() ? std::string(" (no checkpoint written)")
                                                : " (last good checkpoint: " + checkpoint + ")")),
        checkpoint_(std::move(checkpoint)) {}
  const std::string& checkpoint() const { return checkpoint_; }

 private:
  std::string checkpoint_;
};

}  // namespace headpop

#endif  // HEADPOP_ERROR_H
