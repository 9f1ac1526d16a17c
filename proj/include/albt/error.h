#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace albt {

// Base class for every error the library raises. Subclasses name the failed
// contract so callers (and the CLI's exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidShape : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SequenceTooLong : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::size_t sentence, std::size_t position,
                  const std::string& what)
      : Error("sentence " + std::to_string(sentence) + ", position " +
              std::to_string(position) + ": " + what),
        sentence_(sentence),
        position_(position) {}
  std::size_t sentence() const { return sentence_; }
  std::size_t position() const { return position_; }

 private:
  std::size_t sentence_;
  std::size_t position_;
};

}  // namespace albt
