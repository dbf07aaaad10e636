#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace morphdis {

/// Base class for every data or contract error raised by the library.
/// The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValueError : public Error {
  using Error::Error;
};

class ParseError : public Error {
  using Error::Error;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class VersionError : public Error {
  using Error::Error;
};

class AlignmentError : public Error {
  using Error::Error;
};

class NormalizationError : public Error {
  using Error::Error;
};

class EmptyCorpus : public Error {
  using Error::Error;
};

class SchemaMismatch : public Error {
  using Error::Error;
};

class EmptyCandidates : public Error {
  using Error::Error;
};

class RemapError : public Error {
  using Error::Error;
};

class UnknownFeature : public Error {
  using Error::Error;
};

class LengthMismatch : public Error {
  using Error::Error;
};

class InconsistentMetric : public Error {
  using Error::Error;
};

/// A module error re-raised with the experiment stage it happened in.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace morphdis
