#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace spaci {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ast_core / taxonomy
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

// injection
class NoLegalSite : public Error {
 public:
  using Error::Error;
};

class NoAnchor : public Error {
 public:
  using Error::Error;
};

class CollisionError : public Error {
 public:
  using Error::Error;
};

class SpanDriftError : public Error {
 public:
  using Error::Error;
};

class ToolchainError : public Error {
 public:
  using Error::Error;
};

// metrics
class EmptyBatch : public Error {
 public:
  EmptyBatch() : Error("empty batch: at least one score pair is required") {}
};

class MissingCompileStatus : public Error {
 public:
  MissingCompileStatus() : Error("score pair has no compile status") {}
};

// harness
class NoJsonFound : public Error {
 public:
  using Error::Error;
};

class SchemaViolation : public Error {
 public:
  SchemaViolation(std::string key, const std::string& what)
      : Error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class RangeViolation : public Error {
 public:
  RangeViolation(std::string key, long long value)
      : Error("value " + std::to_string(value) + " out of range for '" + key + "'"),
        key_(std::move(key)),
        value_(value) {}
  const std::string& key() const noexcept { return key_; }
  long long value() const noexcept { return value_; }

 private:
  std::string key_;
  long long value_;
};

class MissingBaseline : public Error {
 public:
  using Error::Error;
};

// corpus
class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class StratumEmpty : public Error {
 public:
  using Error::Error;
};

}  // namespace spaci
