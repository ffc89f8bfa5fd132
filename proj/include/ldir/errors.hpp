#pragma once

#include <stdexcept>
#include <string>

namespace ldir {

// Base class for all library errors. The three categories below map onto the
// CLI exit codes: ConfigError -> 2, ProviderError -> 3, IoError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// ---- configuration / precondition violations

class DimensionMismatch : public ConfigError {
 public:
  explicit DimensionMismatch(const std::string& what)
      : ConfigError("dimension mismatch: " + what) {}
};

class ZeroVector : public ConfigError {
 public:
  explicit ZeroVector(const std::string& what)
      : ConfigError("zero vector: " + what) {}
};

class KTooLarge : public ConfigError {
 public:
  explicit KTooLarge(const std::string& what)
      : ConfigError("k too large: " + what) {}
};

class InvalidN : public ConfigError {
 public:
  explicit InvalidN(const std::string& what)
      : ConfigError("invalid n: " + what) {}
};

class InvalidK : public ConfigError {
 public:
  explicit InvalidK(const std::string& what)
      : ConfigError("invalid k: " + what) {}
};

class EmptyInput : public ConfigError {
 public:
  explicit EmptyInput(const std::string& what)
      : ConfigError("empty input: " + what) {}
};

class CorpusTooSmall : public ConfigError {
 public:
  explicit CorpusTooSmall(const std::string& what)
      : ConfigError("corpus too small: " + what) {}
};

class EncoderMismatch : public ConfigError {
 public:
  explicit EncoderMismatch(const std::string& what)
      : ConfigError("encoder mismatch: " + what) {}
};

class LengthMismatch : public ConfigError {
 public:
  explicit LengthMismatch(const std::string& what)
      : ConfigError("length mismatch: " + what) {}
};

class DegenerateInput : public ConfigError {
 public:
  explicit DegenerateInput(const std::string& what)
      : ConfigError("degenerate input: " + what) {}
};

class EmptyQrels : public ConfigError {
 public:
  explicit EmptyQrels(const std::string& what)
      : ConfigError("empty qrels: " + what) {}
};

// ---- provider failures

class ProviderUnavailable : public ProviderError {
 public:
  explicit ProviderUnavailable(const std::string& what)
      : ProviderError("provider unavailable: " + what) {}
};

class MissingText : public ProviderError {
 public:
  explicit MissingText(const std::string& what)
      : ProviderError("missing text: " + what) {}
};

// ---- file / format failures

class ParseError : public IoError {
 public:
  explicit ParseError(const std::string& what)
      : IoError("parse error: " + what) {}
};

class DuplicateId : public IoError {
 public:
  explicit DuplicateId(const std::string& what)
      : IoError("duplicate id: " + what) {}
};

class VersionMismatch : public IoError {
 public:
  explicit VersionMismatch(const std::string& what)
      : IoError("version mismatch: " + what) {}
};

}  // namespace ldir
