#pragma once

#include <stdexcept>
#include <string>

namespace dqa {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON lines, COT steps, config files).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Duplicate ids and similar data integrity violations.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Connection failures and timeouts talking to a remote service.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Remote service answered, but not with a usable 2xx response.
class ServiceError : public Error {
 public:
  using Error::Error;
};

class ScriptExhaustedError : public Error {
 public:
  using Error::Error;
};

class ScriptMismatchError : public Error {
 public:
  using Error::Error;
};

/// A judge model produced output outside its closed answer vocabulary.
class JudgeFormatError : public Error {
 public:
  using Error::Error;
};

class RenderError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

/// Precondition on a metric or sampler input does not hold.
class DomainError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class ConstraintError : public Error {
 public:
  using Error::Error;
};

}  // namespace dqa
