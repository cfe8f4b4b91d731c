#pragma once

#include <stdexcept>
#include <string>

namespace dysfluency {

/// Base of every error the library reports.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Input bytes or text are malformed (corrupt WAV header, unsupported codec,
/// bad CSV row, malformed alignment).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A RuleConfig value or patch violates the configuration invariants.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Too little speech to estimate a speaking rate.
class InsufficientSpeechError : public Error {
public:
    using Error::Error;
};

/// A session, event, or other named entity does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// A reference went stale (e.g. feedback against a superseded report).
class ConflictError : public Error {
public:
    using Error::Error;
};

/// An upload exceeds the configured size cap.
class PayloadTooLargeError : public Error {
public:
    using Error::Error;
};

}  // namespace dysfluency
