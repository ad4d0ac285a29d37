#pragma once

#include <stdexcept>
#include <string>

namespace vidsearch {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument or input data violates a documented precondition.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// A file or payload could not be parsed into the expected shape.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Records refer to ids that do not exist (e.g. dangling sentence video_id).
class ReferentialError : public Error {
public:
    using Error::Error;
};

/// No ground-truth caption is available for a clip.
class MissingCaptionError : public Error {
public:
    using Error::Error;
};

/// Query tokenizes to nothing.
class InvalidQueryError : public Error {
public:
    using Error::Error;
};

/// Network or remote-service failure.
class TransportError : public Error {
public:
    using Error::Error;
};

}  // namespace vidsearch
